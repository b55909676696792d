"""Shallow-water fluxes, wave speeds and characteristic decompositions.

States are carried in equilibrium variables q = (eta, hu[, hv]) with the
bottom value b supplied alongside; the water height is h = eta - b.  The
moving-mesh flux is the physical flux measured relative to the grid,
H(w, q) = F(q) - w q, and interfaces are upwinded with a global
Lax-Friedrichs dissipation coefficient.
"""

from __future__ import annotations

import numpy as np

from .quadrature import GRAVITY

#: heights below this are treated as dry: velocities are zeroed outright
#: rather than regularized, so the limiter's tiny floor cannot manufacture
#: momentum.
H_DRY = 1e-10

#: dry threshold for characteristic decomposition fallback
H_ROE_MIN = 1e-8


def velocities(q, b):
    """(u[, v]) with hard zeroing below the dry threshold."""
    h = q[..., 0] - b
    wet = h > H_DRY
    inv = np.where(wet, 1.0 / np.where(wet, h, 1.0), 0.0)
    return [q[..., k] * inv for k in range(1, q.shape[-1])]


def physical_flux_1d(q, b):
    """f(q) for the 1D system; q = (eta, hu).  Returns (..., 2)."""
    h = np.maximum(q[..., 0] - b, 0.0)
    (u,) = velocities(q, b)
    out = np.empty_like(q)
    out[..., 0] = q[..., 1]
    out[..., 1] = q[..., 1] * u + 0.5 * GRAVITY * h * h
    return out


def physical_flux_2d(q, b):
    """(f1, f2) for the 2D system; q = (eta, hu, hv).  Returns (..., 3, 2)."""
    h = np.maximum(q[..., 0] - b, 0.0)
    u, v = velocities(q, b)
    p = 0.5 * GRAVITY * h * h
    f = np.empty(q.shape + (2,))
    f[..., 0, 0] = q[..., 1]
    f[..., 1, 0] = q[..., 1] * u + p
    f[..., 2, 0] = q[..., 2] * u
    f[..., 0, 1] = q[..., 2]
    f[..., 1, 1] = q[..., 1] * v
    f[..., 2, 1] = q[..., 2] * v + p
    return f


def ale_flux_normal(q, b, w_n, normal=None):
    """H(w, q) . n = F(q) . n - (w . n) q.

    1D: ``normal`` is None and ``w_n`` is the signed grid speed (normal +1).
    2D: ``normal`` has shape (..., 2) and ``w_n`` is w . n.
    """
    if normal is None:
        return physical_flux_1d(q, b) - np.asarray(w_n)[..., None] * q
    f = physical_flux_2d(q, b)
    fn = f[..., 0] * normal[..., 0][..., None] + f[..., 1] * normal[..., 1][..., None]
    return fn - np.asarray(w_n)[..., None] * q


def lax_friedrichs(qm, qp, bm, bp, w_n, alpha, normal=None):
    """Global Lax-Friedrichs ALE flux at interface points.

    qm/qp are the inside/outside traces, bm/bp the matching bottom traces.
    """
    hm = ale_flux_normal(qm, bm, w_n, normal)
    hp = ale_flux_normal(qp, bp, w_n, normal)
    return 0.5 * (hm + hp) - 0.5 * alpha * (qp - qm)


def bottom_flux(bm, bp, w_n, alpha):
    """Upwinded bottom-advection flux; enters the bottom update with + sign."""
    return 0.5 * w_n * (bm + bp) + 0.5 * alpha * (bp - bm)


def hydrostatic_flux(qm, qp, bm, bp, w_n, alpha, normal=None):
    """Hydrostatic-reconstruction modification of the interface flux.

    Star heights are measured above the higher of the two bottom traces and
    clamped at zero.  The mass correction is shared by both cells, but the
    pressure mismatch is a one-sided correction built from each cell's own
    trace, so the function returns the pair (flux seen by the minus-side
    cell, flux seen by the plus-side cell); mass components are identical.
    """
    bstar = np.maximum(bm, bp)
    hsm = np.maximum(0.0, qm[..., 0] - bstar)
    hsp = np.maximum(0.0, qp[..., 0] - bstar)
    qsm = qm.copy()
    qsp = qp.copy()
    qsm[..., 0] = hsm + bm
    qsp[..., 0] = hsp + bp
    flux = lax_friedrichs(qsm, qsp, bm, bp, w_n, alpha, normal)

    theta = (0.5 * (w_n + alpha) * (qsp[..., 0] - qp[..., 0])
             + 0.5 * (w_n - alpha) * (qsm[..., 0] - qm[..., 0]))
    flux[..., 0] += theta
    hm = np.maximum(qm[..., 0] - bm, 0.0)
    hp = np.maximum(qp[..., 0] - bp, 0.0)
    dpm = 0.5 * GRAVITY * (hm * hm - hsm * hsm)
    dpp = 0.5 * GRAVITY * (hp * hp - hsp * hsp)
    flux_m = flux
    flux_p = flux.copy()
    if normal is None:
        flux_m[..., 1] += dpm
        flux_p[..., 1] += dpp
    else:
        flux_m[..., 1] += dpm * normal[..., 0]
        flux_m[..., 2] += dpm * normal[..., 1]
        flux_p[..., 1] += dpp * normal[..., 0]
        flux_p[..., 2] += dpp * normal[..., 1]
    return flux_m, flux_p


def wave_speed(q, b, w, normal=None):
    """|(u - w) . n| + sqrt(g h) pointwise (ingredient of the global alpha)."""
    h = np.maximum(q[..., 0] - b, 0.0)
    vel = velocities(q, b)
    if normal is None:
        rel = np.abs(vel[0] - w)
    else:
        rel = np.abs((vel[0] - w[..., 0]) * normal[..., 0]
                     + (vel[1] - w[..., 1]) * normal[..., 1])
    return rel + np.sqrt(GRAVITY * h)


def roe_state(h_l, h_r, vel_l, vel_r):
    """Square-root-of-h weighted interface state (h_hat, velocities_hat)."""
    sl = np.sqrt(np.maximum(h_l, 0.0))
    sr = np.sqrt(np.maximum(h_r, 0.0))
    den = sl + sr
    den = np.where(den > 0.0, den, 1.0)
    vhat = [(sl * vl + sr * vr) / den for vl, vr in zip(vel_l, vel_r)]
    hhat = 0.5 * (h_l + h_r)
    return hhat, vhat


def eigen_1d(h_hat, u_hat):
    """Left/right eigenvector matrices and eigenvalues of the 1D flux.

    Returns (L, R, lams) with L @ R = I; raises on a dry interface state.
    """
    h_hat = np.asarray(h_hat, dtype=float)
    if np.any(h_hat < H_ROE_MIN):
        raise FloatingPointError("dry interface state in characteristic decomposition")
    c = np.sqrt(GRAVITY * h_hat)
    one = np.ones_like(c)
    R = np.stack([np.stack([one, one], -1),
                  np.stack([u_hat - c, u_hat + c], -1)], -2)
    inv2c = 0.5 / c
    L = np.stack([np.stack([(u_hat + c) * inv2c, -one * inv2c], -1),
                  np.stack([(c - u_hat) * inv2c, one * inv2c], -1)], -2)
    lams = np.stack([u_hat - c, u_hat + c], -1)
    return L, R, lams


def eigen_2d(h_hat, u_hat, v_hat, normal):
    """Eigenstructure of the normal flux Jacobian for the 2D system."""
    h_hat = np.asarray(h_hat, dtype=float)
    if np.any(h_hat < H_ROE_MIN):
        raise FloatingPointError("dry interface state in characteristic decomposition")
    c = np.sqrt(GRAVITY * h_hat)
    n1, n2 = normal[..., 0], normal[..., 1]
    un = u_hat * n1 + v_hat * n2
    one = np.ones_like(c)
    zero = np.zeros_like(c)
    R = np.stack([
        np.stack([one, zero, one], -1),
        np.stack([u_hat - c * n1, -n2, u_hat + c * n1], -1),
        np.stack([v_hat - c * n2, n1, v_hat + c * n2], -1),
    ], -2)
    inv2c = 0.5 / c
    L = np.stack([
        np.stack([(un + c) * inv2c, -n1 * inv2c, -n2 * inv2c], -1),
        np.stack([u_hat * n2 - v_hat * n1, -n2 * one, n1 * one], -1),
        np.stack([(c - un) * inv2c, n1 * inv2c, n2 * inv2c], -1),
    ], -2)
    lams = np.stack([un - c, un, un + c], -1)
    return L, R, lams

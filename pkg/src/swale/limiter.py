"""Positivity-preserving linear scaling limiter at Gauss-Lobatto points.

Reconstructed water-height point values are contracted toward the cell
average just enough to keep every quadrature value above a tiny floor.
In 2D the contraction runs in two directional passes, each driven by the
minimum over the edge rows and the matching interior lump; the lumps are
bookkept so that the convex decomposition of the cell average holds exactly
even where the reconstruction is not a single polynomial.
"""

from __future__ import annotations

import numpy as np

from .quadrature import EVAL_NODES, GL4_WEIGHTS, IDX_GL4, SIGMA_END

#: default point-value floor (an absolute height in the case's units)
EPS_FLOOR = 1e-11

_INTERIOR_MASS = 1.0 - 2.0 * SIGMA_END  # weight of the interior lump


class PositivityError(RuntimeError):
    """A cell average went negative; the scheme upstream is at fault."""


def _phi(hbar, m, eps_floor):
    """Contraction factor toward the mean: min(1, (hbar-eps)/(hbar-m))."""
    eps = np.minimum(eps_floor, hbar)
    denom = hbar - m
    needs = m < eps
    safe = np.where(needs & (denom > 0.0), denom, 1.0)
    phi = np.where(needs, (hbar - eps) / safe, 1.0)
    return np.clip(phi, 0.0, 1.0)


def limit_heights_1d(h_pts, hbar, eps_floor=EPS_FLOOR):
    """Scale the five point values of h toward the cell average.

    h_pts: (L, 5) values at EVAL_NODES; hbar: (L,).  The minimum is taken
    over the points plus the interior lump completing the Gauss-Lobatto
    decomposition of the average, so a forward-Euler step of the mass
    equation stays nonnegative under the positivity CFL bound.
    Returns (limited values, phi).
    """
    h_pts = np.asarray(h_pts, dtype=float)
    hbar = np.asarray(hbar, dtype=float)
    if np.any(hbar < 0.0):
        raise PositivityError(f"negative cell average: min={hbar.min():.3e}")
    lump = (hbar - SIGMA_END * (h_pts[..., 0] + h_pts[..., -1])) / _INTERIOR_MASS
    m = np.minimum(h_pts.min(axis=-1), lump)
    phi = _phi(hbar, m, eps_floor)
    out = hbar[..., None] + phi[..., None] * (h_pts - hbar[..., None])
    return out, phi


def delta_averages(h_grid, jac_gl4, area, hbar=None):
    """Directional interior lumps of the quadrature decomposition.

    h_grid: (L, 5, 5) values at EVAL_NODES x EVAL_NODES (zeta first);
    jac_gl4: (L, 4, 4) Jacobian at the GL4 tensor points; area: (L,).
    When ``hbar`` is given, the residual of the decomposition identity is
    folded into the lumps so the identity holds exactly for the returned
    values.  Returns (delta1, delta2).
    """
    h4 = h_grid[..., IDX_GL4[:, None], IDX_GL4[None, :]]
    hj = h4 * jac_gl4 / area[..., None, None]
    row = np.einsum("b,...vb->...v", GL4_WEIGHTS, hj)   # per zeta-row
    col = np.einsum("v,...vb->...b", GL4_WEIGHTS, hj)   # per xi-column
    wint = GL4_WEIGHTS[1] + GL4_WEIGHTS[2]
    d1 = (GL4_WEIGHTS[1] * row[..., 1] + GL4_WEIGHTS[2] * row[..., 2]) / wint
    d2 = (GL4_WEIGHTS[1] * col[..., 1] + GL4_WEIGHTS[2] * col[..., 2]) / wint
    if hbar is not None:
        rho1 = hbar - (_INTERIOR_MASS * d1
                       + SIGMA_END * (row[..., 0] + row[..., 3]))
        rho2 = hbar - (_INTERIOR_MASS * d2
                       + SIGMA_END * (col[..., 0] + col[..., 3]))
        d1 = d1 + rho1 / _INTERIOR_MASS
        d2 = d2 + rho2 / _INTERIOR_MASS
    return d1, d2


def decomposition_residual(h_grid, jac_gl4, area, hbar):
    """Defect of the convex decomposition (zero for polynomial data)."""
    d1, d2 = delta_averages(h_grid, jac_gl4, area)
    h4 = h_grid[..., IDX_GL4[:, None], IDX_GL4[None, :]]
    hj = h4 * jac_gl4 / area[..., None, None]
    row = np.einsum("b,...vb->...v", GL4_WEIGHTS, hj)
    col = np.einsum("v,...vb->...b", GL4_WEIGHTS, hj)
    r1 = hbar - (_INTERIOR_MASS * d1 + SIGMA_END * (row[..., 0] + row[..., 3]))
    r2 = hbar - (_INTERIOR_MASS * d2 + SIGMA_END * (col[..., 0] + col[..., 3]))
    return r1, r2


def limit_heights_2d(h_grid, jac_gl4, area, hbar, eps_floor=EPS_FLOOR):
    """Two directional limiter passes on the reconstructed height grid.

    First pass: bottom/top edge rows against the zeta-interior lump.
    Second pass: left/right columns against the xi-interior lump, recomputed
    after the first contraction.  Both factors are applied to the whole
    5x5 grid so every downstream consumer sees consistent values.
    Returns (limited grid, phi1 * phi2).
    """
    h_grid = np.asarray(h_grid, dtype=float)
    hbar = np.asarray(hbar, dtype=float)
    if np.any(hbar < 0.0):
        raise PositivityError(f"negative cell average: min={hbar.min():.3e}")

    d1, _ = delta_averages(h_grid, jac_gl4, area, hbar)
    rows = np.concatenate([h_grid[..., 0, :], h_grid[..., -1, :]], axis=-1)
    m1 = np.minimum(rows.min(axis=-1), d1)
    phi1 = _phi(hbar, m1, eps_floor)
    h_grid = hbar[..., None, None] + phi1[..., None, None] * (h_grid - hbar[..., None, None])

    _, d2 = delta_averages(h_grid, jac_gl4, area, hbar)
    cols = np.concatenate([h_grid[..., :, 0], h_grid[..., :, -1]], axis=-1)
    m2 = np.minimum(cols.min(axis=-1), d2)
    phi2 = _phi(hbar, m2, eps_floor)
    h_grid = hbar[..., None, None] + phi2[..., None, None] * (h_grid - hbar[..., None, None])
    return h_grid, phi1 * phi2


def update_bottom_after_limiting(eta_pts, h_new):
    """Rebuild bottom values from untouched surface levels: b = eta - h."""
    return eta_pts - h_new


def positivity_dt_1d(widths, width_rate, alpha, c0=1.0):
    """Largest Euler step keeping cell averages of h nonnegative (1D).

    widths/width_rate per cell at one sampled time; alpha is the global
    wave speed.  Two unit-length interfaces per cell.
    """
    divw = np.abs(width_rate) / widths
    rate = SIGMA_END * divw + 2.0 * alpha / widths
    return float(np.min(c0 * SIGMA_END / rate))


def positivity_dt_2d(area, perimeter, jac_over_area_min, jac_div_max, alpha):
    """2D positivity bound from per-cell geometry samples.

    jac_over_area_min: min over quadrature points of J/area (the constant
    c0); jac_div_max: max over points of (J/area)*|div w|.
    """
    rate = SIGMA_END * jac_div_max + perimeter * alpha / area
    return float(np.min(jac_over_area_min * SIGMA_END / rate))

"""Fifth-order WENO hybrid point-value reconstruction on nonuniform stencils.

Cell averages on a 5-cell stencil are turned into point values through
three quadratic substencil rules combined with either the exact linear
weights (smooth data), WENO-Z nonlinear weights (rough data), or a blend of
the two, selected by a smoothness detector.  All coefficients are computed
from the stencil boundary coordinates, so the machinery works unchanged on
moving and graded meshes; negative linear weights are handled by the usual
split into two positive groups.

Shapes: a "kernel" is built for a batch of target cells with arbitrary
leading shape L; ``windows`` are the matching (L, 5) stencil averages.
"""

from __future__ import annotations

import numpy as np

from .mesh import GeometryError

#: substencil count and polynomial degree of the combined rule
N_SUB = 3
DEGREE = 4

#: shift constant of the negative-weight split (positive-group bias)
SPLIT_SHIFT = 3.0

#: default detector regularization
EPS_DEFAULT = 1e-6

_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _lagrange_prime(bounds, x):
    """L'_l(x) for the Lagrange basis on ``bounds``.

    bounds: (L, m); x: (L, P).  Returns (L, P, m).
    """
    m = bounds.shape[-1]
    xb = x[..., None] - bounds[..., None, :]          # (L, P, m)
    out = np.zeros(x.shape + (m,))
    for l in range(m):
        den = 1.0
        for k in range(m):
            if k != l:
                den = den * (bounds[..., l] - bounds[..., k])
        acc = 0.0
        for p in range(m):
            if p == l:
                continue
            term = 1.0
            for k in range(m):
                if k not in (l, p):
                    term = term * xb[..., k]
            acc = acc + term
        out[..., l] = acc / den[..., None]
    return out


def _lagrange_second(bounds, x):
    """L''_l(x); same shapes as :func:`_lagrange_prime` (m = 4 only)."""
    m = bounds.shape[-1]
    xb = x[..., None] - bounds[..., None, :]
    out = np.zeros(x.shape + (m,))
    for l in range(m):
        den = 1.0
        for k in range(m):
            if k != l:
                den = den * (bounds[..., l] - bounds[..., k])
        acc = 0.0
        for p in range(m):
            if p == l:
                continue
            for q in range(p + 1, m):
                if q == l:
                    continue
                term = 1.0
                for k in range(m):
                    if k not in (l, p, q):
                        term = term * xb[..., k]
                acc = acc + 2.0 * term
        out[..., l] = acc / den[..., None]
    return out


class Kernel1D:
    """Cached stencil coefficients for one batch of cells and point set.

    Attributes
    ----------
    c : (L, P, 3, 3) candidate-rule coefficients, ``c[..., p, r, i]``
        multiplying the i-th average of substencil r (r = 0 is the
        rightmost substencil).
    d : (L, P, 3) linear weights of the combined fifth-order rule.
    big : (L, P, 5) coefficients of the combined rule on the full stencil.
    q1 : (L, 3, 2, 3) first-derivative coefficients at two Gauss points of
        the central cell (per substencil), entering the smoothness forms.
    q2 : (L, 3, 3) second-derivative coefficients (constant per cell).
    """

    __slots__ = ("points", "c", "d", "big", "q1", "q2", "width_c", "dx_scale")

    def __init__(self, points, c, d, big, q1, q2, width_c, dx_scale):
        self.points = points
        self.c = c
        self.d = d
        self.big = big
        self.q1 = q1
        self.q2 = q2
        self.width_c = width_c
        self.dx_scale = dx_scale


def build_kernel(bounds, points_ref, dx_scale=None) -> Kernel1D:
    """Build reconstruction coefficients from stencil boundary coordinates.

    bounds: (L, 6) six consecutive boundaries of the 5-cell stencil, strictly
    increasing.  points_ref: (P,) evaluation points in reference coordinates
    of the central cell.  dx_scale: global length scale entering the
    smoothness indicators (max cell width); defaults to the batch max.
    """
    bounds = np.asarray(bounds, dtype=float)
    points_ref = np.atleast_1d(np.asarray(points_ref, dtype=float))
    widths = np.diff(bounds, axis=-1)                       # (L, 5)
    if np.any(widths <= 0.0):
        raise GeometryError("stencil boundaries not strictly increasing")
    if dx_scale is None:
        dx_scale = float(widths.max())

    # Work in coordinates local to the central cell to keep products tame.
    center = 0.5 * (bounds[..., 2] + bounds[..., 3])
    b_loc = bounds - center[..., None]
    wc = widths[..., 2]
    x = b_loc[..., 2, None] + points_ref * wc[..., None]    # (L, P)

    lead = bounds.shape[:-1]
    P = len(points_ref)
    c = np.empty(lead + (P, 3, 3))
    q1 = np.empty(lead + (3, 2, 3))
    q2 = np.empty(lead + (3, 3))
    xg = b_loc[..., 2, None] + _GAUSS2 * wc[..., None]      # central-cell Gauss pair

    for r in range(N_SUB):
        sub = b_loc[..., 2 - r:6 - r]
        lp = _lagrange_prime(sub, x)                        # (L, P, 4)
        lpp = _lagrange_second(sub, np.broadcast_to(xg, lead + (2,)))
        wsub = widths[..., 2 - r:5 - r]
        # Third derivative of the cubic boundary-interpolant basis: 6/denom.
        den = np.empty(lead + (4,))
        for l in range(4):
            dl = 1.0
            for k in range(4):
                if k != l:
                    dl = dl * (sub[..., l] - sub[..., k])
            den[..., l] = dl
        for i in range(3):
            s1 = lp[..., i + 1:].sum(axis=-1)
            s2 = lpp[..., i + 1:].sum(axis=-1)
            s3 = (6.0 / den[..., i + 1:]).sum(axis=-1)
            c[..., :, r, i] = wsub[..., i, None] * s1
            q1[..., r, :, i] = wsub[..., i, None] * s2
            q2[..., r, i] = wsub[..., i] * s3

    lp_big = _lagrange_prime(b_loc, x)                      # (L, P, 6)
    big = np.empty(lead + (P, 5))
    for i in range(5):
        big[..., :, i] = widths[..., i, None] * lp_big[..., i + 1:].sum(axis=-1)

    c_low = c[..., 2, 0]   # coefficient of the leftmost average (substencil 2)
    c_high = c[..., 0, 2]  # coefficient of the rightmost average (substencil 0)
    scale = np.abs(c).max()
    if np.any(np.abs(c_low) < 1e-12 * scale) or np.any(np.abs(c_high) < 1e-12 * scale):
        raise GeometryError("degenerate linear-weight system for this geometry")
    d = np.empty(lead + (P, 3))
    d[..., 2] = big[..., 0] / c_low
    d[..., 0] = big[..., 4] / c_high
    d[..., 1] = 1.0 - d[..., 0] - d[..., 2]
    return Kernel1D(points_ref, c, d, big, q1, q2, wc, dx_scale)


def sub_windows(windows):
    """(L, 5) stencil averages -> (L, 3, 3) per-substencil triples."""
    return np.stack([windows[..., 2:5], windows[..., 1:4], windows[..., 0:3]], axis=-2)


def substencil_values(kernel: Kernel1D, windows):
    """Candidate-rule point values u_r(x); shape (L, P, 3)."""
    sw = sub_windows(np.asarray(windows, dtype=float))
    return np.einsum("...pri,...ri->...pr", kernel.c, sw)


def smoothness_indicators(kernel: Kernel1D, windows):
    """Scaled squared-derivative integrals of each candidate polynomial.

    Exact closed form: the integrands are polynomial, so a two-point Gauss
    rule on the first derivative and the constant second derivative give the
    integrals without quadrature error.  Returns (L, 3).
    """
    sw = sub_windows(np.asarray(windows, dtype=float))
    d1 = np.einsum("...rgi,...ri->...rg", kernel.q1, sw)
    d2 = np.einsum("...ri,...ri->...r", kernel.q2, sw)
    wc = kernel.width_c[..., None] if np.ndim(kernel.width_c) else kernel.width_c
    dx = kernel.dx_scale
    beta = dx * 0.5 * wc * (d1 ** 2).sum(axis=-1) + dx**3 * wc * d2 ** 2
    return beta


def detector(beta, eps=EPS_DEFAULT):
    """Smoothness detector gamma with its ingredients (tau, beta^A).

    gamma <= 1/2 flags a smooth stencil, gamma >= 1 a non-smooth one, and
    the band in between blends the two reconstructions.
    """
    tau = np.abs(beta[..., 0] - beta[..., 2])
    beta_a = beta.mean(axis=-1)
    gamma = tau / (beta_a + eps)
    return gamma, tau, beta_a


def split_linear_weights(d):
    """Split possibly-negative linear weights into two positive groups.

    Returns (d_plus, d_minus, sigma_plus, sigma_minus) with
    d = sigma_plus * d_plus - sigma_minus * d_minus, both groups normalized
    to unit sum.  When every weight is nonnegative the split degenerates to
    the identity (sigma_minus = 0).
    """
    d = np.asarray(d, dtype=float)
    neg = np.any(d < 0.0, axis=-1, keepdims=True)
    gp = np.where(neg, 0.5 * (d + SPLIT_SHIFT * np.abs(d)), d)
    gm = gp - d
    sp = gp.sum(axis=-1, keepdims=True)
    sm = gm.sum(axis=-1, keepdims=True)
    d_plus = gp / sp
    d_minus = np.where(sm > 0.0, gm / np.where(sm > 0.0, sm, 1.0), 0.0)
    return d_plus, d_minus, sp[..., 0], sm[..., 0]


def _wenoz(d, zfac):
    """WENO-Z weights for a nonnegative linear-weight set; d, zfac: (..., 3)."""
    alpha = d * (1.0 + zfac)
    s = alpha.sum(axis=-1, keepdims=True)
    return alpha / np.where(s > 0.0, s, 1.0)


def hybrid_weights(kernel: Kernel1D, beta, tau, gamma, eps=EPS_DEFAULT):
    """Effective nonlinear weights per evaluation point; shape (L, P, 3).

    Smooth region: the linear weights verbatim.  Non-smooth: WENO-Z weights
    (split-and-recombined where a linear weight is negative).  Transition:
    linear blend with M(gamma) = 2 gamma - 1, which is continuous against
    both neighbouring branches.
    """
    d = kernel.d
    zfac = (tau[..., None] / (beta + eps)) ** 2             # (L, 3)
    zfac = zfac[..., None, :]                               # broadcast over P

    neg = np.any(d < 0.0, axis=-1)
    d_plus, d_minus, sig_p, sig_m = split_linear_weights(d)
    phi_n = np.where(
        neg[..., None],
        sig_p[..., None] * _wenoz(d_plus, zfac) - sig_m[..., None] * _wenoz(d_minus, zfac),
        _wenoz(np.abs(d), zfac),
    )
    blend = np.clip(2.0 * gamma - 1.0, 0.0, 1.0)[..., None, None]
    return blend * phi_n + (1.0 - blend) * d


def combine(kernel: Kernel1D, windows, phi):
    """Final reconstruction sum(phi_r * u_r) at the kernel points; (L, P)."""
    return np.einsum("...pr,...pr->...p", substencil_values(kernel, windows), phi)


def reconstruct_scalar(windows, kernel: Kernel1D, eps=EPS_DEFAULT):
    """One-shot scalar reconstruction (hybrid weights) at the kernel points."""
    beta = smoothness_indicators(kernel, windows)
    gamma, tau, _ = detector(beta, eps)
    phi = hybrid_weights(kernel, beta, tau, gamma, eps)
    return combine(kernel, windows, phi)


def shared_hybrid_weights(kernel: Kernel1D, window_list, eps=EPS_DEFAULT):
    """Weights from component-summed smoothness indicators.

    Used by the well-balanced reconstruction: the indicators of all
    conserved components are summed so every component (and the bottom)
    is combined with identical weights.
    """
    beta = sum(smoothness_indicators(kernel, w) for w in window_list)
    gamma, tau, _ = detector(beta, eps)
    return hybrid_weights(kernel, beta, tau, gamma, eps)


def linear_exactness_defect(kernel: Kernel1D):
    """Max residual of the coefficient-matching identities (diagnostic)."""
    c, d, big = kernel.c, kernel.d, kernel.big
    resid = np.zeros_like(big)
    resid[..., 0] = d[..., 2] * c[..., 2, 0] - big[..., 0]
    resid[..., 1] = d[..., 1] * c[..., 1, 0] + d[..., 2] * c[..., 2, 1] - big[..., 1]
    resid[..., 2] = (d[..., 0] * c[..., 0, 0] + d[..., 1] * c[..., 1, 1]
                     + d[..., 2] * c[..., 2, 2] - big[..., 2])
    resid[..., 3] = d[..., 0] * c[..., 0, 1] + d[..., 1] * c[..., 1, 2] - big[..., 3]
    resid[..., 4] = d[..., 0] * c[..., 0, 2] - big[..., 4]
    return np.abs(resid).max()

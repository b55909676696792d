"""Reference-cell quadrature tables and interpolation helpers.

Everything lives on the unit reference cell [0,1] (tensorized in 2D).
The 4-point Gauss-Lobatto rule is the workhorse: it supplies the edge
quadrature, the limiter points and the endpoint weight entering the
positivity CFL bound.  A 5-node evaluation layout (Gauss-Lobatto nodes
plus the midpoint) doubles as the node set for degree-4 interpolants
used by the source-term quadrature.
"""

from __future__ import annotations

import numpy as np

GRAVITY = 9.812

_S5 = np.sqrt(5.0)

# 4-point Gauss-Lobatto on [0,1]; weights normalized to sum to 1.
# Exact for polynomials of degree <= 5.
GL4_NODES = np.array([0.0, 0.5 - 0.5 / _S5, 0.5 + 0.5 / _S5, 1.0])
GL4_WEIGHTS = np.array([1.0, 5.0, 5.0, 1.0]) / 12.0
SIGMA_END = GL4_WEIGHTS[0]  # endpoint weight in the CFL bound

# Evaluation layout: the GL4 nodes plus the midpoint.  Reconstruction is
# evaluated here once per cell; the 5 nodes determine a degree-4
# interpolant per direction.
EVAL_NODES = np.array([0.0, GL4_NODES[1], 0.5, GL4_NODES[2], 1.0])
IDX_GL4 = np.array([0, 1, 3, 4])  # GL4 subset of EVAL_NODES
IDX_LEFT = 0
IDX_RIGHT = 4


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes/weights on [a, b] (weights sum to b - a)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


GAUSS5_NODES, GAUSS5_WEIGHTS = gauss_legendre(5)


def lagrange_matrix(nodes, x):
    """Row-stochastic matrix evaluating a Lagrange interpolant.

    ``M @ values`` gives the interpolant of ``values`` (data at ``nodes``)
    at the points ``x``.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    out = np.empty((len(x), m))
    for l in range(m):
        num = np.ones_like(x)
        den = 1.0
        for k in range(m):
            if k == l:
                continue
            num *= x - nodes[k]
            den *= nodes[l] - nodes[k]
        out[:, l] = num / den
    return out


def lagrange_derivative_matrix(nodes, x):
    """Matrix evaluating the first derivative of a Lagrange interpolant."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    out = np.zeros((len(x), m))
    for l in range(m):
        den = 1.0
        for k in range(m):
            if k != l:
                den *= nodes[l] - nodes[k]
        acc = np.zeros_like(x)
        for p in range(m):
            if p == l:
                continue
            term = np.ones_like(x)
            for k in range(m):
                if k in (l, p):
                    continue
                term *= x - nodes[k]
            acc += term
        out[:, l] = acc / den
    return out


# Degree-4 interpolant machinery on EVAL_NODES: evaluation/derivative at
# the 5-point Gauss rule (exact through degree 9) and at the GL4 nodes.
INTERP_TO_GAUSS5 = lagrange_matrix(EVAL_NODES, GAUSS5_NODES)
DERIV_TO_GAUSS5 = lagrange_derivative_matrix(EVAL_NODES, GAUSS5_NODES)
DERIV_AT_EVAL = lagrange_derivative_matrix(EVAL_NODES, EVAL_NODES)

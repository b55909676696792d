"""Modified forward-Euler and SSP-RK3 integrators with co-evolved volumes.

On a moving mesh the conserved quantity is (cell measure) x (cell average).
Each stage advances that product and divides by a discretely chained cell
measure; chaining the measures with the same Runge-Kutta combination makes
constant states exact (the discrete geometric conservation law), and with
piecewise-linear node motion the end-of-step measure coincides with the
true one in 1D and 2D alike.
"""

from __future__ import annotations

import numpy as np


class TimeStepRejected(RuntimeError):
    """A chained cell measure became non-positive; the step is too large."""


def jacobian_chain(j0, div_w_stages, dt):
    """Three-stage recursion for the discrete Jacobian factors.

    ``div_w_stages`` holds the grid-velocity divergence at the stage times
    (t_n, t_{n+1}, midpoint).  Returns (J^{n,1}, J^{n,2}, J^{n+1}).
    """
    g0, g1, g2 = div_w_stages
    j1 = j0 + dt * g0 * j0
    j2 = 0.75 * j0 + 0.25 * j1 + 0.25 * dt * g1 * j1
    j3 = j0 / 3.0 + (2.0 / 3.0) * j2 + (2.0 / 3.0) * dt * g2 * j2
    return j1, j2, j3


def volume_chain(v0, rates, dt):
    """Jacobian chain in terms of cell-measure rates dV/dt at stage times."""
    d0, d1, d2 = rates
    v1 = v0 + dt * d0
    v2 = 0.75 * v0 + 0.25 * (v1 + dt * d1)
    v3 = v0 / 3.0 + (2.0 / 3.0) * (v2 + dt * d2)
    return v1, v2, v3


def _check_positive(v, label):
    if np.any(v <= 0.0):
        raise TimeStepRejected(f"non-positive chained measure at stage {label}")


def euler_gcl_step(y0, v0, rate0, rhs0, dt):
    """Modified forward Euler: V1 y1 = V0 y0 + dt RHS; V1 = V0 + dt dV/dt."""
    v1 = v0 + dt * rate0
    _check_positive(v1, "euler")
    y1 = (v0[..., None] * y0 + dt * rhs0) / v1[..., None]
    return y1, v1


def ssprk3_gcl_step(y0, v0, rates, rhs, dt):
    """Modified three-stage SSP-RK step.

    ``rates`` are the cell-measure rates at the stage times (t_n, t_{n+1},
    midpoint).  ``rhs(stage, y)`` evaluates the semi-discrete right-hand
    side of (measure x average) on the matching stage mesh.  Returns
    (y^{n+1}, V^{n+1}).
    """
    v1, v2, v3 = volume_chain(v0, rates, dt)
    _check_positive(v1, 1)
    _check_positive(v2, 2)
    _check_positive(v3, 3)

    y1 = (v0[..., None] * y0 + dt * rhs(0, y0)) / v1[..., None]
    y2 = (0.75 * v0[..., None] * y0
          + 0.25 * (v1[..., None] * y1 + dt * rhs(1, y1))) / v2[..., None]
    y3 = (v0[..., None] * y0 / 3.0
          + (2.0 / 3.0) * (v2[..., None] * y2 + dt * rhs(2, y2))) / v3[..., None]
    return y3, v3

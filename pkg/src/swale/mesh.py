"""Prescribed mesh motion and per-time mesh geometry (1D intervals, 2D quads).

A *motion* owns the analytic node trajectories.  The integrator samples it
once per time step: node speeds are recomputed from the step's endpoint
positions, so trajectories are piecewise-linear in time even when the
analytic preset is smooth.  All geometry queries go through immutable
snapshot objects built from a sampled step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import GL4_NODES, GL4_WEIGHTS


class GeometryError(RuntimeError):
    """Degenerate or inverted cell geometry."""


class MotionDomainError(ValueError):
    """Time outside the motion horizon."""


# ---------------------------------------------------------------------------
# 1D motion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeshMotion1D:
    """Analytic trajectories of the 1D grid nodes.

    ``positions(t)`` returns all node coordinates at time t.  ``rigid``
    marks motions whose node spacing is constant in time (static meshes and
    pure translations); solvers may then reuse reconstruction kernels.
    """

    name: str
    initial_nodes: np.ndarray
    t_end: float
    _positions: Callable[[float], np.ndarray]
    rigid: bool = False

    @property
    def n_cells(self) -> int:
        return len(self.initial_nodes) - 1

    def positions(self, t: float) -> np.ndarray:
        if t < -1e-12 or t > self.t_end * (1 + 1e-12) + 1e-12:
            raise MotionDomainError(f"t={t} outside motion horizon [0, {self.t_end}]")
        return self._positions(t)

    def node_position(self, j: int, t: float) -> float:
        """Trajectory of node j (analytic sampling of the prescribed path)."""
        return float(self.positions(t)[j])


def static_motion_1d(nodes: np.ndarray, t_end: float) -> MeshMotion1D:
    nodes = np.asarray(nodes, dtype=float)
    return MeshMotion1D("static", nodes, t_end, lambda t: nodes.copy(), rigid=True)


def sinusoidal_1d(nodes: np.ndarray, t_end: float, x_min: float, x_max: float) -> MeshMotion1D:
    """Sloshing node motion vanishing at both domain ends.

    Displacement amplitude scales as 1/(3 L^2) with one full sine period
    over [0, t_end], so nodes return to their initial positions at t_end.
    """
    nodes = np.asarray(nodes, dtype=float)
    span = x_max - x_min
    shape = (nodes - x_max) * (nodes - x_min) / (3.0 * span**2)

    def pos(t):
        return nodes + np.sin(2.0 * np.pi * t / t_end) * shape

    return MeshMotion1D("sinusoidal-1d", nodes, t_end, pos)


def quartic_pinned_1d(nodes, t_end, x_min, x_max, pin_a, pin_b) -> MeshMotion1D:
    """Quartic node motion pinned at the ends and two interior stations.

    Used for bottom steps whose jumps must stay on cell boundaries: nodes
    initially at ``pin_a``/``pin_b`` never move.
    """
    nodes = np.asarray(nodes, dtype=float)
    span = x_max - x_min
    shape = ((nodes - x_max) * (nodes - x_min) * (nodes - pin_a) * (nodes - pin_b)
             / (3.0 * span**4))

    def pos(t):
        return nodes + np.sin(2.0 * np.pi * t / t_end) * shape

    return MeshMotion1D("quartic-pinned-1d", nodes, t_end, pos)


def linear_rezone_1d(nodes_start, nodes_end, t_end, name="piecewise-rezone-1d") -> MeshMotion1D:
    """Nodes drift linearly from one prescribed partition to another."""
    a = np.asarray(nodes_start, dtype=float)
    b = np.asarray(nodes_end, dtype=float)
    if a.shape != b.shape:
        raise ValueError("start/end node partitions must have equal length")
    w = (b - a) / t_end

    def pos(t):
        return a + w * t

    return MeshMotion1D(name, a, t_end, pos)


def big_pulse_nodes_start() -> np.ndarray:
    """Initial 100-cell partition of [0, 2] concentrating cells in the middle."""
    i = np.arange(101, dtype=float)
    x = np.where(i <= 25, 0.0372 * i,
                 np.where(i <= 75, 0.93 + 0.008 * (i - 25),
                          1.33 + 0.0268 * (i - 75)))
    return x


def big_pulse_nodes_end() -> np.ndarray:
    """Final 100-cell partition of [0, 2] tracking the split pulses."""
    i = np.arange(101, dtype=float)
    x = np.where(i <= 7, 2.0 * i / 35.0,
                 np.where(i <= 35, 0.4 + (i - 7) / 140.0,
                          np.where(i <= 68, 0.6 + 53.0 * (i - 35) / 1650.0,
                                   np.where(i <= 98, 1.66 + (i - 68) / 150.0,
                                            1.86 + 0.07 * (i - 98)))))
    return x


class StepGeometry1D:
    """Mesh over one time step: linear node rays between sampled endpoints."""

    def __init__(self, x_start: np.ndarray, x_stop: np.ndarray, t0: float, t1: float):
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.x0 = np.asarray(x_start, dtype=float)
        self.x1 = np.asarray(x_stop, dtype=float)
        self.speeds = (self.x1 - self.x0) / (self.t1 - self.t0)

    def nodes(self, t: float) -> np.ndarray:
        return self.x0 + self.speeds * (t - self.t0)

    def snapshot(self, t: float) -> "Snapshot1D":
        return Snapshot1D(self.nodes(t), self.speeds, t)


class Snapshot1D:
    """Immutable 1D mesh state at one instant within a step."""

    def __init__(self, nodes: np.ndarray, speeds: np.ndarray, t: float):
        self.t = float(t)
        self.nodes = nodes
        self.speeds = speeds
        self.widths = np.diff(nodes)
        if np.any(self.widths <= 0.0):
            j = int(np.argmin(self.widths))
            raise GeometryError(f"cell {j} degenerate at t={t}: width={self.widths[j]}")
        # Rate of change of each cell length; constant during the step.
        self.width_rate = np.diff(speeds)

    def grid_velocity(self, x) -> np.ndarray:
        """Piecewise-linear interpolation of node speeds (global w field)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        j = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(self.widths) - 1)
        lam = (x - self.nodes[j]) / self.widths[j]
        return (1.0 - lam) * self.speeds[j] + lam * self.speeds[j + 1]

    def div_w(self) -> np.ndarray:
        """d(w)/dx per cell; constant inside each cell."""
        return self.width_rate / self.widths


# ---------------------------------------------------------------------------
# 2D motion (logically Cartesian quadrilaterals; vertex array indexed [j, i])
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeshMotion2D:
    name: str
    initial_verts: np.ndarray  # (Ny+1, Nx+1, 2)
    t_end: float
    _positions: Callable[[float], np.ndarray]
    rigid: bool = False

    @property
    def shape(self):
        ny, nx = self.initial_verts.shape[0] - 1, self.initial_verts.shape[1] - 1
        return ny, nx

    def positions(self, t: float) -> np.ndarray:
        if t < -1e-12 or t > self.t_end * (1 + 1e-12) + 1e-12:
            raise MotionDomainError(f"t={t} outside motion horizon [0, {self.t_end}]")
        return self._positions(t)


def tensor_vertices(x_nodes, y_nodes) -> np.ndarray:
    X, Y = np.meshgrid(np.asarray(x_nodes, float), np.asarray(y_nodes, float))
    return np.stack([X, Y], axis=-1)


def static_motion_2d(x_nodes, y_nodes, t_end) -> MeshMotion2D:
    v0 = tensor_vertices(x_nodes, y_nodes)
    return MeshMotion2D("static", v0, t_end, lambda t: v0.copy(), rigid=True)


def sinusoidal_2d(x_nodes, y_nodes, t_end, box) -> MeshMotion2D:
    """Sinusoidal vertex wobble with fixed amplitudes 0.03 (x) and 0.02 (y).

    ``box`` = (x_min, x_max, y_min, y_max).  The spatial factors vanish on
    the domain boundary, so boundary vertices never move.
    """
    v0 = tensor_vertices(x_nodes, y_nodes)
    x_min, x_max, y_min, y_max = box
    sx = np.sin(2.0 * np.pi * v0[..., 0] / (x_max - x_min))
    sy = np.sin(2.0 * np.pi * v0[..., 1] / (y_max - y_min))
    shape = sx * sy

    def pos(t):
        out = v0.copy()
        out[..., 0] += 0.03 * np.sin(2.0 * np.pi * t / t_end) * shape
        out[..., 1] += 0.02 * np.sin(4.0 * np.pi * t / t_end) * shape
        return out

    return MeshMotion2D("sinusoidal-2d", v0, t_end, pos)


def translation_2d(x_nodes, y_nodes, t_end, velocity=(1.0, 0.0)) -> MeshMotion2D:
    v0 = tensor_vertices(x_nodes, y_nodes)
    vel = np.asarray(velocity, dtype=float)

    def pos(t):
        return v0 + vel * t

    return MeshMotion2D("translation-2d", v0, t_end, pos, rigid=True)


def vortex_refined_nodes():
    """Graded 110x70 partition of [0,4]x[0,2] refining the vortex region."""
    i = np.arange(111, dtype=float)
    x = np.where(i <= 10, 0.05 * i,
                 np.where(i <= 60, 0.5 + 0.02 * (i - 10), 1.5 + 0.05 * (i - 60)))
    j = np.arange(71, dtype=float)
    y = np.where(j <= 10, 0.05 * j,
                 np.where(j <= 60, 0.5 + 0.02 * (j - 10), 1.5 + 0.05 * (j - 60)))
    return x, y


class StepGeometry2D:
    """Quad mesh over one step: vertices move on linear rays."""

    def __init__(self, v_start, v_stop, t0, t1):
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.v0 = np.asarray(v_start, dtype=float)
        self.v1 = np.asarray(v_stop, dtype=float)
        self.vel = (self.v1 - self.v0) / (self.t1 - self.t0)

    def verts(self, t: float) -> np.ndarray:
        return self.v0 + self.vel * (t - self.t0)

    def snapshot(self, t: float) -> "Snapshot2D":
        return Snapshot2D(self.verts(t), self.vel, t)


def _corners(verts) -> np.ndarray:
    """Per-cell corner array (..., 4, 2) in counterclockwise order."""
    return np.stack(
        [verts[:-1, :-1], verts[:-1, 1:], verts[1:, 1:], verts[1:, :-1]], axis=-2
    )


def quad_area(corners) -> np.ndarray:
    x = corners[..., 0]
    y = corners[..., 1]
    xn = np.roll(x, -1, axis=-1)
    yn = np.roll(y, -1, axis=-1)
    return 0.5 * np.sum(x * yn - xn * y, axis=-1)


def quad_area_rate(corners, corner_vel) -> np.ndarray:
    """d(area)/dt of a polygon whose corners move at fixed velocities."""
    x, y = corners[..., 0], corners[..., 1]
    u, v = corner_vel[..., 0], corner_vel[..., 1]
    xn, yn = np.roll(x, -1, axis=-1), np.roll(y, -1, axis=-1)
    un, vn = np.roll(u, -1, axis=-1), np.roll(v, -1, axis=-1)
    return 0.5 * np.sum(u * yn + x * vn - un * y - xn * v, axis=-1)


class BilinearMap:
    """Bilinear reference-to-physical map of one or many quadrilaterals.

    ``corners`` has shape (..., 4, 2) with counterclockwise ordering
    (bottom-left, bottom-right, top-right, top-left); the reference cell is
    the unit square.
    """

    def __init__(self, corners, corner_vel=None):
        self.corners = np.asarray(corners, dtype=float)
        c = self.corners
        self.p00, self.p10, self.p11, self.p01 = (c[..., k, :] for k in range(4))
        if corner_vel is not None:
            corner_vel = np.asarray(corner_vel, dtype=float)
        self.corner_vel = corner_vel

    def point(self, xi, zeta):
        xi = np.asarray(xi)[..., None]
        ze = np.asarray(zeta)[..., None]
        return (self.p00 * (1 - xi) * (1 - ze) + self.p10 * xi * (1 - ze)
                + self.p11 * xi * ze + self.p01 * (1 - xi) * ze)

    def jacobian(self, xi, zeta):
        """Jacobian matrix entries and determinant at reference coords.

        Returns (dxi, dzeta, det) where dxi/dzeta are the two column vectors
        of the Jacobian.  Raises on non-positive determinants.
        """
        xi = np.asarray(xi)[..., None]
        ze = np.asarray(zeta)[..., None]
        dxi = (self.p10 - self.p00) * (1 - ze) + (self.p11 - self.p01) * ze
        dze = (self.p01 - self.p00) * (1 - xi) + (self.p11 - self.p10) * xi
        det = dxi[..., 0] * dze[..., 1] - dxi[..., 1] * dze[..., 0]
        if np.any(det <= 0.0):
            raise GeometryError("bilinear map has non-positive Jacobian (tangled cell)")
        return dxi, dze, det

    def jacobian_rate(self, xi, zeta):
        """d(det)/dt at reference coords for linearly moving corners."""
        if self.corner_vel is None:
            raise ValueError("corner velocities not attached")
        xi = np.asarray(xi)[..., None]
        ze = np.asarray(zeta)[..., None]
        v = self.corner_vel
        v00, v10, v11, v01 = (v[..., k, :] for k in range(4))
        dxi = (self.p10 - self.p00) * (1 - ze) + (self.p11 - self.p01) * ze
        dze = (self.p01 - self.p00) * (1 - xi) + (self.p11 - self.p10) * xi
        ddxi = (v10 - v00) * (1 - ze) + (v11 - v01) * ze
        ddze = (v01 - v00) * (1 - xi) + (v11 - v10) * xi
        return (ddxi[..., 0] * dze[..., 1] + dxi[..., 0] * ddze[..., 1]
                - ddxi[..., 1] * dze[..., 0] - dxi[..., 1] * ddze[..., 0])

    def velocity(self, xi, zeta):
        """Grid velocity field: bilinear interpolation of corner speeds."""
        if self.corner_vel is None:
            raise ValueError("corner velocities not attached")
        xi = np.asarray(xi)[..., None]
        ze = np.asarray(zeta)[..., None]
        v = self.corner_vel
        v00, v10, v11, v01 = (v[..., k, :] for k in range(4))
        return (v00 * (1 - xi) * (1 - ze) + v10 * xi * (1 - ze)
                + v11 * xi * ze + v01 * (1 - xi) * ze)


class Snapshot2D:
    """Immutable 2D mesh state at one instant within a step.

    Edge containers: vertical edges are indexed (Ny, Nx+1) and oriented
    bottom-to-top with the normal pointing in +x; horizontal edges are
    (Ny+1, Nx) oriented left-to-right with the normal pointing in +y.
    """

    def __init__(self, verts, vert_vel, t):
        self.t = float(t)
        self.verts = verts
        self.vert_vel = vert_vel
        self.corners = _corners(verts)
        self.corner_vel = _corners(vert_vel)
        self.area = quad_area(self.corners)
        if np.any(self.area <= 0.0):
            raise GeometryError(f"degenerate quadrilateral cell at t={t}")
        self.area_rate = quad_area_rate(self.corners, self.corner_vel)
        self.bmap = BilinearMap(self.corners, self.corner_vel)

        ev = verts[1:, :] - verts[:-1, :]      # vertical edge vectors
        self.v_edge_len = np.hypot(ev[..., 0], ev[..., 1])
        self.v_edge_normal = np.stack([ev[..., 1], -ev[..., 0]], axis=-1) / self.v_edge_len[..., None]
        eh = verts[:, 1:] - verts[:, :-1]      # horizontal edge vectors
        self.h_edge_len = np.hypot(eh[..., 0], eh[..., 1])
        self.h_edge_normal = np.stack([-eh[..., 1], eh[..., 0]], axis=-1) / self.h_edge_len[..., None]

        # Grid-line boundaries for dimension-by-dimension reconstruction:
        # x-midpoints of vertical edges per row, y-midpoints of horizontal
        # edges per column.
        self.line_bx = 0.5 * (verts[:-1, :, 0] + verts[1:, :, 0])   # (Ny, Nx+1)
        self.line_by = 0.5 * (verts[:, :-1, 1] + verts[:, 1:, 1])   # (Ny+1, Nx)

    def edge_velocity_gl4(self):
        """Grid velocity at the 4 Gauss-Lobatto points of every edge."""
        s = GL4_NODES[:, None]
        vb, vt = self.vert_vel[:-1, :], self.vert_vel[1:, :]
        wv = (1 - s)[None, None] * vb[:, :, None, :] + s[None, None] * vt[:, :, None, :]
        vl, vr = self.vert_vel[:, :-1], self.vert_vel[:, 1:]
        wh = (1 - s)[None, None] * vl[:, :, None, :] + s[None, None] * vr[:, :, None, :]
        return wv, wh

    def jac_grid(self, xi, zeta):
        """J at a tensor grid of reference coords; shape (Ny, Nx, nz, nx)."""
        XI, ZE = np.meshgrid(xi, zeta)
        _, _, det = self.bmap.jacobian(XI[None, None], ZE[None, None])
        return det

    def div_w_grid(self, xi, zeta):
        """Divergence of the grid velocity at reference points: Jdot / J."""
        XI, ZE = np.meshgrid(xi, zeta)
        _, _, det = self.bmap.jacobian(XI[None, None], ZE[None, None])
        rate = self.bmap.jacobian_rate(XI[None, None], ZE[None, None])
        return rate / det


# ---------------------------------------------------------------------------
# Ghost extension of node/vertex coordinate arrays
# ---------------------------------------------------------------------------

def extend_nodes_1d(nodes, depth, periodic: bool):
    """Pad node coordinates: periodic images or mirror reflection."""
    n = len(nodes) - 1
    span = nodes[-1] - nodes[0]
    if periodic:
        left = nodes[n - depth:n] - span
        right = nodes[1:depth + 1] + span
    else:
        left = 2 * nodes[0] - nodes[depth:0:-1]
        right = 2 * nodes[-1] - nodes[n - 1:n - depth - 1:-1]
    return np.concatenate([left, nodes, right])


def extend_verts_2d(verts, depth, periodic_x: bool, periodic_y: bool):
    """Pad a vertex array in both index directions (x first, then y)."""
    ny1, nx1, _ = verts.shape
    nx, ny = nx1 - 1, ny1 - 1
    if periodic_x:
        span = verts[:, -1:, 0] - verts[:, :1, 0]
        left = verts[:, nx - depth:nx].copy()
        left[..., 0] -= span
        right = verts[:, 1:depth + 1].copy()
        right[..., 0] += span
    else:
        left = verts[:, depth:0:-1].copy()
        left[..., 0] = 2 * verts[:, :1, 0] - left[..., 0]
        right = verts[:, nx - 1:nx - depth - 1:-1].copy()
        right[..., 0] = 2 * verts[:, -1:, 0] - right[..., 0]
    out = np.concatenate([left, verts, right], axis=1)
    if periodic_y:
        span = out[-1:, :, 1] - out[:1, :, 1]
        bot = out[ny - depth:ny].copy()
        bot[..., 1] -= span
        top = out[1:depth + 1].copy()
        top[..., 1] += span
    else:
        bot = out[depth:0:-1].copy()
        bot[..., 1] = 2 * out[:1, :, 1] - bot[..., 1]
        top = out[ny - 1:ny - depth - 1:-1].copy()
        top[..., 1] = 2 * out[-1:, :, 1] - top[..., 1]
    return np.concatenate([bot, out, top], axis=0)


# ---------------------------------------------------------------------------
# Motion validation: assumptions (A1)-(A3)
# ---------------------------------------------------------------------------

def validate_motion(motion, n_steps: int = 64) -> dict:
    """Check mesh regularity over the motion horizon.

    Samples the horizon in ``n_steps`` steps (plus in-step midpoints) and
    asserts positive cell measures, bounded grid velocity/divergence, and a
    uniform lower bound on the cell measure relative to the largest one.
    Returns a report dict; raises GeometryError on violations.
    """
    times = np.linspace(0.0, motion.t_end, n_steps + 1)
    min_ratio = np.inf
    max_speed = 0.0
    max_div = 0.0
    if isinstance(motion, MeshMotion1D):
        for ta, tb in zip(times[:-1], times[1:]):
            step = StepGeometry1D(motion.positions(ta), motion.positions(tb), ta, tb)
            for t in (ta, 0.5 * (ta + tb), tb):
                snap = step.snapshot(t)  # raises if any width <= 0 (A1)
                min_ratio = min(min_ratio, snap.widths.min() / snap.widths.max())
                max_speed = max(max_speed, np.abs(step.speeds).max())
                max_div = max(max_div, np.abs(snap.div_w()).max())
    elif isinstance(motion, MeshMotion2D):
        from .quadrature import GL4_NODES as gl
        for ta, tb in zip(times[:-1], times[1:]):
            step = StepGeometry2D(motion.positions(ta), motion.positions(tb), ta, tb)
            for t in (ta, 0.5 * (ta + tb), tb):
                snap = step.snapshot(t)
                jac = snap.jac_grid(gl, gl)
                if np.any(jac <= 0.0):
                    raise GeometryError(f"non-convex/tangled cell at t={t}")
                min_ratio = min(min_ratio, snap.area.min() / snap.area.max())
                max_speed = max(max_speed, np.abs(step.vel).max())
                max_div = max(max_div, np.abs(snap.div_w_grid(gl, gl)).max())
    else:
        raise TypeError(f"unknown motion type: {type(motion)!r}")
    return {
        "measure_ratio_lower_bound": float(min_ratio),
        "max_grid_speed": float(max_speed),
        "max_div_w": float(max_div),
    }


def cell_average_weights_2d(snapshot: Snapshot2D, xi, zeta):
    """Quadrature check helper: integral of J over the reference square."""
    jac = snapshot.jac_grid(xi, zeta)
    wx = GL4_WEIGHTS if len(xi) == 4 else None
    if wx is None:
        raise ValueError("only the GL4 tensor layout is supported here")
    return np.einsum("p,q,...qp->...", GL4_WEIGHTS, GL4_WEIGHTS, jac)

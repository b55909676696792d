"""Semi-discrete assembly and time marching for the 1D scheme.

State per cell: equilibrium variables (eta, hu) plus the bottom average,
advanced together by the volume-chained SSP-RK3 integrator.  Each stage
rebuilds the mesh snapshot, reconstructs interface/interior point values,
applies the positivity limiter, and assembles fluxes and sources for the
selected scheme variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import physics, reconstruction as rec
from .limiter import EPS_FLOOR, limit_heights_1d, positivity_dt_1d
from .mesh import MeshMotion1D, StepGeometry1D, extend_nodes_1d
from .quadrature import (DERIV_TO_GAUSS5, EVAL_NODES, GAUSS5_NODES, GAUSS5_WEIGHTS,
                         GRAVITY, IDX_LEFT, IDX_RIGHT, INTERP_TO_GAUSS5, gauss_legendre)
from .scheme import (BottomMode, BoundaryCondition, NumericalFailure, SchemeConfig,
                     SchemeVariant)
from .timestep import TimeStepRejected, ssprk3_gcl_step, volume_chain

GHOST = 3


def fill_ghosts_1d(fields, bc_left, bc_right):
    """Extend cell data (N, k) by 3 ghost cells per side.

    Component convention: fields[..., 0] = eta, 1 = hu, 2 = bottom.
    Reflective walls mirror h and b (hence eta) and negate the momentum.
    """
    n = fields.shape[0]
    out = np.empty((n + 2 * GHOST,) + fields.shape[1:])
    out[GHOST:GHOST + n] = fields
    if (bc_left is BoundaryCondition.PERIODIC) != (bc_right is BoundaryCondition.PERIODIC):
        raise ValueError("periodic boundaries must be paired")
    if bc_left is BoundaryCondition.PERIODIC:
        out[:GHOST] = fields[n - GHOST:]
        out[GHOST + n:] = fields[:GHOST]
        return out
    for side, bc in ((0, bc_left), (1, bc_right)):
        if bc is BoundaryCondition.TRANSMISSIVE:
            edge = fields[0] if side == 0 else fields[-1]
            if side == 0:
                out[:GHOST] = edge
            else:
                out[GHOST + n:] = edge
        elif bc is BoundaryCondition.REFLECTIVE:
            if side == 0:
                mirror = fields[GHOST - 1::-1].copy()
                mirror[:, 1] = -mirror[:, 1]
                out[:GHOST] = mirror
            else:
                mirror = fields[:n - GHOST - 1:-1].copy()
                mirror[:, 1] = -mirror[:, 1]
                out[GHOST + n:] = mirror
        else:
            raise ValueError(f"unsupported boundary condition {bc}")
    return out


def project_bottom_1d(fn, nodes, panels=8, jumps=()):
    """Cell averages of b(x) by composite Gauss quadrature.

    Cells containing a registered jump are split there first, so piecewise
    smooth bottoms are averaged to quadrature precision.
    """
    nodes = np.asarray(nodes, dtype=float)
    gx, gw = gauss_legendre(5)
    jumps = [j for j in jumps if nodes[0] < j < nodes[-1]]
    out = np.empty(len(nodes) - 1)
    for c in range(len(out)):
        a, b = nodes[c], nodes[c + 1]
        cuts = np.unique([a] + [j for j in jumps if a < j < b] + [b])
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            edges = np.linspace(lo, hi, panels + 1)
            mids = edges[:-1, None] + np.diff(edges)[:, None] * gx
            total += (np.diff(edges)[:, None] * gw * fn(mids)).sum()
        out[c] = total / (b - a)
    return out


def average_cells_1d(fn, nodes, panels=8, jumps=()):
    """Alias of :func:`project_bottom_1d` for initial-data averaging."""
    return project_bottom_1d(fn, nodes, panels=panels, jumps=jumps)


@dataclass
class StageDiagnostics:
    min_h_point: float = np.inf
    min_phi: float = 1.0


@dataclass
class RunHistory:
    times: list = field(default_factory=list)
    mass_h: list = field(default_factory=list)
    mass_hu: list = field(default_factory=list)
    min_h_avg: list = field(default_factory=list)
    min_h_point: list = field(default_factory=list)
    steps: int = 0
    snapshots: dict = field(default_factory=dict)
    global_min_h_avg: float = np.inf
    global_min_h_point: float = np.inf


class Solver1D:
    """Finite-volume ALE solver on a prescribed 1D mesh motion."""

    def __init__(self, motion: MeshMotion1D, eta0, hu0, bbar0, config: SchemeConfig,
                 bc=(BoundaryCondition.TRANSMISSIVE, BoundaryCondition.TRANSMISSIVE),
                 bottom_fn=None, bottom_jumps=()):
        self.motion = motion
        self.cfg = config
        self.bc = tuple(BoundaryCondition(b) for b in bc)
        self.n = motion.n_cells
        self.t = 0.0
        self.state = np.stack([np.asarray(eta0, dtype=float),
                               np.asarray(hu0, dtype=float),
                               np.asarray(bbar0, dtype=float)], axis=-1)
        self.volume = np.diff(motion.positions(0.0))
        self.bottom_fn = bottom_fn
        self.bottom_jumps = tuple(bottom_jumps)
        if config.bottom_mode is BottomMode.L2_PROJECTION and bottom_fn is None:
            raise ValueError("projected bottom mode needs the bottom function")
        self._kernel_cache = None
        self._alpha_prev = None
        self._periodic = self.bc[0] is BoundaryCondition.PERIODIC

    # -- geometry ---------------------------------------------------------

    def _extended_nodes(self, t):
        return extend_nodes_1d(self.motion.positions(t), GHOST, self._periodic)

    def _kernels(self, snap):
        if self.motion.rigid and self._kernel_cache is not None:
            return self._kernel_cache
        bounds = sliding_window_view(snap.nodes, 6)[:self.n + 2]
        dx_scale = float(snap.widths[GHOST:GHOST + self.n].max())
        kern = rec.build_kernel(bounds, EVAL_NODES, dx_scale)
        if self.motion.rigid:
            self._kernel_cache = kern
        return kern

    # -- reconstruction ---------------------------------------------------

    def _reconstruct(self, ext, kern):
        """Point values (nt, 5) of eta, hu, b for target cells -1..N."""
        nt = self.n + 2
        # window axis is appended last: (nt, 3 components, 5 cells)
        wins = sliding_window_view(ext, 5, axis=0)[:nt]
        w_eta, w_hu, w_b = wins[:, 0, :], wins[:, 1, :], wins[:, 2, :]
        eps = self.cfg.eps_weno

        if self.cfg.variant.well_balanced:
            # Shared weights from the smoothness of (eta, hu, b): equal
            # weights keep eta exact on equilibrium data, and basing the
            # detector on the surface level rather than the height removes
            # its linear sensitivity to flow perturbations over rough beds.
            w_h = w_eta - w_b
            phi = rec.shared_hybrid_weights(kern, [w_eta, w_hu, w_b], eps)
            h = rec.combine(kern, w_h, phi)
            hu = rec.combine(kern, w_hu, phi)
            b = rec.combine(kern, w_b, phi)
            return h + b, hu, b

        eta = rec.reconstruct_scalar(w_eta, kern, eps)
        hu = rec.reconstruct_scalar(w_hu, kern, eps)
        b = rec.reconstruct_scalar(w_b, kern, eps)
        if self.cfg.characteristic:
            self._characteristic_edges(ext, kern, wins, eta, hu)
        return eta, hu, b

    def _characteristic_edges(self, ext, kern, wins, eta, hu):
        """Overwrite interface traces with characteristic-mode values.

        One Roe frame per interface; both adjacent traces are reconstructed
        in that frame.  Dry interface states fall back to the component-wise
        values already in place.
        """
        nt = self.n + 2
        havg = ext[:, 0] - ext[:, 2]
        hl, hr = havg[GHOST - 1:GHOST + self.n], havg[GHOST:GHOST + self.n + 1]
        ul = physics.velocities(ext[GHOST - 1:GHOST + self.n], ext[GHOST - 1:GHOST + self.n, 2])[0]
        ur = physics.velocities(ext[GHOST:GHOST + self.n + 1], ext[GHOST:GHOST + self.n + 1, 2])[0]
        hhat, (uhat,) = physics.roe_state(hl, hr, [ul], [ur])
        wet = hhat >= physics.H_ROE_MIN
        if not np.any(wet):
            return
        L, R, _ = physics.eigen_1d(np.where(wet, hhat, 1.0), uhat)

        qwin = wins[:, :2, :].transpose(0, 2, 1)  # (nt, 5, 2)
        eps = self.cfg.eps_weno
        # minus trace at interface k: right point of target row k
        vm = np.einsum("kij,kpj->kpi", L, qwin[:self.n + 1])
        vp = np.einsum("kij,kpj->kpi", L, qwin[1:])
        kern_m = _slice_kernel(kern, 0, self.n + 1)
        kern_p = _slice_kernel(kern, 1, nt)
        vm_pts = np.stack([rec.reconstruct_scalar(vm[..., c], kern_m, eps)[:, IDX_RIGHT]
                           for c in range(2)], axis=-1)
        vp_pts = np.stack([rec.reconstruct_scalar(vp[..., c], kern_p, eps)[:, IDX_LEFT]
                           for c in range(2)], axis=-1)
        qm = np.einsum("kij,kj->ki", R, vm_pts)
        qp = np.einsum("kij,kj->ki", R, vp_pts)
        eta[:self.n + 1, IDX_RIGHT] = np.where(wet, qm[:, 0], eta[:self.n + 1, IDX_RIGHT])
        hu[:self.n + 1, IDX_RIGHT] = np.where(wet, qm[:, 1], hu[:self.n + 1, IDX_RIGHT])
        eta[1:, IDX_LEFT] = np.where(wet, qp[:, 0], eta[1:, IDX_LEFT])
        hu[1:, IDX_LEFT] = np.where(wet, qp[:, 1], hu[1:, IDX_LEFT])

    # -- right-hand side --------------------------------------------------

    def rhs(self, state, snap, diag: StageDiagnostics | None = None):
        """d/dt of (volume x average) for (eta, hu, b) on one stage mesh."""
        cfg = self.cfg
        n = self.n
        ext = fill_ghosts_1d(state, *self.bc)
        if cfg.bottom_mode is BottomMode.L2_PROJECTION:
            ext[:, 2] = project_bottom_1d(self.bottom_fn, snap.nodes,
                                          jumps=self.bottom_jumps)
        kern = self._kernels(snap)
        eta_p, hu_p, b_p = self._reconstruct(ext, kern)

        hbar_t = ext[GHOST - 1:GHOST + n + 1, 0] - ext[GHOST - 1:GHOST + n + 1, 2]
        h_p = eta_p - b_p
        if cfg.limiter:
            h_p, phi = limit_heights_1d(h_p, hbar_t, cfg.eps_floor)
            b_p = eta_p - h_p
            if diag is not None:
                diag.min_phi = min(diag.min_phi, float(phi.min()))
        if diag is not None:
            diag.min_h_point = min(diag.min_h_point, float(h_p.min()))

        # interface traces: minus side = right point of target row k
        qm = np.stack([eta_p[:n + 1, IDX_RIGHT], hu_p[:n + 1, IDX_RIGHT]], axis=-1)
        qp = np.stack([eta_p[1:, IDX_LEFT], hu_p[1:, IDX_LEFT]], axis=-1)
        bm = b_p[:n + 1, IDX_RIGHT]
        bp = b_p[1:, IDX_LEFT]
        w = snap.speeds[GHOST:GHOST + n + 1]

        alpha = max(
            float(np.max(physics.wave_speed(qm, bm, w))),
            float(np.max(physics.wave_speed(qp, bp, w))),
        )
        self._alpha_stage = max(getattr(self, "_alpha_stage", 0.0), alpha)

        if cfg.variant is SchemeVariant.WB_HYDRO:
            flux_m, flux_p = physics.hydrostatic_flux(qm, qp, bm, bp, w, alpha)
        else:
            flux_m = flux_p = physics.lax_friedrichs(qm, qp, bm, bp, w, alpha)

        out = np.zeros((n, 3))
        # each cell sees its own side-corrected flux: plus-corrected at its
        # left edge, minus-corrected at its right edge
        out[:, :2] = flux_p[:-1] - flux_m[1:]
        if cfg.bottom_mode is BottomMode.EVOLVED:
            bflux = physics.bottom_flux(bm, bp, w, alpha)
            out[:, 2] = bflux[1:] - bflux[:-1]

        out[:, 1] += self._momentum_source(eta_p, b_p, bm, bp, ext, n)
        return out

    def _momentum_source(self, eta_p, b_p, bm, bp, ext, n):
        """Bed-slope source on interior cells, per scheme variant.

        Point values feed degree-4 interpolants per cell; their product is
        integrated by a 5-point Gauss rule (exact for the interpolants), and
        well-balanced variants add the boundary terms that cancel the flux
        on equilibrium data.
        """
        eta_c = eta_p[1:n + 1]
        b_c = b_p[1:n + 1]
        eta_g = eta_c @ INTERP_TO_GAUSS5.T
        dbdxi_g = b_c @ DERIV_TO_GAUSS5.T
        g = GRAVITY
        if self.cfg.variant is SchemeVariant.NONWB:
            hb_g = eta_g - b_c @ INTERP_TO_GAUSS5.T
            return -g * np.einsum("g,cg,cg->c", GAUSS5_WEIGHTS, hb_g, dbdxi_g)
        if self.cfg.variant is SchemeVariant.WB_HYDRO:
            vol = -g * np.einsum("g,cg,cg->c", GAUSS5_WEIGHTS, eta_g, dbdxi_g)
            edge = 0.5 * g * (b_c[:, IDX_RIGHT] ** 2 - b_c[:, IDX_LEFT] ** 2)
            return vol + edge
        # special source-term decomposition
        etabar = ext[GHOST:GHOST + n, 0]
        bhat = 0.5 * (bm + bp)
        bsqhat = 0.5 * (bm ** 2 + bp ** 2)
        vol = -g * np.einsum("g,cg,cg->c", GAUSS5_WEIGHTS,
                             eta_g - etabar[:, None], dbdxi_g)
        edge = (0.5 * g * (bsqhat[1:] - bsqhat[:-1])
                - g * etabar * (bhat[1:] - bhat[:-1]))
        return vol + edge

    # -- time marching ----------------------------------------------------

    def _alpha_estimate(self, snap):
        q = self.state[:, :2]
        b = self.state[:, 2]
        wc = 0.5 * (snap.speeds[GHOST:GHOST + self.n] + snap.speeds[GHOST + 1:GHOST + self.n + 1])
        a = float(np.max(physics.wave_speed(q, b, wc)))
        if self._alpha_prev is not None:
            a = max(a, self._alpha_prev)
        return a

    def pick_dt(self, snap):
        alpha = self._alpha_estimate(snap)
        widths = snap.widths[GHOST:GHOST + self.n]
        dt = self.cfg.cfl * float(np.min(widths / (2.0 * alpha)))
        if self.cfg.enforce_positivity_dt:
            rate = snap.width_rate[GHOST:GHOST + self.n]
            dt = min(dt, positivity_dt_1d(widths, rate, alpha))
        return dt

    def step(self, dt=None, dt_cap=None):
        t0 = self.t
        nodes0 = self._extended_nodes(t0)
        if dt is None:
            snap_probe = StepGeometry1D(nodes0, nodes0, t0, t0 + 1.0).snapshot(t0)
            dt = self.pick_dt(snap_probe)
        if dt_cap is not None:
            dt = min(dt, dt_cap)
        t1 = t0 + dt
        geom = StepGeometry1D(nodes0, self._extended_nodes(t1), t0, t1)
        times = (t0, t1, 0.5 * (t0 + t1))
        rate = geom.speeds[GHOST + 1:GHOST + self.n + 1] - geom.speeds[GHOST:GHOST + self.n]
        self._alpha_stage = 0.0
        diag = StageDiagnostics()

        def rhs_eval(stage, y):
            return self.rhs(y, geom.snapshot(times[stage]), diag)

        try:
            ynew, vnew = ssprk3_gcl_step(self.state, self.volume,
                                         (rate, rate, rate), rhs_eval, dt)
        except TimeStepRejected as exc:
            raise NumericalFailure(str(exc)) from exc
        if not np.all(np.isfinite(ynew)):
            raise NumericalFailure(f"non-finite state at t={t1}")
        if self.cfg.bottom_mode is BottomMode.L2_PROJECTION:
            ynew[:, 2] = project_bottom_1d(
                self.bottom_fn, geom.nodes(t1)[GHOST:GHOST + self.n + 1],
                jumps=self.bottom_jumps)
        self.state = ynew
        self.volume = vnew
        self.t = t1
        self._alpha_prev = self._alpha_stage
        return dt, diag

    def run(self, t_end, record_every=0, snapshot_times=()):
        hist = RunHistory()
        snaps = sorted(t for t in snapshot_times if t > 1e-14)
        if any(t <= 1e-14 for t in snapshot_times):
            hist.snapshots[0.0] = self.snapshot_fields()
        self._record(hist)
        tiny = 1e-12 * max(1.0, abs(t_end))
        while self.t < t_end - tiny:
            cap = t_end - self.t
            if snaps:
                cap = min(cap, snaps[0] - self.t)
            _, diag = self.step(dt_cap=cap)
            hist.steps += 1
            if hist.steps > self.cfg.max_steps:
                raise NumericalFailure("step budget exceeded")
            hist.global_min_h_avg = min(
                hist.global_min_h_avg,
                float((self.state[:, 0] - self.state[:, 2]).min()))
            hist.global_min_h_point = min(hist.global_min_h_point, diag.min_h_point)
            if snaps and self.t >= snaps[0] - tiny:
                hist.snapshots[snaps.pop(0)] = self.snapshot_fields()
            if record_every and hist.steps % record_every == 0:
                self._record(hist, diag)
        self._record(hist)
        return hist

    def _record(self, hist, diag=None):
        hist.times.append(self.t)
        h = self.state[:, 0] - self.state[:, 2]
        hist.mass_h.append(float(np.sum(self.volume * h)))
        hist.mass_hu.append(float(np.sum(self.volume * self.state[:, 1])))
        hist.min_h_avg.append(float(h.min()))
        hist.min_h_point.append(diag.min_h_point if diag else float(h.min()))

    def snapshot_fields(self):
        nodes = self.motion.positions(self.t)
        return {
            "t": self.t,
            "nodes": nodes.copy(),
            "centers": 0.5 * (nodes[:-1] + nodes[1:]),
            "eta": self.state[:, 0].copy(),
            "hu": self.state[:, 1].copy(),
            "b": self.state[:, 2].copy(),
            "h": (self.state[:, 0] - self.state[:, 2]).copy(),
            "volume": self.volume.copy(),
        }

    def min_h_report(self):
        """Min water height over cell averages and limiter points, now."""
        ext = fill_ghosts_1d(self.state, *self.bc)
        nodes = self._extended_nodes(self.t)
        geom = StepGeometry1D(nodes, nodes, self.t, self.t + 1.0)
        snap = geom.snapshot(self.t)
        kern = self._kernels(snap)
        eta_p, hu_p, b_p = self._reconstruct(ext, kern)
        hbar_t = ext[GHOST - 1:GHOST + self.n + 1, 0] - ext[GHOST - 1:GHOST + self.n + 1, 2]
        h_p = eta_p - b_p
        if self.cfg.limiter:
            h_p, _ = limit_heights_1d(h_p, hbar_t, self.cfg.eps_floor)
        h = self.state[:, 0] - self.state[:, 2]
        return float(h.min()), float(h_p[1:self.n + 1].min())


def _slice_kernel(kern, lo, hi):
    """View of a kernel restricted to a contiguous batch range."""
    return rec.Kernel1D(kern.points, kern.c[lo:hi], kern.d[lo:hi], kern.big[lo:hi],
                        kern.q1[lo:hi], kern.q2[lo:hi], kern.width_c[lo:hi],
                        kern.dx_scale)

"""Nodal analysis of dendrite networks coupled through one electrolyte node.

Three layers:

* :func:`solve_linear_network` - Kirchhoff solve with conductances frozen at the
  current doping state,
* :func:`solve_dc` - damped fixed point of linear solve -> electrolyte
  potential -> equilibrium doping (quasi-static sweeps, traps frozen),
* :func:`run_transient` - operator-split time stepping of the same loop with
  first-order doping/trap dynamics.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import device
from .device import ElectrochemicalState
from .errors import ConvergenceError, DomainError, SolverError, StepError

KCL_RELATIVE_BOUND = 1e-12


@dataclass(frozen=True)
class BoundaryCondition:
    """Electrode drive: ``fixed`` maps electrode id -> volts; the rest float.

    Grounded electrodes are fixed at 0 V.
    """

    fixed: dict

    @classmethod
    def from_spec(cls, spec: dict) -> "BoundaryCondition":
        """Build from ``{id: volts | "ground" | "float"}``."""
        fixed = {}
        for eid, value in spec.items():
            if value == "ground":
                fixed[eid] = 0.0
            elif value in ("float", None):
                continue
            else:
                fixed[eid] = float(value)
        return cls(fixed)

    def scaled(self, alpha: float) -> "BoundaryCondition":
        return BoundaryCondition({k: alpha * v for k, v in self.fixed.items()})

    def __hash__(self):
        return hash(tuple(sorted(self.fixed.items())))


@dataclass
class LinearSolution:
    node_potentials: np.ndarray
    terminal_currents: np.ndarray  # A, per electrode in cell order, positive into the network
    residual: float  # max internal KCL imbalance (A)

    def currents(self, cell) -> dict:
        return dict(zip(cell.electrode_ids, self.terminal_currents))


@dataclass
class OperatingPoint:
    node_potentials: dict
    terminal_currents: dict
    state: ElectrochemicalState
    iterations: int
    kcl_residual: float


class _Stamp:
    """Precomputed partition of a cell's nodes for one boundary condition."""

    def __init__(self, cell, bc: BoundaryCondition):
        idx = cell.index
        n = idx.n_nodes
        eids = idx.electrode_ids
        unknown = set(bc.fixed) - set(eids)
        if unknown:
            raise SolverError(f"boundary condition names unknown electrode(s) {sorted(unknown)}")
        if not bc.fixed:
            raise SolverError("all electrodes floating: no potential reference")
        fixed_nodes = [eids.index(e) for e in bc.fixed]
        self.fixed = np.array(fixed_nodes, dtype=int)
        self.fixed_values = np.array([bc.fixed[e] for e in bc.fixed], dtype=float)
        is_fixed = np.zeros(n, bool)
        is_fixed[self.fixed] = True
        # floating electrodes without any dendrite sit at the electrolyte potential
        isolated = (~is_fixed) & (idx.degree == 0)
        self.isolated = np.flatnonzero(isolated)
        self.free = np.flatnonzero(~is_fixed & ~isolated)
        referenced = set(idx.component[self.fixed])
        for comp in sorted(set(idx.component[self.free]) - referenced):
            members = [idx.node_ids[i] for i in np.flatnonzero(idx.component == comp)]
            electrodes = [m for m in members if m in eids]
            raise SolverError(f"component {electrodes or members[:3]} has no fixed-potential electrode "
                              f"(singular system)", component=members)
        self.n = n
        a, b = idx.seg_a, idx.seg_b
        self.a, self.b = a, b
        self.flat = np.concatenate([a * n + a, b * n + b, a * n + b, b * n + a])
        # reduced (free-node) stamp: diagonal terms for every free endpoint,
        # off-diagonal terms for segments with both endpoints free
        pos = np.full(n, -1)
        pos[self.free] = np.arange(len(self.free))
        fa, fb = pos[a], pos[b]
        self.sel_a, self.sel_b = fa >= 0, fb >= 0
        both = self.sel_a & self.sel_b
        self.both = both
        m = len(self.free)
        self.m = m
        self.fa, self.fb = fa[self.sel_a], fb[self.sel_b]
        self.ff_flat = np.concatenate([self.fa * m + self.fa, self.fb * m + self.fb,
                                       fa[both] * m + fb[both], fb[both] * m + fa[both]])
        self.v0 = np.zeros(n)
        self.v0[self.fixed] = self.fixed_values
        self.rhs_a = self.v0[b[self.sel_a]]
        self.rhs_b = self.v0[a[self.sel_b]]
        # electrodes that contribute double-layer capacitance: all except isolated floating ones
        dl_mask = np.ones(len(eids), bool)
        dl_mask[[i for i in self.isolated if i < len(eids)]] = False
        self.dl_nodes = np.flatnonzero(dl_mask)
        internal = np.ones(n, bool)
        internal[self.fixed] = False
        internal[self.isolated] = False
        self.internal = internal
        floating_e = np.ones(len(eids), bool)
        floating_e[self.fixed] = False
        self.floating_electrodes = floating_e

    def matrix(self, g):
        """Full nodal conductance matrix (reference path, used by tests)."""
        n = self.n
        weights = np.concatenate([g, g, -g, -g])
        return np.bincount(self.flat, weights=weights, minlength=n * n).reshape(n, n)

    def solve(self, g):
        """Node potentials and the net current injected at every node."""
        v = self.v0.copy()
        m = self.m
        if m:
            ga, gb, gab = g[self.sel_a], g[self.sel_b], g[self.both]
            Gff = np.bincount(self.ff_flat, weights=np.concatenate([ga, gb, -gab, -gab]),
                              minlength=m * m).reshape(m, m)
            rhs = (np.bincount(self.fa, weights=ga * self.rhs_a, minlength=m)
                   + np.bincount(self.fb, weights=gb * self.rhs_b, minlength=m))
            try:
                factor = scipy.linalg.cho_factor(Gff, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"singular nodal matrix: {exc}") from exc
            vf = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
            # one round of iterative refinement keeps the KCL residual at round-off level
            vf = vf + scipy.linalg.cho_solve(factor, rhs - Gff @ vf, check_finite=False)
            v[self.free] = vf
        i_seg = g * (v[self.a] - v[self.b])
        injected = (np.bincount(self.a, weights=i_seg, minlength=self.n)
                    - np.bincount(self.b, weights=i_seg, minlength=self.n))
        return v, injected


def _conductances(cell, state):
    idx = cell.index
    return idx.g0 * device.conductance_factor(state.doping, state.trapped, cell.device_params)


def _check_state(cell, state):
    if tuple(state.segment_ids) != tuple(cell.segment_ids):
        raise SolverError("state does not cover exactly the cell's segments")


def _finish(cell, stamp: _Stamp, v, injected):
    idx = cell.index
    n_e = len(idx.electrode_ids)
    currents = injected[:n_e].copy()
    internal = stamp.internal
    currents[stamp.floating_electrodes] = 0.0
    residual = float(np.max(np.abs(injected[internal]))) if internal.any() else 0.0
    scale = float(np.max(np.abs(currents))) if n_e else 0.0
    # round-off floor for the degenerate case where every terminal current vanishes
    floor = 1e-15 * float(idx.g0.max(initial=0.0)) * float(np.max(np.abs(v), initial=0.0))
    floor = max(floor, np.finfo(float).tiny)  # subnormal drives
    if residual > max(KCL_RELATIVE_BOUND * scale, floor):
        raise SolverError(f"KCL residual {residual:.3e} A exceeds bound "
                          f"{KCL_RELATIVE_BOUND:.0e} x {scale:.3e} A")
    return currents, residual


def solve_linear_network(cell, state: ElectrochemicalState, bc: BoundaryCondition) -> LinearSolution:
    """Node potentials and terminal currents with doping frozen.

    Isolated floating electrodes (no dendrite attached) are reported at the
    electrolyte potential carried by ``state``.
    """
    _check_state(cell, state)
    stamp = _Stamp(cell, bc)
    v, injected = stamp.solve(_conductances(cell, state))
    currents, residual = _finish(cell, stamp, v, injected)
    v[stamp.isolated] = state.electrolyte_potential
    return LinearSolution(v, currents, residual)


def _electrolyte(idx, cw, c_dl, dl_nodes, v):
    mid = 0.5 * (v[idx.seg_a] + v[idx.seg_b])
    num = float(cw @ mid) + c_dl * float(v[dl_nodes].sum())
    den = float(cw.sum()) + c_dl * len(dl_nodes)
    return num / den


def electrolyte_potential(cell, state: ElectrochemicalState, node_potentials, bc: BoundaryCondition | None = None) -> float:
    """Capacitance-weighted mean of segment midpoints and electrode potentials.

    Segment weights are the distance-weighted coupling capacitances of the cell;
    every electrode adds its double-layer capacitance unless it is a floating
    electrode with no dendrite (which sits at the electrolyte potential and so
    drops out of the mean).  ``state`` is accepted for interface symmetry; the
    capacitances do not depend on doping.
    """
    idx = cell.index
    v = np.asarray(node_potentials, dtype=float)
    if v.shape != (idx.n_nodes,):
        raise DomainError("node_potentials must cover every node of the cell")
    if bc is None:
        dl_nodes = np.arange(len(idx.electrode_ids))
    else:
        dl_nodes = _Stamp(cell, bc).dl_nodes
    return _electrolyte(idx, idx.coupling, cell.electrode_dl_capacitance, dl_nodes, v)


def _equilibrium(cell, v, v_elec):
    idx = cell.index
    mid = 0.5 * (v[idx.seg_a] + v[idx.seg_b])
    return device.equilibrium_doping(v_elec - mid, cell.device_params)


def _as_dicts(cell, v, currents):
    return dict(zip(cell.index.node_ids, v)), dict(zip(cell.electrode_ids, currents))


def solve_dc(cell, bc: BoundaryCondition, initial: ElectrochemicalState | None = None, damping: float = 0.5,
             tol: float = 1e-10, max_iter: int = 200) -> OperatingPoint:
    """Quasi-static operating point with doping in equilibrium.

    Iterates ``s <- s + damping (s_eq(s) - s)`` until ``max |s_eq - s| < tol``.
    Trapped fractions are taken from ``initial`` and held fixed.
    """
    idx = cell.index
    state = cell.initial_state() if initial is None else initial.copy()
    _check_state(cell, state)
    stamp = _Stamp(cell, bc)
    cw, c_dl = idx.coupling, cell.electrode_dl_capacitance
    s = state.doping.copy()
    q = state.trapped
    cap = 1.0 - q
    residual = math.inf
    for it in range(1, max_iter + 1):
        g = idx.g0 * device.conductance_factor(s, q, cell.device_params)
        v, injected = stamp.solve(g)
        v[stamp.isolated] = 0.0
        v_elec = _electrolyte(idx, cw, c_dl, stamp.dl_nodes, v)
        target = np.minimum(_equilibrium(cell, v, v_elec), cap)
        residual = float(np.max(np.abs(target - s))) if len(s) else 0.0
        if residual < tol:
            currents, kcl = _finish(cell, stamp, v, injected)
            v[stamp.isolated] = v_elec
            final = ElectrochemicalState(state.segment_ids, s, q.copy(), v_elec)
            nodes, terms = _as_dicts(cell, v, currents)
            return OperatingPoint(nodes, terms, final, it, kcl)
        s = s + damping * (target - s)
    raise ConvergenceError("DC fixed point did not converge", residual, max_iter)


# -- transient -----------------------------------------------------------------

@dataclass
class Phase:
    duration: float
    bc: BoundaryCondition
    label: str = ""
    dt: float | None = None  # overrides the run's step inside this phase


@dataclass
class DriveWaveform:
    """Piecewise-constant electrode schedule: consecutive phases."""

    phases: list = field(default_factory=list)

    def add(self, duration: float, spec, label: str = "", dt: float | None = None) -> "DriveWaveform":
        bc = spec if isinstance(spec, BoundaryCondition) else BoundaryCondition.from_spec(spec)
        if not duration > 0:
            raise DomainError(f"phase duration must be > 0, got {duration!r}")
        if dt is not None and not dt > 0:
            raise DomainError(f"phase dt must be > 0, got {dt!r}")
        self.phases.append(Phase(float(duration), bc, label, None if dt is None else float(dt)))
        return self

    @property
    def duration(self) -> float:
        return sum(p.duration for p in self.phases)


@dataclass
class Trace:
    """Sampled transient: one row per step start plus the final instant."""

    times: np.ndarray
    electrode_ids: list
    currents: np.ndarray  # (N, n_electrodes)
    recorded_nodes: list
    potentials: np.ndarray  # (N, n_recorded)
    electrolyte: np.ndarray  # (N,)
    phase_index: np.ndarray  # (N,)
    phase_labels: list
    snapshots: list  # (t, doping, trapped)
    final_state: ElectrochemicalState
    max_kcl_ratio: float = 0.0
    phase_durations: list = field(default_factory=list)

    def phase_duration(self, k: int) -> float:
        return self.phase_durations[k]

    def current(self, electrode_id: str) -> np.ndarray:
        return self.currents[:, self.electrode_ids.index(electrode_id)]

    def to_csv(self, path) -> None:
        """time_s, electrolyte_V, I_<electrode>_A..., V_<node>_V... at full precision."""
        header = (["time_s", "electrolyte_V"] + [f"I_{e}_A" for e in self.electrode_ids]
                  + [f"V_{n}_V" for n in self.recorded_nodes])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self.times)):
                row = [self.times[k], self.electrolyte[k], *self.currents[k], *self.potentials[k]]
                w.writerow([repr(float(x)) for x in row])


def run_transient(cell, waveform: DriveWaveform, dt: float, initial: ElectrochemicalState | None = None,
                  record_nodes=None, snapshot_interval: float | None = None, t0: float = 0.0) -> Trace:
    """Integrate the cell through ``waveform`` with fixed step ``dt``.

    Per step: linear solve with the current doping, electrolyte potential,
    doping/trap update.  A phase whose duration is not a multiple of ``dt``
    ends with one shorter step.  ``dt`` must respect the explicit stability
    contract (a tenth of the fastest segment time constant).
    """
    idx = cell.index
    params = cell.device_params
    state = cell.initial_state() if initial is None else initial.copy()
    _check_state(cell, state)
    if not dt > 0:
        raise StepError(f"dt must be > 0, got {dt!r}")
    limit = cell.max_stable_dt() if len(idx.volume) else math.inf
    for h in [dt] + [p.dt for p in waveform.phases if p.dt is not None]:
        if h > limit * (1 + 1e-12):
            raise StepError(f"t={t0:.6g} s: dt={h:.3g} s exceeds stability limit {limit:.3g} s (tau_min/10)")
    record_nodes = list(idx.electrode_ids if record_nodes is None else record_nodes)
    rec = np.array([idx.node_ids.index(n) for n in record_nodes], dtype=int)
    tau_d, tau_r = device.time_constants(idx.volume, params)
    cw, c_dl = idx.coupling, cell.electrode_dl_capacitance
    n_e = len(idx.electrode_ids)

    times, currents, pots, elec, phase_of, snaps = [], [], [], [], [], []
    s, q = state.doping.copy(), state.trapped.copy()
    t = t0
    next_snap = t0
    worst = 0.0
    v_elec = state.electrolyte_potential
    stamp = None

    def sample(stamp, phase_k):
        nonlocal worst, v_elec
        g = idx.g0 * device.conductance_factor(s, q, params)
        v, injected = stamp.solve(g)
        v[stamp.isolated] = 0.0
        v_elec = _electrolyte(idx, cw, c_dl, stamp.dl_nodes, v)
        v[stamp.isolated] = v_elec
        try:
            cur, kcl = _finish(cell, stamp, v, injected)
        except SolverError as exc:
            raise SolverError(str(exc), time=t) from exc
        scale = np.max(np.abs(cur)) if n_e else 0.0
        if scale > 0:
            worst = max(worst, kcl / scale)
        times.append(t)
        currents.append(cur)
        pots.append(v[rec])
        elec.append(v_elec)
        phase_of.append(phase_k)
        return v

    for k, phase in enumerate(waveform.phases):
        try:
            stamp = _Stamp(cell, phase.bc)
        except SolverError as exc:
            raise SolverError(str(exc), component=exc.component, time=t) from exc
        h_nom = dt if phase.dt is None else phase.dt
        n_steps = max(1, math.ceil(phase.duration / h_nom - 1e-9))
        t_end = t + phase.duration
        for step in range(n_steps):
            h = h_nom if step < n_steps - 1 else (t_end - t)
            if h <= 0:
                break
            if snapshot_interval is not None and t >= next_snap - 1e-12:
                snaps.append((t, s.copy(), q.copy()))
                next_snap += snapshot_interval
            v = sample(stamp, k)
            s_eq = _equilibrium(cell, v, v_elec)
            s, q = device.relax(s, q, s_eq, tau_d, tau_r, h, params)
            t = t + h if step < n_steps - 1 else t_end
    if stamp is not None:
        sample(stamp, len(waveform.phases) - 1)
    final = ElectrochemicalState(state.segment_ids, s, q, v_elec)
    return Trace(
        times=np.array(times),
        electrode_ids=list(idx.electrode_ids),
        currents=np.array(currents).reshape(len(times), n_e),
        recorded_nodes=record_nodes,
        potentials=np.array(pots).reshape(len(times), len(rec)),
        electrolyte=np.array(elec),
        phase_index=np.array(phase_of, dtype=int),
        phase_labels=[p.label for p in waveform.phases],
        snapshots=snaps,
        final_state=final,
        max_kcl_ratio=worst,
        phase_durations=[p.duration for p in waveform.phases],
    )

"""Lumped electrochemical model of a PEDOT:PSS dendrite segment.

Every segment carries a doping fraction ``s`` (1 = fully doped, conductive) and a
trapped-cation fraction ``q``.  The channel conductance scales with ``s - q``,
the gating charge with the segment volume, and ``s`` relaxes first-order toward
a piecewise-linear equilibrium set by the local gate overpotential
``electrolyte potential - segment midpoint potential``.

Geometry is stored in micrometres; everything returned here is SI except the
per-volume time constants and the volumetric capacitance, which follow the
usual electrochemistry convention of cm^3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DomainError, StepError

UM_TO_CM = 1e-4


@dataclass(frozen=True)
class DeviceParams:
    """Material parameters shared by every segment of a cell.

    The defaults are a calibration bundle: they were fitted so the shipped demo
    cells reproduce the reported device behaviour, they are not measurements.
    ``trap_rate`` is the trapped fraction produced per unit of dedoping;
    it and ``trap_release_rate`` may be zero to switch traps off.
    """

    bulk_conductivity: float = 1.0  # S/cm
    volumetric_capacitance: float = 39.0  # F/cm^3
    pinchoff_voltage: float = 0.45  # V
    dedope_time_constant_per_volume: float = 1.0e9  # s/cm^3
    redope_time_constant_per_volume: float = 3.0e9  # s/cm^3
    residual_doping: float = 0.05
    trap_rate: float = 0.02  # trapped fraction per unit dedoping
    trap_release_rate: float = 2.0e-3  # 1/s

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            # trap terms may be switched off entirely (memoryless controls)
            ok = value >= 0 if f.name in ("trap_rate", "trap_release_rate") else value > 0
            if not (math.isfinite(value) and ok):
                raise DomainError(f"DeviceParams.{f.name} must be finite and positive, got {value!r}")
        if self.residual_doping >= 1:
            raise DomainError("DeviceParams.residual_doping must be < 1")

    def with_(self, **changes) -> "DeviceParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ElectrochemicalState:
    """Per-segment doping/trap fractions plus the shared electrolyte potential."""

    segment_ids: tuple
    doping: np.ndarray
    trapped: np.ndarray
    electrolyte_potential: float = 0.0

    def __post_init__(self):
        self.segment_ids = tuple(self.segment_ids)
        self.doping = np.array(self.doping, dtype=float)
        self.trapped = np.array(self.trapped, dtype=float)
        n = len(self.segment_ids)
        if len(set(self.segment_ids)) != n:
            raise DomainError("duplicate segment id in state")
        if self.doping.shape != (n,) or self.trapped.shape != (n,):
            raise DomainError("doping/trapped arrays must have one entry per segment")

    @classmethod
    def fully_doped(cls, segment_ids) -> "ElectrochemicalState":
        n = len(tuple(segment_ids))
        return cls(tuple(segment_ids), np.ones(n), np.zeros(n), 0.0)

    def copy(self) -> "ElectrochemicalState":
        return ElectrochemicalState(self.segment_ids, self.doping.copy(), self.trapped.copy(),
                                    float(self.electrolyte_potential))

    def index(self, segment_id: str) -> int:
        try:
            return self.segment_ids.index(segment_id)
        except ValueError:
            raise KeyError(f"segment {segment_id!r} not present in state") from None

    def __eq__(self, other):
        if not isinstance(other, ElectrochemicalState):
            return NotImplemented
        return (self.segment_ids == other.segment_ids
                and np.array_equal(self.doping, other.doping)
                and np.array_equal(self.trapped, other.trapped)
                and self.electrolyte_potential == other.electrolyte_potential)

    def check(self, params: DeviceParams) -> list[str]:
        """Return invariant violations (empty when the state is admissible)."""
        problems = []
        sr = params.residual_doping
        eps = 1e-12
        if np.any(self.doping < sr - eps) or np.any(self.doping > 1 + eps):
            problems.append("doping outside [residual_doping, 1]")
        if np.any(self.trapped < -eps) or np.any(self.trapped > 1 - sr + eps):
            problems.append("trapped outside [0, 1 - residual_doping]")
        if np.any(self.doping + self.trapped > 1 + eps):
            problems.append("doping + trapped exceeds 1")
        return problems


def _cross_section_cm2(radius_um):
    return np.pi * (np.asarray(radius_um, dtype=float) * UM_TO_CM) ** 2


def volume_cm3(radius_um, length_um):
    return _cross_section_cm2(radius_um) * np.asarray(length_um, dtype=float) * UM_TO_CM


def fully_doped_conductance(radius_um, length_um, params: DeviceParams):
    """sigma * pi r^2 / L in siemens."""
    return params.bulk_conductivity * _cross_section_cm2(radius_um) / (np.asarray(length_um, dtype=float) * UM_TO_CM)


def conductance_factor(doping, trapped, params: DeviceParams):
    return np.maximum(np.asarray(doping) - np.asarray(trapped), params.residual_doping)


def segment_conductance(segment, state: ElectrochemicalState, params: DeviceParams, key: str | None = None) -> float:
    """Channel conductance of one segment in siemens.

    ``key`` overrides the id used to look the segment up in ``state`` (cells
    qualify segment ids with their topology index).
    """
    i = state.index(segment.id if key is None else key)
    g0 = fully_doped_conductance(segment.radius, segment.length, params)
    return float(g0 * conductance_factor(state.doping[i], state.trapped[i], params))


def volumetric_capacitance_of(segment, params: DeviceParams) -> float:
    """Gating capacitance C = C* . pi r^2 L in farads."""
    return float(params.volumetric_capacitance * volume_cm3(segment.radius, segment.length))


def equilibrium_doping(overpotential, params: DeviceParams):
    """Steady-state doping for a gate overpotential (V); scalar or array.

    Linear from 1 at zero overpotential down to the residual doping at the
    pinch-off voltage, clamped on both sides.
    """
    sr = params.residual_doping
    s_eq = 1.0 - (1.0 - sr) * np.asarray(overpotential, dtype=float) / params.pinchoff_voltage
    s_eq = np.clip(s_eq, sr, 1.0)
    return float(s_eq) if s_eq.ndim == 0 else s_eq


def time_constants(volumes_cm3, params: DeviceParams):
    """(dedoping, redoping) relaxation times in seconds for the given volumes."""
    v = np.asarray(volumes_cm3, dtype=float)
    return params.dedope_time_constant_per_volume * v, params.redope_time_constant_per_volume * v


def max_stable_dt(volumes_cm3, params: DeviceParams) -> float:
    tau_d, tau_r = time_constants(volumes_cm3, params)
    return float(min(tau_d.min(), tau_r.min())) / 10.0


def relax(doping, trapped, s_eq, tau_dedope, tau_redope, dt, params: DeviceParams):
    """Advance (s, q) by ``dt`` with node potentials frozen over the step.

    The doping relaxation is integrated exactly over the step (exponential
    update), the trap population with a first-order update driven by the
    dedoping that happened during the step.  Invariants are restored by
    clamping: s in [s_r, 1 - q], q in [0, 1 - s_r].
    """
    sr = params.residual_doping
    target = np.minimum(s_eq, 1.0 - trapped)
    tau = np.where(target < doping, tau_dedope, tau_redope)
    s_new = target + (doping - target) * np.exp(-dt / tau)
    dedoped = np.maximum(doping - s_new, 0.0)
    q_new = trapped * math.exp(-params.trap_release_rate * dt) + params.trap_rate * dedoped
    q_new = np.clip(q_new, 0.0, 1.0 - sr)
    s_new = np.clip(s_new, sr, 1.0 - q_new)
    return s_new, q_new


def step_doping(state: ElectrochemicalState, node_potentials, dt: float, params: DeviceParams,
                segments) -> ElectrochemicalState:
    """One doping update for every segment of ``state``.

    ``node_potentials`` maps node id -> V, ``segments`` maps the state's segment
    ids to :class:`DendriteSegment` objects.  The gate potential is
    ``state.electrolyte_potential``.  Raises :class:`StepError` when ``dt``
    exceeds a tenth of the fastest segment time constant.
    """
    if not dt > 0:
        raise StepError(f"dt must be > 0, got {dt!r}")
    segs = [segments[sid] for sid in state.segment_ids]
    radius = np.array([s.radius for s in segs])
    length = np.array([s.length for s in segs])
    vol = volume_cm3(radius, length)
    limit = max_stable_dt(vol, params)
    if dt > limit * (1 + 1e-12):
        raise StepError(f"dt={dt:.3g} s exceeds stability limit {limit:.3g} s (tau_min/10)")
    v_mid = np.array([0.5 * (node_potentials[s.endpoints[0]] + node_potentials[s.endpoints[1]]) for s in segs])
    s_eq = equilibrium_doping(state.electrolyte_potential - v_mid, params)
    tau_d, tau_r = time_constants(vol, params)
    s_new, q_new = relax(state.doping, state.trapped, np.atleast_1d(s_eq), tau_d, tau_r, dt, params)
    return ElectrochemicalState(state.segment_ids, s_new, q_new, state.electrolyte_potential)

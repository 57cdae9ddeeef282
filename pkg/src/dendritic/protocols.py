"""Experiment procedures run on a :class:`SimulationCell`.

Output and transfer sweeps are quasi-static (one DC operating point per
voltage, traps frozen).  MAC, WRITE/READ/REST sequences and the fatigue stress
run through the transient integrator, so doping memory and traps are live.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, DomainError
from .solver import BoundaryCondition, DriveWaveform, run_transient, solve_dc

# -- sweeps --------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """One voltage sweep.

    ``swept`` electrodes are shorted together and stepped from ``start`` to
    ``stop``; ``grounded`` electrodes sit at 0 V (several grounded electrodes
    are the shorted ground group of the ``(1·2)-3`` notation).  ``bias`` holds
    extra fixed voltages and ``secondary`` = (electrode, values) turns the
    sweep into a family, one curve per secondary value.  Everything else
    floats.
    """

    swept: tuple
    grounded: tuple
    start: float = -0.9
    stop: float = 0.9
    step: float = 0.05
    monitor: str | None = None
    bias: dict = field(default_factory=dict)
    secondary: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "swept", tuple(self.swept))
        object.__setattr__(self, "grounded", tuple(self.grounded))
        if not self.swept:
            raise DomainError("sweep needs at least one swept electrode")
        if set(self.swept) & set(self.grounded):
            raise DomainError("swept and grounded electrode sets must be disjoint")
        if set(self.bias) & (set(self.swept) | set(self.grounded)):
            raise DomainError("biased electrodes must not be swept or grounded")
        if not self.step > 0:
            raise DomainError("sweep step must be > 0")
        n = abs(self.stop - self.start) / self.step
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise DomainError(f"step {self.step} does not divide the range {self.start}..{self.stop}")
        if self.secondary is not None:
            eid, values = self.secondary
            if eid in self.swept or eid in self.grounded:
                raise DomainError("secondary electrode must not be swept or grounded")
            object.__setattr__(self, "secondary", (eid, tuple(float(v) for v in values)))

    @property
    def monitored(self) -> str:
        return self.monitor or self.swept[0]

    def voltages(self) -> np.ndarray:
        """Sample voltages in ascending order."""
        lo, hi = sorted((self.start, self.stop))
        n = int(round((hi - lo) / self.step))
        return np.round(np.linspace(lo, hi, n + 1), 12)

    def spec(self, v: float, extra: dict | None = None) -> dict:
        out = {e: 0.0 for e in self.grounded}
        out.update(self.bias)
        if extra:
            out.update(extra)
        out.update({e: float(v) for e in self.swept})
        return out

    def label(self) -> str:
        """Configuration in the ``(grounded)-swept`` notation."""
        return f"({'·'.join(self.grounded)})-{'·'.join(self.swept)}"


@dataclass
class OutputCurve:
    voltages: np.ndarray
    currents: np.ndarray
    monitor: str
    label: str = ""

    def at(self, v: float) -> float:
        hit = np.flatnonzero(np.isclose(self.voltages, v, rtol=0, atol=1e-9))
        if hit.size == 0:
            raise DomainError(f"curve {self.label!r} has no sample at {v:+g} V")
        return float(self.currents[hit[0]])

    def slope(self, v: float) -> float:
        """Centred finite-difference dI/dV at ``v`` (one-sided at the ends)."""
        return float(np.gradient(self.currents, self.voltages)[np.argmin(np.abs(self.voltages - v))])


def _sweep(cell, config: SweepConfig, extra=None, initial=None, warm_start=False):
    currents = []
    state = initial
    for v in config.voltages():
        bc = BoundaryCondition.from_spec(config.spec(v, extra))
        try:
            op = solve_dc(cell, bc, initial=state if warm_start else initial)
        except ConvergenceError as exc:
            raise ConvergenceError(f"at {config.monitored}={v:+g} V: {exc}", exc.residual, exc.iterations) from exc
        state = op.state
        currents.append(op.terminal_currents[config.monitored])
    return np.array(currents)


def run_output_sweep(cell, config: SweepConfig, initial=None, warm_start: bool = False) -> OutputCurve:
    """Quasi-static I(V) at the monitored electrode, one DC solve per step.

    Every point starts from ``initial`` (the cell's rest state by default), so
    the samples do not depend on the sweep direction.  ``warm_start`` chains
    the points instead, which is faster on fine grids.
    """
    v = config.voltages()
    return OutputCurve(v, _sweep(cell, config, initial=initial, warm_start=warm_start), config.monitored, config.label())


def rectification_coefficient(curve: OutputCurve, v_max: float | None = None) -> float:
    """|I(+v_max)| / |I(-v_max)|; ``math.inf`` when the negative branch is zero."""
    if v_max is None:
        v_max = float(np.max(np.abs(curve.voltages)))
    pos, neg = abs(curve.at(v_max)), abs(curve.at(-v_max))
    if neg == 0.0:
        return math.inf
    return pos / neg


@dataclass
class RectificationEntry:
    label: str
    swept: str
    grounded: tuple
    coefficient: float


@dataclass
class RectificationTable:
    entries: list

    def as_dict(self) -> dict:
        return {e.label: e.coefficient for e in self.entries}

    def best(self) -> RectificationEntry:
        return max(self.entries, key=lambda e: e.coefficient)

    def __getitem__(self, label):
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)


def rectification_matrix(cell, electrodes=None, v_max: float = 0.9, step: float = 0.1) -> RectificationTable:
    """Coefficient for every (grounded group, swept electrode) configuration.

    Each electrode in turn is swept over ``[-v_max, v_max]`` against every
    non-empty subset of the remaining electrodes shorted to ground; the
    electrodes left out of a configuration float.  Labels follow the
    ``(E2·E3)-E1`` notation with grounded ids sorted.
    """
    ids = list(electrodes or cell.electrode_ids)
    if len(ids) < 3:
        raise DomainError("rectification matrix needs at least three electrodes")
    entries = []
    for swept in ids:
        others = [e for e in ids if e != swept]
        for k in range(1, len(others) + 1):
            for grounds in itertools.combinations(others, k):
                cfg = SweepConfig((swept,), grounds, -v_max, v_max, step)
                curve = run_output_sweep(cell, cfg)
                entries.append(RectificationEntry(cfg.label(), swept, grounds, rectification_coefficient(curve, v_max)))
    return RectificationTable(entries)


@dataclass
class TransferFamily:
    """Channel output curves, one per fixed gate-device bias."""

    gate: str
    gate_biases: np.ndarray
    curves: list

    def transfer_curve(self, channel_voltage: float) -> np.ndarray:
        """Drain current versus gate bias at one channel voltage."""
        return np.array([c.at(channel_voltage) for c in self.curves])

    def suppression(self, channel_voltage: float) -> float:
        """Fractional drain-current drop from the zero gate bias to the largest one."""
        i = self.transfer_curve(channel_voltage)
        zero = int(np.argmin(np.abs(self.gate_biases)))
        top = int(np.argmax(self.gate_biases))
        return 1.0 - i[top] / i[zero]


def run_transfer_sweep(cell, config: SweepConfig) -> TransferFamily:
    """Sweep the channel device once per gate bias in ``config.secondary``."""
    if config.secondary is None:
        raise DomainError("transfer sweep needs a secondary (gate electrode, biases) entry")
    gate, biases = config.secondary
    curves = []
    v = config.voltages()
    for b in biases:
        i = _sweep(cell, config, extra={gate: b})
        curves.append(OutputCurve(v, i, config.monitored, f"{gate}={b:+g} V"))
    return TransferFamily(gate, np.array(biases), curves)


# -- transient helpers ---------------------------------------------------------


def _read_dt(cell, duration, dt):
    return min(cell.max_stable_dt(), duration / 10.0) if dt is None else dt


def _window_mean(trace, phase_k, current, skip=0.2):
    """Mean of ``current`` over phase ``phase_k`` excluding the first ``skip`` fraction."""
    idx = np.flatnonzero(trace.phase_index == phase_k)
    t = trace.times[idx]
    t_start = t[0]
    t_end = t_start + trace.phase_duration(phase_k)
    keep = idx[t >= t_start + skip * (t_end - t_start) - 1e-12]
    if keep.size == 0:
        keep = idx[-1:]
    return float(np.mean(current[keep]))


# -- MAC -----------------------------------------------------------------------


def all_subsets(inputs) -> list:
    """Empty set first, then singles, pairs, ... in input order."""
    return [s for k in range(len(inputs) + 1) for s in itertools.combinations(tuple(inputs), k)]


@dataclass(frozen=True)
class MacConfig:
    inputs: tuple
    source: str
    drain: str
    pulse_amplitude: float = 0.6
    pulse_duration: float = 0.2
    read_bias: float = 0.1
    rest_duration: float | None = None  # defaults to 5 x pulse_duration
    schedule: tuple | None = None  # input subsets in firing order; all subsets by default
    grounded: tuple = ()
    idle: str = "ground"  # what unfired inputs do: "ground" or "float"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "grounded", tuple(self.grounded))
        if {self.source, self.drain} & set(self.inputs):
            raise DomainError("MAC inputs and readout electrodes must be disjoint")
        if self.idle not in ("ground", "float"):
            raise DomainError("idle must be 'ground' or 'float'")
        if not (self.pulse_duration > 0 and self.rest > 0):
            raise DomainError("pulse and rest durations must be > 0")
        sched = all_subsets(self.inputs) if self.schedule is None else [tuple(s) for s in self.schedule]
        for s in sched:
            if not set(s) <= set(self.inputs):
                raise DomainError(f"schedule entry {s} uses an unknown input")
        object.__setattr__(self, "schedule", tuple(sched))

    @property
    def rest(self) -> float:
        return 5.0 * self.pulse_duration if self.rest_duration is None else self.rest_duration

    def base_spec(self) -> dict:
        spec = {e: 0.0 for e in self.grounded}
        spec.update({self.source: 0.0, self.drain: self.read_bias})
        if self.idle == "ground":
            spec.update({e: 0.0 for e in self.inputs})
        return spec


@dataclass
class MacResult:
    trace: object
    modulation: dict  # subset tuple -> steady-pulse dI/I

    def percent(self) -> dict:
        return {"+".join(k) or "-": 100.0 * v for k, v in self.modulation.items()}


def run_mac(cell, config: MacConfig, dt: float | None = None, initial=None, t0: float = 0.0) -> MacResult:
    """Fire every scheduled input subset once, separated by rest intervals.

    The modulation of a subset is the drain-current mean over its pulse
    (first 20% dropped) relative to the tail (last 20%) of the preceding rest.
    """
    base = config.base_spec()
    w = DriveWaveform()
    w.add(config.rest, base, "rest")
    for s in config.schedule:
        spec = dict(base)
        spec.update({e: config.pulse_amplitude for e in s})
        w.add(config.pulse_duration, spec, "pulse:" + "+".join(s))
        w.add(config.rest, base, "rest")
    dt = min(cell.max_stable_dt(), config.pulse_duration / 20.0) if dt is None else dt
    trace = run_transient(cell, w, dt, initial=initial, t0=t0)
    i = trace.current(config.drain)
    mod = {}
    for k, s in enumerate(config.schedule):
        pulse_k = 2 * k + 1
        rest_idx = np.flatnonzero(trace.phase_index == pulse_k - 1)
        tail = rest_idx[-max(1, len(rest_idx) // 5):]
        before = float(np.mean(i[tail]))
        mod[s] = delta_i_over_i(_window_mean(trace, pulse_k, i), before)
    return MacResult(trace, mod)


# -- bit sequences -------------------------------------------------------------

DEFAULT_PATTERNS = ("111", "000", "110", "011", "101", "100", "010", "001")


@dataclass(frozen=True)
class BitPattern:
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or any(b not in (0, 1) for b in bits):
            raise DomainError(f"bit pattern must be a non-empty sequence of 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text) -> "BitPattern":
        if isinstance(text, BitPattern):
            return text
        if isinstance(text, str):
            return cls(tuple(int(c) for c in text.strip()))
        return cls(tuple(text))

    def __str__(self):
        return "".join(map(str, self.bits))

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class SequenceProgram:
    """WRITE/READ/REST program.

    Each pattern is written for ``write_duration`` (bit 1 -> ``high_voltage``,
    bit 0 -> ``low_voltage``, readout grounded), read for ``read_duration``
    with ``read_bias`` across the readout, then everything rests grounded for
    ``rest_duration``.  ``I_REST`` comes from a probe of the same bias and
    length at the end of each REST (an all-grounded readout carries no
    current); one extra REST + probe opens the program.  ``warmup_cycles``
    conditioning cycles run first; they stay in the raw trace but signature
    extraction skips them.
    """

    input_electrodes: tuple
    readout_source: str = "R_S"
    readout_drain: str = "R_D"
    patterns: tuple = DEFAULT_PATTERNS
    write_duration: float = 10.0
    read_duration: float = 0.05
    rest_duration: float = 10.0
    high_voltage: float = 0.6
    low_voltage: float = -0.6
    read_bias: float = 0.1
    cycles: int = 1
    idle: str = "ground"  # electrodes outside the program: "ground" or "float"
    warmup_cycles: int = 0

    def __post_init__(self):
        object.__setattr__(self, "input_electrodes", tuple(self.input_electrodes))
        pats = tuple(BitPattern.parse(p) for p in self.patterns)
        object.__setattr__(self, "patterns", pats)
        if not pats:
            raise DomainError("program needs at least one pattern")
        for p in pats:
            if len(p) != len(self.input_electrodes):
                raise DomainError(f"pattern {p} has {len(p)} bits for {len(self.input_electrodes)} inputs")
        if min(self.write_duration, self.read_duration, self.rest_duration) <= 0:
            raise DomainError("durations must be > 0")
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise DomainError("cycles must be an integer >= 1")
        if int(self.warmup_cycles) != self.warmup_cycles or self.warmup_cycles < 0:
            raise DomainError("warmup_cycles must be an integer >= 0")
        if not self.high_voltage > 0 > self.low_voltage:
            raise DomainError("need high_voltage > 0 > low_voltage")
        if {self.readout_source, self.readout_drain} & set(self.input_electrodes):
            raise DomainError("inputs and readout electrodes must be disjoint")
        if self.idle not in ("ground", "float"):
            raise DomainError("idle must be 'ground' or 'float'")

    @property
    def total_cycles(self) -> int:
        return int(self.warmup_cycles + self.cycles)

    def with_(self, **changes) -> "SequenceProgram":
        return replace(self, **changes)

    def shuffled(self, order) -> "SequenceProgram":
        """Same patterns presented in ``order`` (indices into ``patterns``)."""
        return self.with_(patterns=tuple(self.patterns[k] for k in order))


def encode_pattern(pattern: BitPattern, program: SequenceProgram) -> dict:
    pattern = BitPattern.parse(pattern)
    if len(pattern) != len(program.input_electrodes):
        raise DomainError(f"pattern {pattern} does not match {len(program.input_electrodes)} input electrodes")
    return {e: (program.high_voltage if b else program.low_voltage)
            for e, b in zip(program.input_electrodes, pattern.bits)}


def delta_i_over_i(i_read: float, i_rest: float) -> float:
    if i_rest == 0:
        raise DomainError("I_REST is zero; dI/I undefined")
    return (i_read - i_rest) / i_rest


@dataclass
class SequenceTrace:
    program: SequenceProgram
    trace: object
    i_read: np.ndarray  # (warm-up + measured cycles) x patterns, NaN where a step is missing
    i_rest: np.ndarray

    @property
    def final_state(self):
        return self.trace.final_state

    def baseline(self) -> np.ndarray:
        """Raw I_REST in chronological order (drift diagnostics)."""
        return self.i_rest.ravel()


def _sequence_waveform(cell, program: SequenceProgram, dt_read):
    ground_all = {e: 0.0 for e in (program.input_electrodes + (program.readout_source, program.readout_drain))}
    if program.idle == "ground":
        ground_all.update({e: 0.0 for e in cell.electrode_ids})
    read = dict(ground_all)
    read[program.readout_drain] = program.read_bias
    w = DriveWaveform()
    w.add(program.rest_duration, ground_all, "rest")
    w.add(program.read_duration, read, "probe", dt=dt_read)
    for c in range(program.total_cycles):
        for k, p in enumerate(program.patterns):
            write = dict(ground_all)
            write.update(encode_pattern(p, program))
            w.add(program.write_duration, write, f"write:{c}:{k}")
            w.add(program.read_duration, read, f"read:{c}:{k}", dt=dt_read)
            w.add(program.rest_duration, ground_all, f"rest:{c}:{k}")
            w.add(program.read_duration, read, f"probe:{c}:{k}", dt=dt_read)
    return w


def run_sequence(cell, program: SequenceProgram, initial=None, dt: float | None = None,
                 dt_read: float | None = None, t0: float = 0.0) -> SequenceTrace:
    """Run the program; ``initial`` lets consecutive runs share device state.

    ``dt`` drives WRITE/REST (stability limit by default), ``dt_read`` the
    READ windows (a tenth of the window by default, capped by the limit).
    I_READ is the mean drain current over the window minus its first 20%.
    """
    dt = cell.max_stable_dt() if dt is None else dt
    dt_read = _read_dt(cell, program.read_duration, dt_read)
    w = _sequence_waveform(cell, program, dt_read)
    trace = run_transient(cell, w, dt, initial=initial, t0=t0)
    i = trace.current(program.readout_drain)
    n_c, n_p = program.total_cycles, len(program.patterns)
    i_read = np.full((n_c, n_p), np.nan)
    i_rest = np.full((n_c, n_p), np.nan)
    probes = [1] + [k for k, lab in enumerate(trace.phase_labels) if lab.startswith("probe:")]
    for k, lab in enumerate(trace.phase_labels):
        if lab.startswith("read:"):
            _, c, p = lab.split(":")
            c, p = int(c), int(p)
            i_read[c, p] = _window_mean(trace, k, i)
            i_rest[c, p] = _window_mean(trace, probes[c * n_p + p], i)
    return SequenceTrace(program, trace, i_read, i_rest)


# -- fatigue -------------------------------------------------------------------


@dataclass
class FatigueResult:
    trace: object
    conductance_before: float  # S, probed at read_bias before the stress train
    conductance_after: float  # S, probed after the final recovery window
    stress_currents: np.ndarray  # mean drain current of each stress window

    @property
    def drop(self) -> float:
        """Fractional conductance loss caused by the stress train."""
        return 1.0 - self.conductance_after / self.conductance_before


def run_fatigue(cell, drain: str, source: str, voltage: float = 0.9, cycles: int = 100,
                on_duration: float = 5.0, off_duration: float = 5.0, read_bias: float = 0.1,
                probe_duration: float = 0.5, grounded=(), dt: float | None = None, initial=None) -> FatigueResult:
    """Repeated drain stress bracketed by two small-bias conductance probes.

    Each cycle holds ``voltage`` for ``on_duration`` then grounds the drain
    for ``off_duration``; the closing probe follows the last recovery window.
    ``grounded`` electrodes (other devices in the cell) stay at 0 V.
    """
    if cycles < 1:
        raise DomainError("fatigue needs at least one stress cycle")
    if read_bias == 0:
        raise DomainError("read_bias must be nonzero")
    rest = {e: 0.0 for e in grounded}
    probe = {**rest, source: 0.0, drain: read_bias}
    on = {**rest, source: 0.0, drain: voltage}
    off = {**rest, source: 0.0, drain: 0.0}
    dt_probe = _read_dt(cell, probe_duration, None)
    w = DriveWaveform()
    w.add(probe_duration, probe, "probe:before", dt=dt_probe)
    for c in range(cycles):
        w.add(on_duration, on, f"stress:{c}")
        w.add(off_duration, off, f"recover:{c}")
    w.add(probe_duration, probe, "probe:after", dt=dt_probe)
    trace = run_transient(cell, w, cell.max_stable_dt() if dt is None else dt, initial=initial)
    i = trace.current(drain)
    last = len(w.phases) - 1
    g0 = _window_mean(trace, 0, i) / read_bias
    g1 = _window_mean(trace, last, i) / read_bias
    means = np.array([_window_mean(trace, 1 + 2 * c, i) for c in range(cycles)])
    return FatigueResult(trace, g0, g1, means)

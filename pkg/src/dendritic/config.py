"""Run configuration files and persisted cell state.

A run config is a YAML mapping with the top-level keys ``seed``, ``output``,
``device``, ``cell`` and ``protocol``.  Parsing is strict: unknown keys,
duplicate keys and wrong types are errors that carry the YAML line/column
and the dotted field path.  Every default is materialized into
:attr:`RunConfig.resolved`, which is echoed into the run manifest.

Relative paths inside a config (``output``, ``cell.topologies``) resolve
against the directory holding the config file.

Seeds: the global ``seed`` is the growth seed of a grown cell; device ``k`` of
a uniqueness population is grown with ``seed + k``.  Nothing else draws
random numbers.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import cells
from .device import DeviceParams, ElectrochemicalState
from .errors import ConfigError, DendriticError, StateFormatError
from .protocols import DEFAULT_PATTERNS, BitPattern, MacConfig, SequenceProgram, SweepConfig
from .topology import (ROLES, ElectrodeSpec, GrowthParams, SimulationCell, assemble_cell, grow_network,
                       load_topology)

STATE_FORMAT = "dendritic-state"
STATE_VERSION = 1

PROTOCOLS = ("sweep", "rectify", "transfer", "mac", "sequence", "signature", "uniqueness")
PRESETS = {
    "y-device": ("E1", "E2", "E3", "C"),
    "gating-pair": ("B_S", "B_D", "T_S", "T_D"),
    "mac": ("IN1", "IN2", "IN3", "G", "R_S", "R_D"),
    "network": cells.NETWORK_INPUTS + ("R_S", "R_D"),
    "twin": ("R_S", "R_D", "L1", "L2", "L3", "LG", "H1", "H2", "H3", "HG"),
}
GROWN_PRESETS = ("network", "twin")

REQUIRED = object()


# -- YAML with positions ----------------------------------------------------------

def _fmt(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 wants a dot in floats; accept 1e-9 style exponents as numbers too
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"))


class _Doc:
    """Plain Python data plus the source position of every node."""

    def __init__(self, text: str):
        loader = _Loader(text)
        self.marks = {}
        self.raw = {}  # scalar source text, for values YAML would reinterpret (011 is octal)
        try:
            node = loader.get_single_node()
            self.data = {} if node is None else self._build(loader, node, ())
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
            problem = (exc.problem or exc.context or "invalid YAML").strip()
            raise ConfigError(f"YAML parse error: {problem}", line, col) from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"YAML parse error: {exc}") from None
        finally:
            loader.dispose()

    def _build(self, loader, node, path):
        self.marks[path] = node.start_mark
        if isinstance(node, yaml.MappingNode):
            out = {}
            for key_node, value_node in node.value:
                key = loader.construct_object(key_node, deep=True)
                if not isinstance(key, str):
                    m = key_node.start_mark
                    raise ConfigError(f"keys must be strings, got {key!r}", m.line + 1, m.column + 1, _fmt(path))
                if key in out:
                    m = key_node.start_mark
                    raise ConfigError(f"duplicate key {key!r}", m.line + 1, m.column + 1, _fmt(path + (key,)))
                out[key] = self._build(loader, value_node, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._build(loader, v, path + (k,)) for k, v in enumerate(node.value)]
        self.raw[path] = node.value
        return loader.construct_object(node, deep=True)

    def error(self, message, path) -> ConfigError:
        # nearest recorded ancestor gives the position
        p = tuple(path)
        while p not in self.marks and p:
            p = p[:-1]
        mark = self.marks.get(p)
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        return ConfigError(message, line, col, _fmt(path) or None)


# -- scalar converters ------------------------------------------------------------

def _float(doc, v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise doc.error(f"expected a number, got {v!r}", path)
    return float(v)


def _opt_float(doc, v, path):
    return None if v is None else _float(doc, v, path)


def _int(doc, v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise doc.error(f"expected an integer, got {v!r}", path)
    return int(v)


def _str(doc, v, path):
    if not isinstance(v, str) or not v:
        raise doc.error(f"expected a non-empty string, got {v!r}", path)
    return v


def _opt_str(doc, v, path):
    return None if v is None else _str(doc, v, path)


def _list(doc, v, path):
    if not isinstance(v, list):
        raise doc.error(f"expected a list, got {v!r}", path)
    return v


def _str_list(doc, v, path):
    return [_str(doc, x, path + (k,)) for k, x in enumerate(_list(doc, v, path))]


def _float_list(doc, v, path):
    return [_float(doc, x, path + (k,)) for k, x in enumerate(_list(doc, v, path))]


def _float_map(doc, v, path):
    if not isinstance(v, dict):
        raise doc.error("expected a mapping of electrode id to volts", path)
    return {k: _float(doc, x, path + (k,)) for k, x in v.items()}


def _patterns(doc, v, path):
    out = []
    for k, x in enumerate(_list(doc, v, path)):
        try:
            out.append(str(BitPattern.parse(str(doc.raw.get(path + (k,), x)))))
        except (DendriticError, ValueError):
            raise doc.error(f"not a bit pattern: {x!r}", path + (k,)) from None
    return out


def _schedule(doc, v, path):
    return None if v is None else [_str_list(doc, x, path + (k,)) for k, x in enumerate(_list(doc, v, path))]


def _choice(*options):
    def conv(doc, v, path):
        if v not in options:
            raise doc.error(f"expected one of {', '.join(options)}, got {v!r}", path)
        return v
    return conv


def _projections(doc, v, path):
    if v is None:
        return None
    if not isinstance(v, dict) or not v:
        raise doc.error("expected a non-empty mapping of label to input electrode list", path)
    return {_str(doc, k, path): _str_list(doc, x, path + (k,)) for k, x in v.items()}


def _fields(doc, data, path, schema) -> dict:
    """Strictly convert ``data`` against ``schema`` {name: (converter, default)}."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise doc.error("expected a mapping", path)
    for key in data:
        if key not in schema:
            raise doc.error(f"unknown field {key!r}", path + (key,))
    out = {}
    for name, (conv, default) in schema.items():
        if name in data:
            out[name] = conv(doc, data[name], path + (name,))
        elif default is REQUIRED:
            raise doc.error(f"missing required field {name!r}", path + (name,))
        else:
            out[name] = default() if callable(default) else default
    return out


# -- schemas ---------------------------------------------------------------------

_SWEEP = {
    "swept": (_str_list, REQUIRED),
    "grounded": (_str_list, REQUIRED),
    "start": (_float, -0.9),
    "stop": (_float, 0.9),
    "step": (_float, 0.05),
    "monitor": (_opt_str, None),
    "bias": (_float_map, dict),
}
_TRANSFER = dict(_SWEEP, gate=(_str, REQUIRED), gate_biases=(_float_list, lambda: [0.0, 0.3, 0.6, 0.9]))
_RECTIFY = {
    "electrodes": (lambda d, v, p: None if v is None else _str_list(d, v, p), None),
    "v_max": (_float, 0.9),
    "step": (_float, 0.1),
}
_MAC = {
    "inputs": (_str_list, REQUIRED),
    "source": (_str, REQUIRED),
    "drain": (_str, REQUIRED),
    "pulse_amplitude": (_float, 0.6),
    "pulse_duration": (_float, 0.2),
    "read_bias": (_float, 0.1),
    "rest_duration": (_opt_float, None),
    "schedule": (_schedule, None),
    "grounded": (_str_list, list),
    "idle": (_choice("ground", "float"), "ground"),
    "dt": (_opt_float, None),
}
_SEQUENCE = {
    "inputs": (lambda d, v, p: None if v is None else _str_list(d, v, p), None),
    "projections": (_projections, None),
    "readout_source": (_str, "R_S"),
    "readout_drain": (_str, "R_D"),
    "patterns": (_patterns, lambda: list(DEFAULT_PATTERNS)),
    "write_duration": (_float, 10.0),
    "read_duration": (_float, 0.05),
    "rest_duration": (_float, 10.0),
    "high_voltage": (_float, 0.6),
    "low_voltage": (_float, -0.6),
    "read_bias": (_float, 0.1),
    "cycles": (_int, 1),
    "warmup_cycles": (_int, 0),
    "idle": (_choice("ground", "float"), "ground"),
    "dt": (_opt_float, None),
}
_SIGNATURE = dict(_SEQUENCE, resolution=(_float, 0.002), threshold=(_float, 3.0))
_UNIQUENESS = dict(_SIGNATURE, devices=(_int, 20), replicates=(_int, 2))
_SCHEMAS = {"sweep": _SWEEP, "rectify": _RECTIFY, "transfer": _TRANSFER, "mac": _MAC,
            "sequence": _SEQUENCE, "signature": _SIGNATURE, "uniqueness": _UNIQUENESS}

_DEVICE = {f: (_float, getattr(DeviceParams(), f)) for f in DeviceParams().as_dict()}
_GROWTH = {f: ((_int if f in ("max_steps", "max_segments") else _float), v)
           for f, v in GrowthParams().as_dict().items() if f != "seed"}
_CELL = {
    "preset": (_choice(*PRESETS), None),
    "topologies": (lambda d, v, p: None if v is None else _str_list(d, v, p), None),
    "electrodes": (lambda d, v, p: v, None),
    "growth": (lambda d, v, p: v, None),
    "pairs": (lambda d, v, p: v, None),
    "dl_capacitance": (_float, cells.DL_CAPACITANCE),
    "coupling_exponent": (_float, 1.0),
    "coupling_length": (_float, 100.0),
}
_ELECTRODE = {
    "id": (_str, REQUIRED),
    "position": (_float_list, REQUIRED),
    "role": (_choice(*ROLES), "input"),
}


# -- RunConfig ---------------------------------------------------------------------

@dataclass
class RunConfig:
    """A fully validated run configuration with every default filled in."""

    path: Path
    sha256: str
    seed: int
    output: Path | None
    device: DeviceParams
    cell: dict
    protocol: str | None
    settings: dict = field(default_factory=dict)  # materialized protocol section
    topologies: list = field(default_factory=list)  # loaded topology files

    @property
    def resolved(self) -> dict:
        """Materialized config, JSON-ready (echoed into manifests)."""
        cell = dict(self.cell)
        if cell.get("growth") is not None:
            cell["growth"] = dict(cell["growth"])
        out = {"seed": self.seed, "output": None if self.output is None else str(self.output),
               "device": self.device.as_dict(), "cell": cell}
        out["protocol"] = None if self.protocol is None else {self.protocol: self.settings}
        return out

    def electrode_ids(self) -> list:
        if self.cell["preset"] is not None:
            return list(PRESETS[self.cell["preset"]])
        if self.topologies:
            return [e for t in self.topologies for e in t.electrode_ids]
        return [e["id"] for e in self.cell["electrodes"]]

    def build_cell(self, seed: int | None = None) -> SimulationCell:
        """Assemble the configured cell; ``seed`` overrides the growth seed."""
        seed = self.seed if seed is None else seed
        c, params = self.cell, self.device
        if c["preset"] == "y-device":
            return cells.y_device(params)
        if c["preset"] == "gating-pair":
            return cells.gating_pair(params)
        if c["preset"] == "mac":
            return cells.mac_cell(params)
        if c["preset"] == "network":
            return cells.network_cell(seed, params)
        if c["preset"] == "twin":
            return cells.twin_cell(seed, params)
        if self.topologies:
            topos = self.topologies
        else:
            els = [ElectrodeSpec(e["id"], tuple(e["position"]), e["role"]) for e in c["electrodes"]]
            gp = GrowthParams(seed=seed, **c["growth"])
            topos = [grow_network(els, gp, c["pairs"], name=f"grown-{seed}")]
        return assemble_cell(topos, c["dl_capacitance"], params, c["coupling_exponent"], c["coupling_length"])

    @property
    def grown(self) -> bool:
        return self.cell["preset"] in GROWN_PRESETS or self.cell["electrodes"] is not None

    # -- protocol objects -------------------------------------------------
    def sweep_config(self) -> SweepConfig:
        s = self.settings
        secondary = (s["gate"], s["gate_biases"]) if self.protocol == "transfer" else None
        return SweepConfig(tuple(s["swept"]), tuple(s["grounded"]), s["start"], s["stop"], s["step"],
                           s["monitor"], dict(s["bias"]), secondary)

    def mac_config(self) -> MacConfig:
        s = {k: v for k, v in self.settings.items() if k != "dt"}
        if s["schedule"] is not None:
            s["schedule"] = tuple(tuple(x) for x in s["schedule"])
        return MacConfig(**s)

    def programs(self) -> dict:
        """Label -> SequenceProgram, in config order."""
        s = self.settings
        common = dict(readout_source=s["readout_source"], readout_drain=s["readout_drain"],
                      patterns=tuple(s["patterns"]), write_duration=s["write_duration"],
                      read_duration=s["read_duration"], rest_duration=s["rest_duration"],
                      high_voltage=s["high_voltage"], low_voltage=s["low_voltage"], read_bias=s["read_bias"],
                      cycles=s["cycles"], warmup_cycles=s["warmup_cycles"], idle=s["idle"])
        projections = s["projections"] or {"main": s["inputs"]}
        return {label: SequenceProgram(tuple(inputs), **common) for label, inputs in projections.items()}


def _check_cell(doc, cell, base: Path):
    """Cross-field checks of the cell section; returns loaded topologies."""
    given = [k for k in ("preset", "topologies", "electrodes") if cell[k] is not None]
    if len(given) != 1:
        raise doc.error("give exactly one of 'preset', 'topologies' or 'electrodes'", ("cell",))
    if cell["electrodes"] is None:
        for k in ("growth", "pairs"):
            if cell[k] is not None:
                raise doc.error(f"'{k}' only applies to grown 'electrodes' cells", ("cell", k))
    if cell["preset"] is not None:
        for k, default in (("dl_capacitance", cells.DL_CAPACITANCE), ("coupling_exponent", 1.0),
                           ("coupling_length", 100.0)):
            if cell[k] != default:
                raise doc.error(f"'{k}' is fixed by the preset", ("cell", k))
    topologies = []
    if cell["topologies"] is not None:
        for k, p in enumerate(cell["topologies"]):
            path = (base / p)
            if not path.is_file():
                raise FileNotFoundError(f"topology file not found: {path} (field 'cell.topologies[{k}]')")
            try:
                topologies.append(load_topology(path))
            except StateFormatError as exc:
                raise doc.error(f"cannot load topology {p}: {exc}", ("cell", "topologies", k)) from None
        seen = set()
        for t in topologies:
            for eid in t.electrode_ids:
                if eid in seen:
                    raise doc.error(f"duplicate electrode id {eid!r} across topology files", ("cell", "topologies"))
                seen.add(eid)
    if cell["electrodes"] is not None:
        raw = _list(doc, cell["electrodes"], ("cell", "electrodes"))
        els, seen = [], set()
        for k, e in enumerate(raw):
            e = _fields(doc, e, ("cell", "electrodes", k), _ELECTRODE)
            if len(e["position"]) != 2:
                raise doc.error("position must be [x, y] in um", ("cell", "electrodes", k, "position"))
            if e["id"] in seen:
                raise doc.error(f"duplicate electrode id {e['id']!r}", ("cell", "electrodes", k, "id"))
            seen.add(e["id"])
            els.append(e)
        if len(els) < 2:
            raise doc.error("a grown cell needs at least two electrodes", ("cell", "electrodes"))
        cell["electrodes"] = els
        growth = _fields(doc, cell["growth"], ("cell", "growth"), _GROWTH)
        try:
            GrowthParams(**growth)
        except DendriticError as exc:
            raise doc.error(str(exc), ("cell", "growth")) from None
        cell["growth"] = growth
        if cell["pairs"] is not None:
            pairs = []
            for k, p in enumerate(_list(doc, cell["pairs"], ("cell", "pairs"))):
                p = _str_list(doc, p, ("cell", "pairs", k))
                if len(p) != 2 or p[0] == p[1] or not set(p) <= seen:
                    raise doc.error(f"pair {p} must name two distinct configured electrodes", ("cell", "pairs", k))
                pairs.append(p)
            cell["pairs"] = pairs
    return topologies


def _check_protocol(doc, cfg: RunConfig):
    """Build the protocol objects once so domain errors surface with a field path."""
    path = ("protocol", cfg.protocol)
    s = cfg.settings
    ids = set(cfg.electrode_ids())

    def known(names, key):
        for n in names:
            if n not in ids:
                raise doc.error(f"unknown electrode {n!r}", path + (key,))

    try:
        if cfg.protocol in ("sweep", "transfer"):
            known(s["swept"] + s["grounded"] + list(s["bias"]), "swept")
            if s["monitor"] is not None:
                known([s["monitor"]], "monitor")
            if cfg.protocol == "transfer":
                known([s["gate"]], "gate")
            cfg.sweep_config()
        elif cfg.protocol == "rectify":
            if s["electrodes"] is not None:
                known(s["electrodes"], "electrodes")
            if not (s["v_max"] > 0 and s["step"] > 0):
                raise doc.error("v_max and step must be > 0", path)
        elif cfg.protocol == "mac":
            known(s["inputs"] + [s["source"], s["drain"]] + s["grounded"], "inputs")
            mc = cfg.mac_config()
            s["rest_duration"] = mc.rest
            s["schedule"] = [list(x) for x in mc.schedule]
            if s["dt"] is not None and not s["dt"] > 0:
                raise doc.error("dt must be > 0", path + ("dt",))
        else:
            if (s["inputs"] is None) == (s["projections"] is None):
                raise doc.error("give exactly one of 'inputs' or 'projections'", path)
            for label, prog in cfg.programs().items():
                known(prog.input_electrodes + (prog.readout_source, prog.readout_drain),
                      "inputs" if s["inputs"] is not None else "projections")
            if s["dt"] is not None and not s["dt"] > 0:
                raise doc.error("dt must be > 0", path + ("dt",))
            if cfg.protocol in ("signature", "uniqueness") and not s["resolution"] > 0:
                raise doc.error("resolution must be > 0", path + ("resolution",))
            if cfg.protocol == "uniqueness":
                if s["projections"] is not None and len(s["projections"]) != 1:
                    raise doc.error("uniqueness runs one input set; use 'inputs'", path + ("projections",))
                if s["devices"] < 2:
                    raise doc.error("uniqueness needs at least two devices", path + ("devices",))
                if s["replicates"] < 2:
                    raise doc.error("uniqueness needs at least two replicates", path + ("replicates",))
                if not cfg.grown:
                    raise doc.error("uniqueness needs a grown cell (preset network/twin or 'electrodes')", ("cell",))
    except ConfigError:
        raise
    except DendriticError as exc:
        raise doc.error(str(exc), path) from None


def parse_config(text: str, base: Path | str = ".", path: Path | str = "<string>") -> RunConfig:
    """Validate config ``text``; relative paths resolve against ``base``."""
    base = Path(base)
    doc = _Doc(text)
    data = doc.data
    if not isinstance(data, dict):
        raise doc.error("a config must be a mapping", ())
    for key in data:
        if key not in ("seed", "output", "device", "cell", "protocol"):
            raise doc.error(f"unknown field {key!r}", (key,))
    seed = _int(doc, data.get("seed", 0), ("seed",))
    if seed < 0:
        raise doc.error("seed must be >= 0", ("seed",))
    output = _opt_str(doc, data.get("output"), ("output",))
    device = _fields(doc, data.get("device"), ("device",), _DEVICE)
    try:
        params = DeviceParams(**device)
    except DendriticError as exc:
        raise doc.error(str(exc), ("device",)) from None
    if "cell" not in data:
        raise doc.error("missing required field 'cell'", ("cell",))
    cell = _fields(doc, data["cell"], ("cell",), _CELL)
    topologies = _check_cell(doc, cell, base)
    protocol, settings = None, {}
    if data.get("protocol") is not None:
        section = data["protocol"]
        if not isinstance(section, dict) or len(section) != 1:
            raise doc.error(f"protocol must hold exactly one of: {', '.join(PROTOCOLS)}", ("protocol",))
        (protocol, body), = section.items()
        if protocol not in _SCHEMAS:
            raise doc.error(f"unknown protocol {protocol!r} (expected one of {', '.join(PROTOCOLS)})",
                            ("protocol", protocol))
        settings = _fields(doc, body, ("protocol", protocol), _SCHEMAS[protocol])
    cfg = RunConfig(Path(path), hashlib.sha256(text.encode()).hexdigest(), seed,
                    None if output is None else base / output, params, cell, protocol, settings, topologies)
    if protocol is not None:
        _check_protocol(doc, cfg)
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a YAML run config (see the module docstring)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, path.parent, path)


# -- state files -----------------------------------------------------------------

@dataclass
class SavedState:
    cell: SimulationCell
    state: ElectrochemicalState
    time: float = 0.0  # s, simulated time at which the state was captured

    def __iter__(self):
        return iter((self.cell, self.state))


def state_document(cell: SimulationCell, state: ElectrochemicalState, time: float = 0.0) -> dict:
    if tuple(state.segment_ids) != tuple(cell.segment_ids):
        raise StateFormatError("state segments do not match the cell")
    problems = state.check(cell.device_params)
    if problems:
        raise StateFormatError(f"inadmissible state: {problems[0]}")
    return {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "time": float(time),
        "cell": cell.to_dict(),
        "state": {
            "segment_ids": list(state.segment_ids),
            "doping": [float(x) for x in state.doping],
            "trapped": [float(x) for x in state.trapped],
            "electrolyte_potential": float(state.electrolyte_potential),
        },
    }


def save_state(path, cell: SimulationCell, state: ElectrochemicalState, time: float = 0.0) -> None:
    """Write cell + state as JSON; floats use shortest round-trip repr, so reloads are exact.

    The file is written to a temporary name and renamed, so a crash never
    leaves a half-written state behind.
    """
    text = json.dumps(state_document(cell, state, time), sort_keys=True, indent=1, allow_nan=False)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_state(path) -> SavedState:
    """Inverse of :func:`save_state`; a corrupt or truncated file raises and returns nothing."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: not a complete state file ({exc.msg}; line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(data, dict) or data.get("format") != STATE_FORMAT:
        raise StateFormatError(f"{path}: not a {STATE_FORMAT} file")
    if data.get("version") != STATE_VERSION:
        raise StateFormatError(f"{path}: state version {data.get('version')!r} cannot be read by this build "
                               f"(version {STATE_VERSION}); no migration is available, regrow the cell "
                               f"and rerun the protocol to regenerate it")
    try:
        cell = SimulationCell.from_dict(data["cell"])
        s = data["state"]
        state = ElectrochemicalState(tuple(s["segment_ids"]), np.array(s["doping"], dtype=float),
                                     np.array(s["trapped"], dtype=float), float(s["electrolyte_potential"]))
        time = float(data["time"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StateFormatError(f"{path}: malformed state file ({exc})") from None
    if state.segment_ids != tuple(cell.segment_ids):
        raise StateFormatError(f"{path}: state segments do not match the stored cell")
    problems = state.check(cell.device_params)
    if problems:
        raise StateFormatError(f"{path}: inadmissible state: {problems[0]}")
    return SavedState(cell, state, time)

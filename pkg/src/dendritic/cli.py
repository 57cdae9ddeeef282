"""Command-line entry point: ``dendritic <subcommand> CONFIG [options]``.

Every run writes its outputs plus ``manifest.json`` (config hash, seed,
software version, output hashes; no timestamps) into one directory.

Exit codes: 0 ok, 1 usage error, 2 config error, 3 solver/run error,
4 I/O error (missing, unreadable or corrupt files).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (extract_signature, leave_one_cycle_out, signature_distance, signature_stats,
                       stats_long_csv, uniqueness_report)
from .config import PROTOCOLS, RunConfig, load_config, load_state, save_state
from .errors import AssemblyError, ConfigError, DendriticError, SolverError, StateFormatError, StepError
from .protocols import (rectification_coefficient, rectification_matrix, run_mac, run_output_sweep,
                        run_sequence, run_transfer_sweep)
from .topology import save_topology, validate_topology

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("grow",) + PROTOCOLS + ("validate",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is our config-error code
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dendritic", description="Grow and simulate organic electrochemical dendrite networks.")
    p.add_argument("--version", action="version", version=f"dendritic {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    helps = {
        "grow": "grow (or build) the configured cell and save its topology and fresh state",
        "sweep": "quasi-static output sweep",
        "rectify": "rectification coefficient for every electrode configuration",
        "transfer": "transfer family: channel sweeps at several gate-device biases",
        "mac": "multiply-accumulate pulse schedule",
        "sequence": "WRITE/READ/REST bit-pattern program(s)",
        "signature": "sequence runs plus signature statistics, distances and classification",
        "uniqueness": "signature population over seeds: inter/intra-device distances",
        "validate": "check a config without running anything",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name], description=helps[name])
        s.add_argument("config", help="YAML run config")
        if name != "validate":
            s.add_argument("--output", "-o", help="output directory (default: config 'output' or runs/<config>-<cmd>)")
            s.add_argument("--seed", type=int, help="override the global seed")
        if name in ("sweep", "mac", "sequence", "signature"):
            s.add_argument("--state", help="start from a saved state file instead of the fresh cell")
        if name == "uniqueness":
            s.add_argument("--jobs", type=int, default=1, help="worker processes for the seed population")
    return p


# -- helpers -----------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])


class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, cfg: RunConfig, command: str, args):
        self.cfg, self.command = cfg, command
        if getattr(args, "output", None):
            self.out = Path(args.output)
        elif cfg.output is not None:
            self.out = cfg.output
        else:
            self.out = Path("runs") / f"{cfg.path.stem}-{command}"
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def manifest(self) -> None:
        data = {
            "format": "dendritic-manifest",
            "software": "dendritic",
            "version": __version__,
            "command": self.command,
            "config": self.cfg.path.name,
            "config_sha256": self.cfg.sha256,
            "seed": self.cfg.seed,
            "resolved_config": self.cfg.resolved,
            "outputs": {n: _sha256(self.out / n) for n in sorted(set(self.files))},
        }
        _write_text(self.out / "manifest.json", json.dumps(data, sort_keys=True, indent=1) + "\n")


def _initial(cfg: RunConfig, args, cell):
    """(state, t0) from --state, checked against the configured cell."""
    if not getattr(args, "state", None):
        return None, 0.0
    saved = load_state(args.state)
    if saved.cell != cell:
        raise ConfigError(f"state file {args.state} holds a different cell than the config describes")
    return saved.state, saved.time


# -- subcommands -----------------------------------------------------------------

def cmd_grow(cfg, args, run: Run) -> str:
    cell = cfg.build_cell()
    lines = []
    for k, topo in enumerate(cell.topologies):
        name = "topology.json" if len(cell.topologies) == 1 else f"topology-{k}.json"
        save_topology(topo, run.path(name))
        comps = topo.components()
        lines.append(f"{name}: {topo.name or 'unnamed'}; {len(topo.electrodes)} electrodes, "
                     f"{len(topo.junctions)} junctions, {len(topo.segments)} segments, "
                     f"volume {topo.total_volume():.6g} um^3, {len(comps)} components, "
                     f"unconnected: {topo.unconnected}")
    save_state(run.path("state.json"), cell, cell.initial_state())
    return "\n".join(lines)


def cmd_sweep(cfg, args, run: Run) -> str:
    cell = cfg.build_cell()
    state, _ = _initial(cfg, args, cell)
    sc = cfg.sweep_config()
    curve = run_output_sweep(cell, sc, initial=state)
    _write_rows(run.path("curve.csv"), ["voltage_V", "current_A"], zip(curve.voltages, curve.currents))
    lines = [f"configuration {sc.label()}, monitor {curve.monitor}, {len(curve.voltages)} points"]
    v_end = max(abs(sc.start), abs(sc.stop))
    if min(sc.start, sc.stop) == -v_end:
        lines.append(f"rectification coefficient |I(+{v_end:g})|/|I(-{v_end:g})|: "
                     f"{rectification_coefficient(curve, v_end):.6g}")
    return "\n".join(lines)


def cmd_rectify(cfg, args, run: Run) -> str:
    s = cfg.settings
    table = rectification_matrix(cfg.build_cell(), s["electrodes"], s["v_max"], s["step"])
    _write_rows(run.path("rectification.csv"), ["configuration", "coefficient"],
                ((e.label, float(e.coefficient)) for e in table.entries))
    best = table.best()
    return f"{len(table.entries)} configurations; maximum {best.label} = {best.coefficient:.6g}"


def cmd_transfer(cfg, args, run: Run) -> str:
    fam = run_transfer_sweep(cfg.build_cell(), cfg.sweep_config())
    rows = [(float(b), float(v), float(i)) for b, c in zip(fam.gate_biases, fam.curves)
            for v, i in zip(c.voltages, c.currents)]
    _write_rows(run.path("transfer.csv"), ["gate_bias_V", "voltage_V", "current_A"], rows)
    lines = [f"gate {fam.gate}, biases {', '.join(f'{b:g}' for b in fam.gate_biases)} V"]
    for v in fam.curves[0].voltages:
        if v != 0:
            lines.append(f"suppression at channel {v:+g} V: {100 * fam.suppression(v):.3f}%")
    return "\n".join(lines)


def cmd_mac(cfg, args, run: Run) -> str:
    cell = cfg.build_cell()
    state, t0 = _initial(cfg, args, cell)
    res = run_mac(cell, cfg.mac_config(), dt=cfg.settings["dt"], initial=state, t0=t0)
    res.trace.to_csv(run.path("trace.csv"))
    _write_rows(run.path("modulation.csv"), ["subset", "delta_i_over_i"],
                (("+".join(k) or "-", float(v)) for k, v in res.modulation.items()))
    save_state(run.path("state.json"), cell, res.trace.final_state, float(res.trace.times[-1]))
    return "\n".join(f"{k}: {v:+.4f}%" for k, v in res.percent().items())


def _sequences(cfg, args, run: Run):
    cell = cfg.build_cell()
    state, t0 = _initial(cfg, args, cell)
    sigs, lines = {}, []
    for label, prog in cfg.programs().items():
        seq = run_sequence(cell, prog, initial=state, dt=cfg.settings["dt"], t0=t0)
        seq.trace.to_csv(run.path(f"trace_{label}.csv"))
        sig = extract_signature(seq)
        sig.to_csv(run.path(f"signature_{label}.csv"))
        save_state(run.path(f"state_{label}.json"), cell, seq.final_state, float(seq.trace.times[-1]))
        sigs[label] = sig
        st = signature_stats(sig)
        lines.append(f"{label} ({'·'.join(prog.input_electrodes)}): mean dI/I "
                     + " ".join(f"{p}:{100 * m:+.3f}%" for p, m in zip(st.patterns, st.mean)))
    return sigs, lines


def cmd_sequence(cfg, args, run: Run) -> str:
    _, lines = _sequences(cfg, args, run)
    return "\n".join(lines)


def cmd_signature(cfg, args, run: Run) -> str:
    sigs, lines = _sequences(cfg, args, run)
    res, thr = cfg.settings["resolution"], cfg.settings["threshold"]
    stats = {k: signature_stats(v) for k, v in sigs.items()}
    stats_long_csv(run.path("stats.csv"), stats.items())
    labels = list(stats)
    rows = []
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            d = signature_distance(stats[a], stats[b], res)
            rows.append((a, b, d))
            lines.append(f"distance {a}/{b}: {d:.6g} ({'distinguishable' if d > thr else 'NOT distinguishable'}"
                         f" at threshold {thr:g})")
    _write_rows(run.path("distances.csv"), ["a", "b", "distance"], rows)
    if len(labels) > 1 and all(s.cycles > 1 for s in sigs.values()):
        lines.append(f"leave-one-cycle-out accuracy: {100 * leave_one_cycle_out(sigs, res):.1f}%")
    return "\n".join(lines)


def _device_replicates(cfg: RunConfig, seed: int):
    """Replicate signature stats of one population member, state carried between replicates."""
    cell = cfg.build_cell(seed)
    (prog,) = cfg.programs().values()
    state, reps = None, []
    for r in range(cfg.settings["replicates"]):
        p = prog if r == 0 else prog.with_(warmup_cycles=0)
        seq = run_sequence(cell, p, initial=state, dt=cfg.settings["dt"])
        state = seq.final_state
        reps.append(signature_stats(extract_signature(seq)))
    return reps


def cmd_uniqueness(cfg, args, run: Run) -> str:
    seeds = [cfg.seed + k for k in range(cfg.settings["devices"])]
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if args.jobs == 1:
        reps = [_device_replicates(cfg, s) for s in seeds]
    else:
        with ProcessPoolExecutor(args.jobs) as pool:
            reps = list(pool.map(_device_replicates, [cfg] * len(seeds), seeds))
    stats_long_csv(run.path("stats.csv"), ((f"seed-{s}", r[0]) for s, r in zip(seeds, reps)))
    report = uniqueness_report([r[0] for r in reps], reps, cfg.settings["resolution"])
    verdict = "unique" if report.score > cfg.settings["threshold"] else "NOT unique"
    return report.summary().rstrip("\n") + f"\nseeds: {seeds[0]}..{seeds[-1]}\nverdict: {verdict} " \
        f"at threshold {cfg.settings['threshold']:g}"


def cmd_validate(cfg, args) -> None:
    cell = cfg.build_cell()
    for topo in cell.topologies:
        problems = validate_topology(topo)
        if problems:
            raise ConfigError(f"topology {topo.name or 'unnamed'} is invalid: {problems[0]}", field="cell")


HANDLERS = {"grow": cmd_grow, "sweep": cmd_sweep, "rectify": cmd_rectify, "transfer": cmd_transfer,
            "mac": cmd_mac, "sequence": cmd_sequence, "signature": cmd_signature, "uniqueness": cmd_uniqueness}


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run one subcommand and return its exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def fail(code, message):
        print(f"dendritic: error: {' '.join(str(message).split())}", file=stderr)
        return code

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing subcommand (one of {', '.join(COMMANDS)})")
    except UsageError as exc:
        return fail(EXIT_USAGE, exc)
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            if args.seed < 0:
                raise UsageError("--seed must be >= 0")
            cfg.seed = args.seed
        if args.command == "validate":
            cmd_validate(cfg, args)
            print("config OK", file=stdout)
            return EXIT_OK
        if args.command in PROTOCOLS and cfg.protocol != args.command:
            raise ConfigError(f"subcommand '{args.command}' needs a 'protocol.{args.command}' section, "
                              f"config has {'none' if cfg.protocol is None else repr(cfg.protocol)}",
                              field="protocol")
        run = Run(cfg, args.command, args)
        report = HANDLERS[args.command](cfg, args, run)
        _write_text(run.path("report.txt"), report + "\n")
        run.manifest()
        print(report, file=stdout)
        print(f"outputs written to {run.out}", file=stdout)
        return EXIT_OK
    except UsageError as exc:
        return fail(EXIT_USAGE, exc)
    except ConfigError as exc:
        return fail(EXIT_CONFIG, exc)
    except (StateFormatError, OSError) as exc:
        return fail(EXIT_IO, exc)
    except AssemblyError as exc:
        return fail(EXIT_CONFIG, exc)
    except (SolverError, StepError) as exc:
        return fail(EXIT_SOLVER, exc)
    except DendriticError as exc:
        # domain errors that only show up while the cell is built or run
        return fail(EXIT_SOLVER if args.command != "validate" else EXIT_CONFIG, exc)


def main() -> None:
    sys.exit(run_cli())

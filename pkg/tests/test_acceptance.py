"""Acceptance criteria 1-10, one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are
printed even when pytest captures output.  Tolerances are the published
ones and are not to be relaxed.
"""
import hashlib
import itertools

import numpy as np
import pytest

from dendritic import cells
from dendritic.analysis import (extract_signature, leave_one_cycle_out, signature_distance, signature_stats,
                                uniqueness_report)
from dendritic.device import DeviceParams
from dendritic.protocols import (SweepConfig, rectification_coefficient, rectification_matrix, run_fatigue,
                                 run_mac, run_output_sweep, run_sequence, run_transfer_sweep)
from dendritic.solver import BoundaryCondition, DriveWaveform, run_transient, solve_dc, solve_linear_network
from dendritic.topology import TopologyBuilder, assemble_cell

KCL_BOUND = 1e-12


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}")
        assert ok, f"criterion {number} ({name}) failed: {detail}"
    return emit


# -- shared expensive runs -------------------------------------------------------

@pytest.fixture(scope="session")
def y_cell():
    return cells.y_device()


@pytest.fixture(scope="session")
def y_curve(y_cell):
    return run_output_sweep(y_cell, SweepConfig(("E1",), ("C",), -0.9, 0.9, 0.05))


def _signature(cell, program, warmup=1):
    """Signature of ``program`` after ``warmup`` conditioning cycles, plus the raw run."""
    seq = run_sequence(cell, program.with_(warmup_cycles=warmup))
    return extract_signature(seq), seq


@pytest.fixture(scope="session")
def network_runs():
    cell = cells.network_cell(0)
    out = {}
    for name in cells.SPATIAL_PROJECTIONS:
        out[name] = _signature(cell, cells.network_program(name, cycles=5))
    return cell, out


# -- 1-3: quasi-static device behaviour ---------------------------------------------

def test_criterion_1_rectification(report, y_cell, y_curve):
    r = rectification_coefficient(y_curve)
    sym = rectification_coefficient(run_output_sweep(y_cell, SweepConfig(("E1",), ("E2",), -0.9, 0.9, 0.9)))
    ok = 3.0 <= r <= 6.0 and abs(sym - 1.0) <= 0.05
    report(1, "rectification", ok, f"(C)-E1 coefficient {r:.3f} in [3, 6]; symmetric (E2)-E1 {sym:.4f} = 1 +- 0.05")


def test_criterion_1b_rectification_table_ordering(report, y_cell):
    table = rectification_matrix(y_cell, step=0.9)
    best = table.best()
    ok = "C" in best.grounded and all(best.coefficient >= e.coefficient for e in table.entries)
    report(1, "rectification table maximum grounds the core electrode", ok,
           f"max {best.label} = {best.coefficient:.3f} over {len(table.entries)} configurations")


def test_criterion_2_plateau_shape(report, y_curve):
    s_neg = abs(y_curve.slope(-0.9))
    s_small = abs(y_curve.slope(-0.1))
    v = y_curve.voltages
    g_lin = y_curve.slope(0.0)
    pos = v > 0
    dev = np.max(np.abs(y_curve.currents[pos] / (g_lin * v[pos]) - 1.0))
    ok = s_neg < 0.3 * s_small and dev <= 0.15
    report(2, "plateau shape", ok,
           f"|dI/dV|(-0.9)/|dI/dV|(-0.1) = {s_neg / s_small:.3f} < 0.3; positive-branch deviation from linear "
           f"{100 * dev:.1f}% <= 15%")


def test_criterion_3_intergating(report):
    cell = cells.gating_pair()
    bulky_gate = run_transfer_sweep(cell, SweepConfig(("T_D",), ("T_S", "B_S"), 0.1, 0.1, 0.1,
                                                      secondary=("B_D", (0.0, 0.9))))
    thin_gate = run_transfer_sweep(cell, SweepConfig(("B_D",), ("B_S", "T_S"), 0.1, 0.1, 0.1,
                                                     secondary=("T_D", (0.0, 0.9))))
    sb, st = bulky_gate.suppression(0.1), thin_gate.suppression(0.1)
    ok = 0.55 <= sb <= 0.75 and 0.22 <= st <= 0.42 and sb > st
    report(3, "inter-gating asymmetry", ok,
           f"bulky-gate suppression {100 * sb:.1f}% in [55, 75]; thin-gate {100 * st:.1f}% in [22, 42]")


# -- 4: MAC ------------------------------------------------------------------------

def test_criterion_4_mac(report):
    res = run_mac(cells.mac_cell(), cells.mac_config())
    m = {k: abs(v) for k, v in res.modulation.items()}
    s1, s2, s3 = m[("IN1",)], m[("IN2",)], m[("IN3",)]
    full = m[("IN1", "IN2", "IN3")]
    singles_ok = abs(s1 - 0.13) <= 0.05 and abs(s2 - 0.05) <= 0.05 and abs(s3 - 0.18) <= 0.05
    order_ok = s2 < s1 < s3
    full_ok = abs(full - 0.38) <= 0.08 and all(full > v for k, v in m.items() if len(k) < 3)
    mono_ok = all(m[b] >= m[a] for a in m for b in m if set(a) < set(b))
    ok = singles_ok and order_ok and full_ok and mono_ok
    report(4, "MAC modulation", ok,
           f"IN1 {100 * s1:.1f}% IN2 {100 * s2:.1f}% IN3 {100 * s3:.1f}% all-three {100 * full:.1f}%; "
           f"ordering {order_ok}, strict max {full_ok}, monotone {mono_ok}")


# -- 5-7: spatiotemporal signatures ----------------------------------------------------

def test_criterion_5_spatial_discrimination(report, network_runs):
    _, runs = network_runs
    sigs = {k: v[0] for k, v in runs.items()}
    stats = {k: signature_stats(v) for k, v in sigs.items()}
    d = {f"{a}/{b}": signature_distance(stats[a], stats[b]) for a, b in itertools.combinations(stats, 2)}
    acc = leave_one_cycle_out(sigs)
    ok = min(d.values()) > 3 and acc == 1.0
    report(5, "spatial discrimination", ok,
           "z-distances " + ", ".join(f"{k} {v:.1f}" for k, v in d.items()) + f" (> 3); LOCO accuracy {acc:.0%}")


def _order_distance(cell, program, warmup=1):
    base = signature_stats(_signature(cell, program, warmup)[0])
    shuffled = program.shuffled(cells.SHUFFLED_ORDER)
    other = signature_stats(_signature(cell, shuffled, warmup)[0]).reordered(base.patterns)
    return signature_distance(base, other)


def test_criterion_6_temporal_state_dependence(report, network_runs):
    cell, runs = network_runs
    base = signature_stats(runs["SP1"][0])
    shuffled = cells.network_program("SP1", cycles=5).shuffled(cells.SHUFFLED_ORDER)
    other = signature_stats(_signature(cell, shuffled)[0]).reordered(base.patterns)
    memory = signature_distance(base, other)
    p = DeviceParams()
    fast = p.with_(trap_rate=0.0, dedope_time_constant_per_volume=p.dedope_time_constant_per_volume / 5,
                   redope_time_constant_per_volume=p.dedope_time_constant_per_volume / 5)
    control = _order_distance(cells.network_cell(0, fast), cells.network_program("SP1", cycles=2))
    ok = memory > 3 and control < 1
    report(6, "temporal state dependence", ok,
           f"shuffled vs original {memory:.2f} (> 3); memoryless control {control:.2e} (< 1)")


def test_criterion_7_nonlinearity_witness(report, network_runs):
    _, runs = network_runs
    st = signature_stats(runs["SP1"][0])
    hi, lo = st.patterns[int(np.argmax(st.mean))], st.patterns[int(np.argmin(st.mean))]
    ok = hi not in ("111", "000") and lo not in ("111", "000")
    report(7, "nonlinearity witness", ok,
           f"argmax {hi}, argmin {lo}; mean dI/I " + " ".join(f"{p}:{100 * m:+.1f}%" for p, m in zip(st.patterns, st.mean)))


# -- 8: uniqueness ----------------------------------------------------------------------

def _replicates(cell, program, n=2, warmup=1):
    """``n`` consecutive replicate runs after a conditioning cycle, state carried over."""
    seq = run_sequence(cell, program.with_(cycles=warmup))
    state = seq.final_state
    reps = []
    for _ in range(n):
        seq = run_sequence(cell, program, initial=state)
        state = seq.final_state
        reps.append(signature_stats(extract_signature(seq)))
    return reps


def test_criterion_8_hardware_uniqueness(report):
    cell = cells.twin_cell(0)
    twin = {dev: _replicates(cell, cells.network_program(inputs, cycles=2)) for dev, inputs in cells.TWIN_INPUTS.items()}
    twin_report = uniqueness_report([r[0] for r in twin.values()], list(twin.values()))
    pop, reps = [], []
    for seed in range(20):
        r = _replicates(cells.network_cell(seed), cells.network_program("SP1", cycles=1))
        pop.append(r[0])
        reps.append(r)
    pop_report = uniqueness_report(pop, reps)
    ok = twin_report.score > 3 and pop_report.score > 3
    report(8, "hardware uniqueness", ok,
           f"80 Hz vs 500 Hz inter/intra = {twin_report.score:.1f} (> 3); 20-seed score {pop_report.score:.1f} (> 3)")


# -- 9: drift and fatigue -----------------------------------------------------------

def test_criterion_9_drift_and_fatigue(report, network_runs):
    _, runs = network_runs
    seq = runs["SP1"][1]
    baseline = seq.i_rest[:, 0]  # raw I_REST opening every cycle
    monotone = bool(np.all(np.diff(baseline) < 0)) and len(baseline) >= 5
    fat = run_fatigue(cells.gating_pair(), "B_D", "B_S", grounded=("T_S", "T_D"))
    ok = monotone and abs(fat.drop - 0.10) <= 0.05
    report(9, "drift and fatigue", ok,
           f"baseline over {len(baseline)} cycles monotone decreasing: {monotone} "
           f"({baseline[0]:.4e} -> {baseline[-1]:.4e} A); stress conductance drop {100 * fat.drop:.1f}% (10 +- 5)")


# -- 10: numerical hygiene ----------------------------------------------------------------

def _dense_oracle(rng):
    n = 12
    b = TopologyBuilder("random")
    pos = rng.uniform(0, 400, size=(n, 2))
    ids = [f"E{k}" for k in range(3)] + [f"N{k}" for k in range(3, n)]
    for k in range(3):
        b.electrode(ids[k], tuple(pos[k]))
    for k in range(3, n):
        b.junction(ids[k], tuple(pos[k]))
    edges = {(k, k + 1) for k in range(n - 1)}
    while len(edges) < 24:
        i, j = sorted(rng.choice(n, 2, replace=False))
        edges.add((int(i), int(j)))
    for m, (i, j) in enumerate(sorted(edges)):
        b.dendrite(ids[i], ids[j], float(rng.uniform(1, 6)), 80.0, prefix=f"s{m}")
    cell = assemble_cell([b.build()])
    state = cell.initial_state()
    state.doping[:] = rng.uniform(0.2, 1.0, size=len(state.doping))
    bc = BoundaryCondition({"E0": 0.7, "E1": 0.0, "E2": -0.3})
    sol = solve_linear_network(cell, state, bc)
    # independent oracle: dense Laplacian from explicit loops, full solve
    idx = cell.index
    g = idx.g0 * np.maximum(state.doping - state.trapped, cell.device_params.residual_doping)
    G = np.zeros((idx.n_nodes, idx.n_nodes))
    for gk, a, c in zip(g, idx.seg_a, idx.seg_b):
        G[a, a] += gk
        G[c, c] += gk
        G[a, c] -= gk
        G[c, a] -= gk
    fixed = [idx.node_ids.index(e) for e in bc.fixed]
    A = G.copy()
    rhs = np.zeros(idx.n_nodes)
    for k, e in zip(fixed, bc.fixed):
        A[k, :] = 0.0
        A[k, k] = 1.0
        rhs[k] = bc.fixed[e]
    v = np.linalg.solve(A, rhs)
    return float(np.max(np.abs(sol.node_potentials - v)) / np.max(np.abs(v)))


def _sequence_csv_hash(tmp_path, name):
    cell = cells.network_cell(3)
    seq = run_sequence(cell, cells.network_program("SP2", write_duration=2.0, rest_duration=2.0))
    path = tmp_path / name
    seq.trace.to_csv(path)
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_criterion_10_numerical_hygiene(report, network_runs, y_cell, tmp_path):
    # KCL at every transient step of the network runs and at DC operating points
    kcl_t = max(seq.trace.max_kcl_ratio for _, seq in network_runs[1].values())
    kcl_dc = 0.0
    for v in (-0.9, -0.3, 0.4, 0.9):
        op = solve_dc(y_cell, BoundaryCondition({"E1": v, "C": 0.0}))
        kcl_dc = max(kcl_dc, op.kcl_residual / max(abs(i) for i in op.terminal_currents.values()))
    # dt halving on a pulsed MAC transient
    cell = cells.mac_cell()
    w = DriveWaveform().add(0.2, {"G": 0.0, "IN1": 0.0, "IN2": 0.0, "IN3": 0.0, "R_S": 0.0, "R_D": 0.1})
    w.add(0.2, {"G": 0.0, "IN1": 0.6, "IN2": 0.0, "IN3": 0.6, "R_S": 0.0, "R_D": 0.1})
    w.add(0.4, {"G": 0.0, "IN1": 0.0, "IN2": 0.0, "IN3": 0.0, "R_S": 0.0, "R_D": 0.1})
    dt = 0.2 / np.ceil(0.2 / (cell.max_stable_dt() / 4))
    coarse = run_transient(cell, w, dt)
    fine = run_transient(cell, w, dt / 2)
    ic, ifn = coarse.current("R_D"), fine.current("R_D")[::2]
    assert np.allclose(coarse.times, fine.times[::2])
    halving = float(np.max(np.abs(ic - ifn) / np.abs(ifn)))
    oracle = max(_dense_oracle(np.random.default_rng(s)) for s in range(5))
    same = _sequence_csv_hash(tmp_path, "a.csv") == _sequence_csv_hash(tmp_path, "b.csv")
    grow_same = cells.network_topology(11).dumps() == cells.network_topology(11).dumps()
    ok = kcl_t < KCL_BOUND and kcl_dc < KCL_BOUND and halving < 1e-3 and oracle < 1e-9 and same and grow_same
    report(10, "numerical hygiene", ok,
           f"KCL transient {kcl_t:.1e}, DC {kcl_dc:.1e} (< 1e-12); dt-halving {100 * halving:.4f}% (< 0.1%); "
           f"dense oracle {oracle:.1e} (< 1e-9); byte-identical reruns {same and grow_same}")

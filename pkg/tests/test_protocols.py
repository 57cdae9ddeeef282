import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dendritic import cells
from dendritic.device import DeviceParams
from dendritic.errors import DomainError
from dendritic.protocols import (BitPattern, MacConfig, OutputCurve, SequenceProgram, SweepConfig, all_subsets,
                                 delta_i_over_i, encode_pattern, rectification_coefficient, rectification_matrix,
                                 run_mac, run_output_sweep, run_sequence, run_transfer_sweep)
from dendritic.topology import TopologyBuilder, assemble_cell


def _curve(v, i):
    return OutputCurve(np.asarray(v, float), np.asarray(i, float), "X")


def _star(params=None):
    b = TopologyBuilder("star")
    b.junction("J", (0.0, 0.0))
    for k, eid in enumerate("ABC"):
        a = np.radians(90 + 120 * k)
        b.electrode(eid, (200 * np.cos(a), 200 * np.sin(a)))
        b.dendrite(eid, "J", 2.0, 80.0, 6)
    return assemble_cell([b.build()], device_params=params or DeviceParams())


# -- configs ----------------------------------------------------------------------

def test_sweep_voltages_ascending_and_exact():
    cfg = SweepConfig(("E1",), ("C",), 0.9, -0.9, 0.1)
    v = cfg.voltages()
    assert len(v) == 19 and v[0] == -0.9 and v[-1] == 0.9 and 0.0 in v
    assert cfg.label() == "(C)-E1"


@pytest.mark.parametrize("kw", [dict(swept=(), grounded=("C",)), dict(swept=("C",), grounded=("C",)),
                                dict(swept=("A",), grounded=("C",), step=0.0),
                                dict(swept=("A",), grounded=("C",), step=0.07)])
def test_sweep_config_validation(kw):
    with pytest.raises(DomainError):
        SweepConfig(**kw)


def test_program_invariants():
    with pytest.raises(DomainError):
        SequenceProgram(("A1", "A2", "A3"), high_voltage=0.0)
    with pytest.raises(DomainError):
        SequenceProgram(("A1", "A2", "A3"), cycles=0)
    with pytest.raises(DomainError):
        SequenceProgram(("A1", "A2", "A3"), write_duration=0.0)
    with pytest.raises(DomainError):
        SequenceProgram(("A1", "R_S", "A3"))
    with pytest.raises(DomainError):
        SequenceProgram(("A1", "A2"), patterns=("111",))


def test_program_defaults():
    p = SequenceProgram(("A1", "A2", "A3"))
    assert (p.write_duration, p.read_duration, p.rest_duration) == (10.0, 0.05, 10.0)
    assert (p.high_voltage, p.low_voltage, p.read_bias) == (0.6, -0.6, 0.1)
    assert [str(x) for x in p.patterns] == ["111", "000", "110", "011", "101", "100", "010", "001"]


def test_mac_config_validation():
    with pytest.raises(DomainError):
        MacConfig(("IN1", "R_D"), "R_S", "R_D")
    with pytest.raises(DomainError):
        MacConfig(("IN1",), "R_S", "R_D", schedule=[("IN9",)])
    assert MacConfig(("IN1",), "R_S", "R_D").rest == pytest.approx(1.0)


def test_all_subsets_order():
    assert all_subsets(["a", "b"]) == [(), ("a",), ("b",), ("a", "b")]


# -- patterns ---------------------------------------------------------------------

def test_bit_pattern_parse():
    assert BitPattern.parse("011").bits == (0, 1, 1)
    assert str(BitPattern.parse([1, 0])) == "10"
    with pytest.raises(DomainError):
        BitPattern.parse("012")
    with pytest.raises(DomainError):
        BitPattern.parse("")


def test_encode_pattern_examples():
    p = SequenceProgram(("A1", "A2", "A3"))
    assert encode_pattern("111", p) == {"A1": 0.6, "A2": 0.6, "A3": 0.6}
    assert encode_pattern("000", p) == {"A1": -0.6, "A2": -0.6, "A3": -0.6}
    with pytest.raises(DomainError):
        encode_pattern("11", p)


@given(st.permutations(range(3)), st.lists(st.integers(0, 1), min_size=3, max_size=3))
def test_encode_pattern_permutation(perm, bits):
    ids = ("A1", "A2", "A3")
    p = SequenceProgram(ids)
    q = SequenceProgram(tuple(ids[k] for k in perm))
    base = encode_pattern(bits, p)
    permuted = encode_pattern([bits[k] for k in perm], q)
    assert base == permuted


# -- dI/I -------------------------------------------------------------------------

@pytest.mark.parametrize("ratio, expected", [(1.0, 0.0), (1.10, 0.10), (0.85, -0.15)])
def test_delta_i_over_i_examples(ratio, expected):
    assert delta_i_over_i(ratio * 2e-6, 2e-6) == pytest.approx(expected)


def test_delta_i_over_i_zero_rest():
    with pytest.raises(DomainError):
        delta_i_over_i(1e-6, 0.0)


@given(st.floats(-1e-3, 1e-3), st.floats(1e-9, 1e-3), st.floats(1e-6, 1e6), st.booleans())
def test_delta_i_over_i_scale_invariant(i_read, i_rest, alpha, neg):
    a = -alpha if neg else alpha
    assert delta_i_over_i(a * i_read, a * i_rest) == pytest.approx(delta_i_over_i(i_read, i_rest), rel=1e-9, abs=1e-12)


# -- rectification ------------------------------------------------------------------

def test_rectification_examples():
    v = [-0.9, 0.0, 0.9]
    assert rectification_coefficient(_curve(v, [-1.0, 0.0, 4.4])) == pytest.approx(4.4)
    assert rectification_coefficient(_curve(v, [-2.0, 0.0, 2.0])) == 1.0
    assert rectification_coefficient(_curve(v, [-2.0, 0.0, 0.0])) == 0.0
    assert rectification_coefficient(_curve(v, [0.0, 0.0, 1.0])) == math.inf


def test_rectification_missing_endpoint():
    with pytest.raises(DomainError):
        rectification_coefficient(_curve([-0.9, 0.0, 0.8], [-1.0, 0.0, 1.0]), 0.9)


def test_frozen_cell_sweep_is_linear():
    cell = cells.y_device(DeviceParams(pinchoff_voltage=1e9))
    curve = run_output_sweep(cell, SweepConfig(("E1",), ("C",), -0.9, 0.9, 0.3))
    g = curve.currents[-1] / curve.voltages[-1]
    assert np.allclose(curve.currents, g * curve.voltages, rtol=1e-6, atol=1e-15)
    assert rectification_coefficient(curve) == pytest.approx(1.0, abs=1e-6)


def test_reversed_sweep_gives_identical_samples():
    cell = cells.y_device()
    up = run_output_sweep(cell, SweepConfig(("E1",), ("C",), -0.9, 0.9, 0.3))
    down = run_output_sweep(cell, SweepConfig(("E1",), ("C",), 0.9, -0.9, 0.3))
    assert np.array_equal(up.voltages, down.voltages)
    assert np.array_equal(up.currents, down.currents)


def test_y_device_plateau_shape():
    curve = run_output_sweep(cells.y_device(), SweepConfig(("E1",), ("C",), -0.9, 0.9, 0.1))
    assert abs(curve.slope(-0.9)) < 0.3 * abs(curve.slope(-0.1))


def test_symmetric_star_rectification():
    # single-ground configurations are mirror images of themselves under
    # polarity reversal (the swept and grounded arms swap roles); shorted
    # pairs are not, but all three rotations of a pair must agree
    table = rectification_matrix(_star(), v_max=0.9, step=0.9).as_dict()
    assert len(table) == 9
    for label, coef in table.items():
        if "·" not in label:
            assert coef == pytest.approx(1.0, abs=1e-9), label
    pairs = [table["(B·C)-A"], table["(A·C)-B"], table["(A·B)-C"]]
    assert pairs == pytest.approx([pairs[0]] * 3, rel=1e-9)


def test_rectification_ground_label_swap():
    cell = cells.y_device()
    a = run_output_sweep(cell, SweepConfig(("E1",), ("C", "E3"), -0.9, 0.9, 0.9))
    b = run_output_sweep(cell, SweepConfig(("E1",), ("E3", "C"), -0.9, 0.9, 0.9))
    assert rectification_coefficient(a) == rectification_coefficient(b)


def test_rectification_matrix_needs_three_electrodes():
    with pytest.raises(DomainError):
        rectification_matrix(_star(), electrodes=["A", "B"])


# -- transfer -----------------------------------------------------------------------

def test_zero_gate_bias_gives_largest_drain_current():
    cfg = SweepConfig(("T_D",), ("T_S", "B_S"), -0.9, 0.9, 0.3, secondary=("B_D", (0.0, 0.3, 0.6, 0.9)))
    fam = run_transfer_sweep(cells.gating_pair(), cfg)
    for v in fam.curves[0].voltages:
        if v != 0:
            i = np.abs(fam.transfer_curve(v))
            assert np.argmax(i) == 0, v
    assert 0 < fam.suppression(0.3) < 1


def test_transfer_needs_secondary():
    with pytest.raises(DomainError):
        run_transfer_sweep(cells.gating_pair(), SweepConfig(("T_D",), ("T_S",)))


# -- MAC ----------------------------------------------------------------------------

def test_mac_empty_subset_has_no_modulation():
    res = run_mac(cells.mac_cell(), cells.mac_config(schedule=((), ("IN1",))))
    assert abs(res.modulation[()]) < 1e-12
    assert res.modulation[("IN1",)] < 0
    assert set(res.percent()) == {"-", "IN1"}


# -- sequences ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def network():
    return cells.network_cell(0)


def test_near_zero_drive_sequence_has_no_modulation(network):
    # high > 0 > low is an invariant, so "zero" drive is approximated by 1 uV
    prog = cells.network_program("SP1", high_voltage=1e-6, low_voltage=-1e-6)
    seq = run_sequence(network, prog)
    d = (seq.i_read - seq.i_rest) / seq.i_rest
    assert np.max(np.abs(d)) < 1e-4


def test_sequence_layout(network):
    prog = cells.network_program("SP1", write_duration=1.0, rest_duration=1.0, cycles=2, warmup_cycles=1)
    seq = run_sequence(network, prog)
    assert seq.i_read.shape == seq.i_rest.shape == (3, 8)
    assert np.all(np.isfinite(seq.i_read)) and np.all(seq.i_rest > 0)
    labels = seq.trace.phase_labels
    assert labels[:2] == ["rest", "probe"]
    assert labels[2:6] == ["write:0:0", "read:0:0", "rest:0:0", "probe:0:0"]
    assert len(labels) == 2 + 4 * 8 * 3


def test_five_cycle_reproducibility_and_drift(network):
    seq = run_sequence(network, cells.network_program("SP1", cycles=5))
    d = (seq.i_read - seq.i_rest) / seq.i_rest
    assert np.all(d.std(axis=0) <= 0.2 * np.abs(d.mean(axis=0)))
    # traps pull the raw baseline down from one cycle to the next
    assert np.all(np.diff(seq.i_rest, axis=0) < 0)


def test_sequence_is_deterministic(network):
    prog = cells.network_program("SP3", write_duration=1.0, rest_duration=1.0)
    a, b = run_sequence(network, prog), run_sequence(network, prog)
    assert np.array_equal(a.i_read, b.i_read) and np.array_equal(a.trace.currents, b.trace.currents)

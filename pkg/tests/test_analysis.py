import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dendritic import cells
from dendritic.analysis import (SignatureStats, SignatureVector, classify_source, extract_signature,
                                leave_one_cycle_out, signature_distance, signature_stats, stats_long_csv,
                                uniqueness_report)
from dendritic.errors import DomainError, ExtractionError
from dendritic.protocols import run_sequence

PATS = ("111", "000", "110")


def _stats(mean, std=None):
    mean = np.asarray(mean, float)
    return SignatureStats(mean, np.zeros_like(mean) if std is None else std, PATS[: len(mean)])


# -- vectors and stats ------------------------------------------------------------

def test_signature_vector_invariants():
    with pytest.raises(DomainError):
        SignatureVector([[0.1, 0.2]], PATS)
    with pytest.raises(DomainError):
        SignatureVector([[0.1, np.nan, 0.2]], PATS)
    assert SignatureVector([0.1, 0.2, 0.3], PATS).values.shape == (1, 3)


def test_stats_single_cycle_has_zero_std():
    st_ = signature_stats(SignatureVector([[0.1, -0.2, 0.3]], PATS))
    assert np.all(st_.std == 0) and np.allclose(st_.mean, [0.1, -0.2, 0.3])


def test_stats_two_cycles():
    st_ = signature_stats(SignatureVector([[0.1] * 3, [0.3] * 3], PATS))
    assert np.allclose(st_.mean, 0.2) and np.allclose(st_.std, 0.1)
    assert st_.cycles == 2


def test_stats_constant_matrix():
    st_ = signature_stats(SignatureVector(np.full((4, 3), -0.07), PATS))
    assert np.all(st_.std == 0) and np.allclose(st_.mean, -0.07)


def test_stats_invariants():
    with pytest.raises(DomainError):
        SignatureStats([0.1, 0.2], [0.0])
    with pytest.raises(DomainError):
        SignatureStats([0.1], [-0.1])


def test_stats_reordered():
    st_ = _stats([1.0, 2.0, 3.0]).reordered(["110", "111", "000"])
    assert st_.patterns == ("110", "111", "000") and list(st_.mean) == [3.0, 1.0, 2.0]


# -- distance ---------------------------------------------------------------------

def test_distance_identity_and_length():
    a = _stats([0.1, -0.2, 0.05], [0.01, 0.02, 0.0])
    assert signature_distance(a, a) == 0.0
    with pytest.raises(DomainError):
        signature_distance(a, _stats([0.1, 0.2]))


def test_distance_is_pooled_z_score():
    a = SignatureStats([0.0, 0.0], [0.03, 0.0])
    b = SignatureStats([0.05, 0.01], [0.04, 0.0])
    pooled = np.array([math.sqrt((0.03 ** 2 + 0.04 ** 2) / 2), 0.002])
    assert signature_distance(a, b) == pytest.approx(math.hypot(*(np.array([0.05, 0.01]) / pooled)))


vec = st.lists(st.floats(-1, 1), min_size=4, max_size=4)
std = st.lists(st.floats(0, 0.2), min_size=4, max_size=4)


@given(vec, std, vec, std)
def test_distance_symmetric(ma, sa, mb, sb):
    a, b = SignatureStats(ma, sa), SignatureStats(mb, sb)
    assert signature_distance(a, b) == signature_distance(b, a)
    assert signature_distance(a, b) >= 0


@given(vec, vec, vec, std)
def test_triangle_inequality_with_shared_spread(ma, mb, mc, s):
    # with one std vector for all three the distance is a weighted Euclidean metric
    a, b, c = (SignatureStats(m, s) for m in (ma, mb, mc))
    assert signature_distance(a, c) <= signature_distance(a, b) + signature_distance(b, c) + 1e-9


@pytest.fixture(scope="module")
def population():
    prog = cells.network_program("SP1", write_duration=5.0, rest_duration=5.0, cycles=3, warmup_cycles=1)
    out = []
    for seed in range(8):
        seq = run_sequence(cells.network_cell(seed), prog)
        out.append(signature_stats(extract_signature(seq)))
    return out


def test_metric_axioms_on_population(population):
    d = lambda a, b: signature_distance(a, b)  # noqa: E731
    for a in population:
        assert d(a, a) == 0.0
    for a, b in itertools.combinations(population, 2):
        assert d(a, b) == d(b, a) > 0
    violations = [t for t in itertools.permutations(population, 3) if d(t[0], t[2]) > d(t[0], t[1]) + d(t[1], t[2])]
    assert not violations


# -- classification -----------------------------------------------------------------

def test_classify_own_label():
    lib = [("a", _stats([0.1, 0.2, 0.3], np.full(3, 0.01))), ("b", _stats([-0.1, 0.0, 0.3], np.full(3, 0.01)))]
    obs = SignatureVector([[0.11, 0.19, 0.3]], PATS)
    res = classify_source(obs, lib)
    assert res.label == "a" and res.margin > 0
    assert set(res.distances) == {"a", "b"}


def test_classify_single_entry_margin_nan():
    res = classify_source(_stats([0.1, 0.2, 0.3]), [("only", _stats([0.0, 0.0, 0.0]))])
    assert res.label == "only" and math.isnan(res.margin)


def test_classify_tie_breaks_to_first():
    entry = _stats([0.1, 0.2, 0.3])
    res = classify_source(_stats([0.0, 0.0, 0.0]), [("first", entry), ("second", entry)])
    assert res.label == "first" and res.margin == 0.0


def test_classify_empty_library():
    with pytest.raises(DomainError):
        classify_source(_stats([0.0, 0.0, 0.0]), [])


def test_leave_one_cycle_out():
    rng = np.random.default_rng(0)
    sigs = {lab: SignatureVector(centre + 0.01 * rng.standard_normal((5, 3)), PATS)
            for lab, centre in (("x", np.array([0.1, 0.2, 0.3])), ("y", np.array([0.3, 0.1, -0.2])))}
    assert leave_one_cycle_out(sigs) == 1.0
    with pytest.raises(DomainError):
        leave_one_cycle_out({"x": sigs["x"].rows([0])})


# -- uniqueness ---------------------------------------------------------------------

def test_uniqueness_identical_copies_score_zero():
    s = _stats([0.1, 0.2, 0.3], np.full(3, 0.01))
    rep = uniqueness_report([s, s, s], [[s, s]] * 3)
    assert rep.inter_distance == 0 and rep.score == 0
    assert "uniqueness score: 0" in rep.summary()


def test_uniqueness_separated_devices():
    a, a2 = _stats([0.1, 0.2, 0.3]), _stats([0.101, 0.2, 0.3])
    b, b2 = _stats([0.3, 0.1, -0.2]), _stats([0.3, 0.101, -0.2])
    rep = uniqueness_report([a, b], [[a, a2], [b, b2]])
    assert rep.score > 3 and rep.devices == 2 and rep.replicates == 2


@pytest.mark.parametrize("pop, reps", [(1, 2), (2, 1)])
def test_uniqueness_degenerate_sizes(pop, reps):
    s = _stats([0.1, 0.2, 0.3])
    with pytest.raises(DomainError):
        uniqueness_report([s] * pop, [[s] * reps] * pop)


# -- extraction -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_run():
    prog = cells.network_program("SP1", write_duration=1.0, rest_duration=1.0)
    return run_sequence(cells.network_cell(0), prog)


def test_single_cycle_extracts_one_row(short_run):
    sig = extract_signature(short_run)
    assert sig.values.shape == (1, 8)
    assert sig.patterns == tuple(str(p) for p in short_run.program.patterns)


def test_missing_step_names_it(short_run):
    broken = type(short_run)(short_run.program, short_run.trace, short_run.i_read.copy(), short_run.i_rest.copy())
    broken.i_read[0, 3] = np.nan
    with pytest.raises(ExtractionError, match="cycle 0 pattern 3 .011.: READ"):
        extract_signature(broken)
    broken.i_rest[0, 1] = np.nan
    with pytest.raises(ExtractionError, match="pattern 1 .000.: REST"):
        extract_signature(broken)


def test_warmup_only_trace_rejected(short_run):
    prog = short_run.program.with_(warmup_cycles=1)
    seq = type(short_run)(prog, short_run.trace, short_run.i_read, short_run.i_rest)
    with pytest.raises(ExtractionError):
        extract_signature(seq)


def test_csv_exports(tmp_path, short_run):
    sig = extract_signature(short_run)
    sig.to_csv(tmp_path / "sig.csv")
    rows = list(csv.reader(open(tmp_path / "sig.csv")))
    assert rows[0] == ["cycle", *sig.patterns]
    assert [float(x) for x in rows[1][1:]] == list(sig.values[0])
    stats_long_csv(tmp_path / "long.csv", [("dev0", signature_stats(sig))])
    rows = list(csv.reader(open(tmp_path / "long.csv")))
    assert rows[0] == ["pattern", "mean", "std", "device"]
    assert len(rows) == 9 and rows[1][3] == "dev0"


def test_extraction_is_byte_identical(tmp_path):
    prog = cells.network_program("SP2", write_duration=1.0, rest_duration=1.0)
    for k in range(2):
        extract_signature(run_sequence(cells.network_cell(3), prog)).to_csv(tmp_path / f"{k}.csv")
    assert (tmp_path / "0.csv").read_bytes() == (tmp_path / "1.csv").read_bytes()

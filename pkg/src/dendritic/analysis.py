"""Signatures, distances and uniqueness scores built from sequence runs."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExtractionError
from .protocols import delta_i_over_i

# Floor on the pooled per-pattern std used by the z-score distance: below this
# spread two signatures are considered to be measured at finite resolution.
DEFAULT_RESOLUTION = 0.002


@dataclass
class SignatureVector:
    """dI/I values, one row per cycle and one column per pattern."""

    values: np.ndarray
    patterns: tuple

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.patterns = tuple(str(p) for p in self.patterns)
        if self.values.shape[1] != len(self.patterns):
            raise DomainError("signature row length must equal the pattern count")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("signature entries must be finite")

    @property
    def cycles(self) -> int:
        return self.values.shape[0]

    def rows(self, keep) -> "SignatureVector":
        return SignatureVector(self.values[list(keep)], self.patterns)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cycle", *self.patterns])
            for c, row in enumerate(self.values):
                w.writerow([c, *(repr(float(x)) for x in row)])


@dataclass
class SignatureStats:
    mean: np.ndarray
    std: np.ndarray
    patterns: tuple = ()
    cycles: int = 1

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != self.std.shape:
            raise DomainError("mean and std lengths differ")
        if np.any(self.std < 0):
            raise DomainError("std must be >= 0")
        self.patterns = tuple(self.patterns) or tuple(str(k) for k in range(len(self.mean)))

    def reordered(self, patterns) -> "SignatureStats":
        """Columns rearranged to follow ``patterns`` (labels)."""
        pos = [self.patterns.index(str(p)) for p in patterns]
        return SignatureStats(self.mean[pos], self.std[pos], tuple(str(p) for p in patterns), self.cycles)


def extract_signature(seq) -> SignatureVector:
    """dI/I for every (READ, preceding REST) pair of a :class:`SequenceTrace`.

    Warm-up cycles of the program are skipped.
    """
    n_c, n_p = seq.i_read.shape
    skip = seq.program.warmup_cycles
    if n_c <= skip:
        raise ExtractionError(f"trace holds {n_c} cycles, fewer than the {skip} warm-up cycles plus one")
    labels = [str(p) for p in seq.program.patterns]
    out = np.empty((n_c - skip, n_p))
    for c in range(skip, n_c):
        for k in range(n_p):
            if not np.isfinite(seq.i_rest[c, k]):
                raise ExtractionError(f"cycle {c} pattern {k} ({labels[k]}): REST reading missing")
            if not np.isfinite(seq.i_read[c, k]):
                raise ExtractionError(f"cycle {c} pattern {k} ({labels[k]}): READ reading missing")
            out[c - skip, k] = delta_i_over_i(seq.i_read[c, k], seq.i_rest[c, k])
    return SignatureVector(out, labels)


def signature_stats(sig: SignatureVector) -> SignatureStats:
    """Column-wise mean and population standard deviation."""
    return SignatureStats(sig.values.mean(axis=0), sig.values.std(axis=0), sig.patterns, sig.cycles)


def signature_distance(a: SignatureStats, b: SignatureStats, resolution: float = DEFAULT_RESOLUTION) -> float:
    """Euclidean distance between mean vectors in units of the pooled std.

    Per pattern the pooled std is sqrt((sa^2 + sb^2) / 2), floored at
    ``resolution`` so noise-free signatures stay comparable.
    """
    if len(a.mean) != len(b.mean):
        raise DomainError(f"signature lengths differ ({len(a.mean)} vs {len(b.mean)})")
    pooled = np.sqrt(0.5 * (a.std ** 2 + b.std ** 2))
    pooled = np.maximum(pooled, resolution)
    return float(np.sqrt(np.sum(((a.mean - b.mean) / pooled) ** 2)))


@dataclass
class Classification:
    label: str
    margin: float  # runner-up distance minus best; NaN with a one-entry library
    distances: dict


def classify_source(observed, library, resolution: float = DEFAULT_RESOLUTION) -> Classification:
    """Nearest library signature; ``library`` is a list of (label, SignatureStats)."""
    library = list(library)
    if not library:
        raise DomainError("classification library is empty")
    obs = observed if isinstance(observed, SignatureStats) else signature_stats(observed)
    dists = [signature_distance(obs, stats, resolution) for _, stats in library]
    order = sorted(range(len(dists)), key=lambda k: (dists[k], k))
    best = order[0]
    margin = dists[order[1]] - dists[best] if len(order) > 1 else math.nan
    return Classification(library[best][0], margin, {lab: d for (lab, _), d in zip(library, dists)})


def leave_one_cycle_out(signatures: dict, resolution: float = DEFAULT_RESOLUTION) -> float:
    """Fraction of held-out cycles assigned to their own source.

    ``signatures`` maps label -> multi-cycle :class:`SignatureVector`; each
    cycle is classified against centroids built from the remaining cycles
    of its own source and all cycles of the others.
    """
    hits = total = 0
    for label, sig in signatures.items():
        for c in range(sig.cycles):
            rest = [k for k in range(sig.cycles) if k != c]
            if not rest:
                raise DomainError("leave-one-out needs at least two cycles per source")
            lib = [(lab, signature_stats(s.rows(rest) if lab == label else s)) for lab, s in signatures.items()]
            held = sig.rows([c])
            got = classify_source(held, lib, resolution).label
            hits += got == label
            total += 1
    return hits / total


@dataclass
class UniquenessReport:
    inter_distance: float
    intra_distance: float
    score: float
    devices: int
    replicates: int

    def summary(self) -> str:
        return (f"devices: {self.devices}\nreplicates: {self.replicates}\n"
                f"inter-device mean distance: {self.inter_distance:.6g}\n"
                f"intra-device mean distance: {self.intra_distance:.6g}\n"
                f"uniqueness score: {self.score:.6g}\n")


def uniqueness_report(population, replicates, resolution: float = DEFAULT_RESOLUTION) -> UniquenessReport:
    """Inter-device vs intra-device signature distances.

    ``population`` holds one SignatureStats per device, ``replicates`` one list
    of repeated-run SignatureStats per device.  The score is the ratio
    inter / intra (infinite when replicates agree exactly and devices do not).
    """
    population = list(population)
    replicates = [list(r) for r in replicates]
    if len(population) < 2:
        raise DomainError("uniqueness needs at least two devices")
    if len(replicates) != len(population) or any(len(r) < 2 for r in replicates):
        raise DomainError("uniqueness needs at least two replicates for every device")
    inter = np.mean([signature_distance(a, b, resolution) for a, b in itertools.combinations(population, 2)])
    intra = np.mean([signature_distance(a, b, resolution)
                     for reps in replicates for a, b in itertools.combinations(reps, 2)])
    if intra == 0:
        score = 0.0 if inter == 0 else math.inf
    else:
        score = inter / intra
    return UniquenessReport(float(inter), float(intra), float(score), len(population), len(replicates[0]))


def stats_long_csv(path, labelled_stats) -> None:
    """Spider-diagram-ready rows: pattern, mean, std, device."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pattern", "mean", "std", "device"])
        for label, st in labelled_stats:
            for p, m, s in zip(st.patterns, st.mean, st.std):
                w.writerow([p, repr(float(m)), repr(float(s)), label])

"""Spatial projections of the same bit sequence give distinct signatures.

The network cell has eight input electrodes around a grown dendrite network
and a two-terminal readout in the middle.  The same eight 3-bit patterns
are written on three different electrode triples.  Each WRITE is followed
by a short READ; the relative change of the readout current against the
post-REST baseline, one value per pattern, is the signature.
"""
import itertools

from dendritic import cells
from dendritic.analysis import extract_signature, leave_one_cycle_out, signature_distance, signature_stats
from dendritic.protocols import run_sequence

cell = cells.network_cell(0)
sigs = {}
for name, inputs in cells.SPATIAL_PROJECTIONS.items():
    prog = cells.network_program(name, cycles=5, warmup_cycles=1)
    sigs[name] = extract_signature(run_sequence(cell, prog))
    st = signature_stats(sigs[name])
    print(f"{name} on {'/'.join(inputs)}")
    for p, m, s in zip(st.patterns, st.mean, st.std):
        print(f"  {p}  {100 * m:+7.3f}% +- {100 * s:.3f}")

stats = {k: signature_stats(v) for k, v in sigs.items()}
print()
for a, b in itertools.combinations(stats, 2):
    print(f"z-distance {a}/{b}: {signature_distance(stats[a], stats[b]):.1f}")
print(f"leave-one-cycle-out classification: {100 * leave_one_cycle_out(sigs):.0f}%")

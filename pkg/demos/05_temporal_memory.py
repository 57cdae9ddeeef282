"""Order matters: the device remembers what it was shown before.

Dedoping relaxes over seconds and traps accumulate, so the response to a
pattern depends on the patterns that preceded it.  Presenting the same
eight patterns in a shuffled order changes the signature; with traps off
and fast relaxation the device forgets between patterns and the order no
longer matters.
"""
from dendritic import cells
from dendritic.analysis import extract_signature, signature_distance, signature_stats
from dendritic.device import DeviceParams
from dendritic.protocols import run_sequence


def order_distance(cell, cycles):
    prog = cells.network_program("SP1", cycles=cycles, warmup_cycles=1)
    base = signature_stats(extract_signature(run_sequence(cell, prog)))
    shuffled = prog.shuffled(cells.SHUFFLED_ORDER)
    other = signature_stats(extract_signature(run_sequence(cell, shuffled))).reordered(base.patterns)
    return signature_distance(base, other)


p = DeviceParams()
fast = p.with_(trap_rate=0.0, dedope_time_constant_per_volume=p.dedope_time_constant_per_volume / 5,
               redope_time_constant_per_volume=p.dedope_time_constant_per_volume / 5)

print(f"shuffled vs original, default device:   {order_distance(cells.network_cell(0), 5):8.2f}")
print(f"shuffled vs original, memoryless device: {order_distance(cells.network_cell(0, fast), 2):8.2e}")

"""Slow drift and fatigue from trapped cations.

A small fraction of every dedoping event is trapped and released only
slowly.  Over repeated cycles the baseline current creeps down, and a long
stress train leaves a lasting conductance loss.
"""
import numpy as np

from dendritic import cells
from dendritic.protocols import run_fatigue, run_sequence

seq = run_sequence(cells.network_cell(0), cells.network_program("SP1", cycles=5))
base = seq.i_rest[:, 0]
print("baseline current at the start of each cycle")
for c, i in enumerate(base):
    print(f"  cycle {c}: {1e6 * i:.4f} uA")
print(f"monotone decreasing: {bool(np.all(np.diff(base) < 0))}\n")

fat = run_fatigue(cells.gating_pair(), "B_D", "B_S", grounded=("T_S", "T_D"))
print(f"stress: {len(fat.stress_currents)} x (0.9 V for 5 s, 0 V for 5 s)")
print(f"conductance before {1e6 * fat.conductance_before:.3f} uS, after {1e6 * fat.conductance_after:.3f} uS")
print(f"lasting loss {100 * fat.drop:.1f}%")
print(f"stress current first/last cycle: {1e6 * fat.stress_currents[0]:.3f} / {1e6 * fat.stress_currents[-1]:.3f} uA")

"""Inter-gating between two disconnected dendrites sharing one electrolyte.

A bulky dendrite (grown at 25 Hz) and a thin, tortuous one (200 Hz) have no
electrical contact.  Biasing one of them shifts the electrolyte potential
and dedopes the other: the bulky device, with more volumetric capacitance,
is the stronger gate.
"""
from dendritic import cells
from dendritic.protocols import SweepConfig, run_transfer_sweep

cell = cells.gating_pair()
biases = (0.0, 0.3, 0.6, 0.9)

bulky_gate = run_transfer_sweep(cell, SweepConfig(("T_D",), ("T_S", "B_S"), -0.9, 0.9, 0.1,
                                                  secondary=("B_D", biases)))
thin_gate = run_transfer_sweep(cell, SweepConfig(("B_D",), ("B_S", "T_S"), -0.9, 0.9, 0.1,
                                                 secondary=("T_D", biases)))

for name, fam in (("bulky gate -> thin channel", bulky_gate), ("thin gate -> bulky channel", thin_gate)):
    print(name)
    i = fam.transfer_curve(0.1)
    for b, x in zip(fam.gate_biases, i):
        print(f"  gate {b:.1f} V  drain {1e6 * x:8.4f} uA")
    print(f"  suppression at 0.1 V channel bias: {100 * fam.suppression(0.1):.1f}%\n")

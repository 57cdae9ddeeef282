"""Multiply-accumulate with three input dendrites and one readout.

Three arms of different morphology and distance share a grounded centre;
a separate readout dendrite is biased at 100 mV.  A 0.6 V / 200 ms pulse
on an input raises the electrolyte potential and dedopes the readout: the
readout current dips by an amount set by the arm (the weight), and pulses
on several arms add up (the accumulation).
"""
from dendritic import cells
from dendritic.protocols import run_mac

res = run_mac(cells.mac_cell(), cells.mac_config())
print("input subset      dI/I")
for subset, pct in res.percent().items():
    print(f"  {subset:14s} {pct:+7.2f}%")

tr = res.trace
i = tr.current("R_D")
print(f"\ntrace: {len(tr.times)} samples over {tr.times[-1]:.1f} s, "
      f"readout current {1e9 * i.min():.2f}..{1e9 * i.max():.2f} nA")

"""Each grown network has its own signature.

Growth is stochastic: a different seed gives a different network, and
the same input sequence then gives a different signature.  Replicate runs
on one device stay close.  The uniqueness score is the mean inter-device
distance over the mean intra-device (replicate) distance.

A smaller population than the acceptance run keeps this demo quick.
"""
from dendritic import cells
from dendritic.analysis import extract_signature, signature_stats, uniqueness_report
from dendritic.protocols import run_sequence


def replicates(cell, program, n=2):
    state = run_sequence(cell, program).final_state  # conditioning run
    out = []
    for _ in range(n):
        seq = run_sequence(cell, program, initial=state)
        state = seq.final_state
        out.append(signature_stats(extract_signature(seq)))
    return out


twin = cells.twin_cell(0)
reps = {dev: replicates(twin, cells.network_program(inputs)) for dev, inputs in cells.TWIN_INPUTS.items()}
rep = uniqueness_report([r[0] for r in reps.values()], list(reps.values()))
print("twin networks grown at 80 Hz and 500 Hz, one shared readout")
print(rep.summary())

prog = cells.network_program("SP1")
pop = [replicates(cells.network_cell(seed), prog) for seed in range(8)]
rep = uniqueness_report([r[0] for r in pop], pop)
print("population of 8 seeds")
print(rep.summary())

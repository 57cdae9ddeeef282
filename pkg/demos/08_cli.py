"""Driving everything from config files.

The same experiments run from the command line, e.g.

    dendritic validate configs/y_sweep.yaml
    dendritic grow configs/full_example.yaml -o runs/grown
    dendritic signature configs/network_signature.yaml -o runs/signature

Every output directory holds CSVs, a report and a manifest with the config
hash, seed and software version.  This script calls the same entry point
in-process and writes into a temporary directory.
"""
import json
import tempfile
from pathlib import Path

from dendritic.cli import run_cli

configs = Path(__file__).resolve().parent.parent / "configs"

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    for argv in (["validate", configs / "full_example.yaml"],
                 ["grow", configs / "full_example.yaml", "-o", tmp / "grow"],
                 ["sweep", configs / "y_sweep.yaml", "-o", tmp / "sweep"],
                 ["mac", configs / "mac.yaml", "-o", tmp / "mac"]):
        argv = [str(a) for a in argv]
        print("$ dendritic", " ".join(argv[:2]))
        code = run_cli(argv)
        print(f"exit status {code}\n")

    manifest = json.loads((tmp / "mac" / "manifest.json").read_text())
    print("mac manifest outputs:", ", ".join(manifest["outputs"]))
    print("config sha256:", manifest["config_sha256"][:16], "...")

    # a failing run: a single-line diagnostic and a nonzero status
    bad = tmp / "bad.yaml"
    bad.write_text("cell:\n  preset: y-device\n  colour: blue\n")
    print("\n$ dendritic validate bad.yaml")
    print("exit status", run_cli(["validate", str(bad)]))

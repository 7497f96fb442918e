"""Configuration files, sweeps and the run summary.

The same INI text the command line reads can be parsed in-process. A
[sweep] section expands to the Cartesian product of its axes; point i runs
with seed + i, so every point is reproducible on its own.
"""
import json
import tempfile
from pathlib import Path

from rodlangevin import run_experiment
from rodlangevin.experiment import dump_config, load_config

here = Path(__file__).parent
cfg = load_config(here / "configs" / "overdamped_sweep.ini").replace(n_trajectories=1000)
print(dump_config(cfg))

with tempfile.TemporaryDirectory() as out:
    results = run_experiment(cfg, out)
    for point, result in zip(sorted(Path(out).iterdir()), results):
        summary = json.loads((point / "summary.json").read_text())
        checks = ", ".join(f"{c['id']}={c['estimate']:.3f}/{c['oracle']:.3f}" for c in summary["checks"])
        print(f"{point.name}: gamma_perp={result.config.bath.gamma_perp:g} seed={summary['seed']} "
              f"pass={summary['pass']}  {checks}")

#!/usr/bin/env python3
"""Run the full experiment suite on the canonical topology.

Usage: python scripts/run_all_experiments.py [out_dir]
"""

import sys
from pathlib import Path

from malctrl.experiments import ExperimentSpec, run_experiment


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results")
    for experiment_id in ("exp1", "exp2", "exp3", "exp4"):
        print(f"running {experiment_id} ...", flush=True)
        summary = run_experiment(ExperimentSpec(experiment_id=experiment_id, out_dir=out_dir))
        if experiment_id == "exp2":
            print(f"  optimal J {summary['population']['optimal_J']:.4f}"
                  f" vs best random {summary['population_min_J']:.4f}")
        elif experiment_id == "exp3":
            print(f"  peak IH uncontrolled {summary['peak_IH_uncontrolled']:.2f},"
                  f" controlled {summary['peak_IH_controlled']:.2f},"
                  f" reduction {summary['reduction_pct']:.2f}%")
        elif experiment_id == "exp4":
            peaks = [f"{s['peak_IH']:.2f}" for s in summary["stages"]]
            print(f"  propagation peak IH per stage: {', '.join(peaks)}")
    print(f"artifacts under {out_dir}/")


if __name__ == "__main__":
    main()

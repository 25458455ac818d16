"""Finite-shot trials comparing the estimation error with the 4 ||A_k^+|| eps bound.

Only trials where every circuit has Lambda >= 1/2 and every estimate has
Lambda_hat >= 1/4 count; the others are reported as skipped.

    python3 scripts/bound_check.py --config configs/small.json --trials 50
"""
import argparse
import csv
import sys

import numpy as np

from faces import experiment
from faces.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/small.json")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--max-seeds", type=int, default=500)
    args = ap.parse_args()
    base = ExperimentConfig.load(args.config)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "degree", "pinv_norm", "epsilon", "bound", "max_abs_error", "ratio"])
    held = violated = skipped = 0
    for seed in range(args.max_seeds):
        if held == args.trials:
            break
        cfg = base.replace(seed=seed)
        model, bad = experiment.draw_model(cfg)
        if bad:
            skipped += 1
            continue
        report = experiment.run_shots(model, cfg.shots, seed, cfg.cutoff)
        if not all(d.hypotheses_hold and d.dropped == 0 for d in report.degrees):
            skipped += 1
            continue
        held += 1
        violated += report.bound_violated
        for d in report.degrees:
            w.writerow([seed, d.degree, d.pinv_norm, report.epsilon, d.bound, d.max_abs_error,
                        d.bound / max(d.max_abs_error, np.finfo(float).tiny)])
    print(f"# {held} trials with verified hypotheses, {violated} violations, {skipped} skipped", file=sys.stderr)
    return 1 if violated else 0


if __name__ == "__main__":
    sys.exit(main())

"""Overlap curves at the full n = 10^4 size (one trial, as in the published figures).

Each run is one dense eigendecomposition of a 10^4 x 10^4 matrix.  On one core
fig1 took 194 s with a 4.8 GB peak resident set.

    python scripts/figures_full.py --which fig1 fig2 --out results/full
"""

import argparse
import time
from pathlib import Path

from pertspec.cli import write_report
from pertspec.experiments import FIGURE_MODELS, ExperimentConfig, run_figures


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--which", nargs="+", default=["fig1", "fig2"], choices=sorted(FIGURE_MODELS))
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/full")
    args = p.parse_args()
    for which in args.which:
        model, params = FIGURE_MODELS[which]
        cfg = ExperimentConfig(model=model, model_params=params, n_list=(args.n,), trials=args.trials,
                               master_seed=args.seed, workers=args.workers)
        start = time.perf_counter()
        rep = run_figures(cfg, which)
        path = write_report(rep, Path(args.out) / f"figures_{which}.csv")
        print(f"{which}: n={args.n}, {len(rep.rows)} points, {time.perf_counter() - start:.0f} s -> {path}")


if __name__ == "__main__":
    main()

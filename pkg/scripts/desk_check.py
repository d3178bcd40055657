"""Desk-scale Monte Carlo summary: windowed overlaps for both models and the
decay of the second-order remainder, printed as small tables.

    python scripts/desk_check.py --n 2000 --trials 20
"""

import argparse
import time

from pertspec.experiments import ExperimentConfig, run_pi_decay, run_thm1, run_thm2


def _table(title, columns, rows):
    print(f"\n{title}")
    print("  ".join(f"{c:>14}" for c in columns))
    for r in rows:
        print("  ".join(f"{v:>14.6g}" for v in r))


def main():
    p = argparse.ArgumentParser(description="desk-scale checks")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--small-n", type=int, default=500)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--pi-trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--skip-pi", action="store_true", help="only the windowed-overlap tables")
    args = p.parse_args()
    common = dict(master_seed=args.seed, workers=args.workers)

    start = time.perf_counter()
    wig = run_thm2(ExperimentConfig(n_list=(args.n,), trials=args.trials, **common))
    _table(f"wigner, n={args.n}: mean S vs 1/(t - 1/2)^2", wig.columns, wig.rows)
    # centers must clear f(x0) = 1/2 by two window half-widths
    grid = tuple(t for t in (0.35, 0.4, 0.45, 0.55, 0.6, 0.65, 0.75) if abs(t - 0.5) >= 2 * args.n**-0.5)
    band = run_thm2(ExperimentConfig(model="band", model_params=(("ell", 0.1),), n_list=(args.n,),
                                     trials=args.trials, t_grid=grid, **common))
    _table(f"band ell=0.1, n={args.n}: localization", band.columns, band.rows)
    print(f"\nalpha^8 vs theory threshold: {wig.metadata['alpha_pow8']:.3g} vs {wig.metadata['theory_rhs']:.3g}")

    if not args.skip_pi:
        cfg = ExperimentConfig(n_list=(args.small_n, args.n), trials=args.pi_trials, **common)
        t1 = run_thm1(cfg, "bump:0.7,0.9")
        _table("mean |Pi_n|^2, phi = bump(0.7, 0.9)", t1.columns, t1.rows)
        pd = run_pi_decay(cfg, 0.6 + 2j)
        _table("mean |Pi_n|^2, phi(t) = 1/(0.6+2i - t)", pd.columns, pd.rows)
        print(f"fitted-bound ratios: {pd.metadata['ratios']}")
    print(f"\ntotal {time.perf_counter() - start:.0f} s")


if __name__ == "__main__":
    main()

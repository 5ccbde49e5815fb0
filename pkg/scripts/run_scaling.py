"""Amortized oracle calls per update on sliding-window streams of growing size.

    python3 scripts/run_scaling.py --sizes 64 256 1024 --seeds 3 --out scaling.csv
"""
import argparse
import csv
import sys
import time

from dynsc.harness import ExperimentConfig, gen_stream, random_coverage_problem, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--window", type=int, default=16)
    ap.add_argument("--ops-per-element", type=float, default=2.0)
    ap.add_argument("--rho", type=float, default=4.0)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--out", help="optional CSV with one row per (n, seed)")
    args = ap.parse_args(argv)

    rows = []
    for n in args.sizes:
        for seed in range(args.seeds):
            problem = random_coverage_problem(n, n, args.rho, seed=seed)
            ops = gen_stream("sliding_window", problem.ground.ids,
                             int(args.ops_per_element * n), seed=seed, window=args.window)
            t0 = time.time()
            _, s = run_experiment(problem, ops, ExperimentConfig(eps=args.epsilon, seed=seed))
            rows.append({"n": n, "seed": seed, "updates": s.updates,
                         "amortized_oracle_calls": round(s.amortized_oracle_calls, 2),
                         "instances": s.instances, "reconstructions": s.reconstructions,
                         "mean_coverage_ratio": round(s.mean_coverage_ratio, 4),
                         "seconds": round(time.time() - t0, 1)})
            print(rows[-1], flush=True)

    means = {n: sum(r["amortized_oracle_calls"] for r in rows if r["n"] == n) / args.seeds
             for n in args.sizes}
    for n, m in means.items():
        print(f"n={n:6d}  mean amortized calls {m:10.1f}")
    if len(means) > 1:
        lo, hi = min(means), max(means)
        print(f"growth n={hi} / n={lo}: {means[hi] / means[lo]:.2f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())

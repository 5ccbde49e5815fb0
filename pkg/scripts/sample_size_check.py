"""Compare calc_sample_size against a Monte-Carlo estimate of E[X(r)].

For each frozen bucket taken from a real instance, prints |B|, the chosen
m, and the estimated acceptance rate at each prefix position.

    python3 scripts/sample_size_check.py --fixtures 10 --trials 10000 --theory
"""
import argparse
import sys

import numpy as np

from dynsc.harness import random_coverage_problem
from dynsc.levels import InstanceState, calc_sample_size, instance_rng
from dynsc.verify import estimate_expected_X, freeze_history


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixtures", type=int, default=10)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--theory", action="store_true", help="use the high-probability simulation count")
    ap.add_argument("--t-override", type=int, default=200)
    args = ap.parse_args(argv)
    eps = args.epsilon

    done, seed = 0, 0
    while done < args.fixtures:
        problem = random_coverage_problem(30, 40, 1.0, seed=seed, max_cover=5)
        inst = InstanceState(problem, 1.0, eps, rng=instance_rng(seed, 0))
        inst.init(set(problem.ground.ids))
        seed += 1
        for i in range(1, inst.T + 1):
            if done >= args.fixtures:
                break
            h = freeze_history(inst, i)
            if len(h.B) < 4:
                continue
            f_G = problem.value(h.G_prev) if h.G_prev else 0.0
            m = calc_sample_size(problem, set(h.B), h.G_prev, f_G, h.tau_level, eps,
                                 len(problem.ground), instance_rng(10_000 + done, 0),
                                 t_override=None if args.theory else args.t_override)
            X = estimate_expected_X(problem, set(h.B), h.G_prev, h.tau_level, args.trials,
                                    np.random.default_rng(done))
            ok = all(X[:m] >= 1 - 2 * eps) and X[m] <= 1 - eps / 2
            print(f"|B|={len(h.B):2d} m={m:2d} {'ok ' if ok else 'off'} E[X] = "
                  + " ".join(f"{x:.3f}" for x in X))
            done += 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Small fixtures shared by several test modules."""
import numpy as np

from dynsc.oracle import GroundElement, GroundSet, Oracle, Problem


class ModularOracle(Oracle):
    """f(S) = sum of fixed per-element values; marginals never change."""

    def __init__(self, values):
        self.values = dict(values)

    def evaluate(self, S):
        return float(sum(self.values[e] for e in S))


def modular_problem(values, weights=None, rho=None):
    weights = weights or {}
    ground = GroundSet([GroundElement(e, weights.get(e, 1.0)) for e in values], rho)
    return Problem(ground, ModularOracle(values))


def reference_sample_size(problem, Lp, Gp, f_Gp, taup, eps, perms):
    """Plain re-implementation: one full sequential pass per permutation row."""
    order = problem.ground.ordered(Lp)
    t, k = perms.shape
    X = np.zeros((t, k + 1))
    for row in range(t):
        G, f_G = set(Gp), f_Gp
        for pos, idx in enumerate(perms[row]):
            e = order[idx]
            f_new = problem.oracle.evaluate(G | {e})
            if (f_new - f_G) / problem.ground.weight(e) >= taup:
                X[row, pos] = 1
                G.add(e)
                f_G = f_new
    means = X.mean(axis=0)
    for pos in range(k + 1):
        if means[pos] < 1 - eps:
            return pos
    return k

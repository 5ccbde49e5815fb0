"""Executable checks for the leveled structure.

The level checks recompute everything from scratch with an uncounted
oracle, so running them never perturbs query statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dynsc.errors import InvalidArgument
from dynsc.levels import InstanceState, apply_and_revert, draw_sample, level_threshold
from dynsc.oracle import Problem, uncounted

TOL = 1e-9


@dataclass
class Violation:
    invariant: str
    level: int
    detail: str


@dataclass
class InvariantReport:
    T: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, invariant: str, level: int, detail: str) -> None:
        self.violations.append(Violation(invariant, level, detail))


def _quiet(problem: Problem) -> Problem:
    return problem.with_oracle(uncounted(problem.oracle))


def _fmt(S) -> str:
    return str(sorted(map(str, S)))


def check_level_invariants(inst: InstanceState) -> InvariantReport:
    """Filter, Subset, Deviation and Stopping invariants plus per-level structure."""
    problem = _quiet(inst.problem)
    tau, D, T = inst.tau, inst.D, inst.T
    levels = inst.levels
    rep = InvariantReport(T)

    # Filter and Subset, i in [T+1]
    for i in range(1, T + 2):
        prev, lvl = levels[i - 1], levels[i]
        hat_prev, hat = prev.L_ext - D, lvl.L_ext - D
        f_prev = problem.value(prev.G) if prev.G else 0.0
        if abs(f_prev - prev.f_G) > TOL * max(1.0, f_prev):
            rep.add("cache", i - 1, f"cached f(G)={prev.f_G} but f(G)={f_prev}")
        expected = {e for e in hat_prev
                    if problem.density(e, prev.G, f_prev) >= tau}
        if hat != expected:
            rep.add("filter", i, f"L_hat has extra {_fmt(hat - expected)}, "
                                 f"missing {_fmt(expected - hat)}")
        if not lvl.L_ext <= prev.L_ext:
            rep.add("subset", i, f"L_ext not inside previous: {_fmt(lvl.L_ext - prev.L_ext)}")

    # Deviation and Stopping, plus the per-level structure
    for i in range(1, T + 1):
        prev, lvl = levels[i - 1], levels[i]
        B = lvl.B
        if len(B & D) > inst.eps_del * len(B):
            rep.add("deviation", i, f"|B cap D|={len(B & D)} > eps_del*|B|={inst.eps_del * len(B)}")
        if 2 * len(lvl.L_ext) > 3 * len(lvl.L):
            rep.add("deviation", i, f"|L_ext|={len(lvl.L_ext)} > 1.5*|L|={1.5 * len(lvl.L)}")
        if not (lvl.L and lvl.L_ext and lvl.L_ext - D):
            rep.add("stopping", i, "a level at or below T is empty")
        if not B or not B <= lvl.L:
            rep.add("structure", i, "B empty or not inside L")
        if not set(lvl.S) <= B or len(lvl.S) != lvl.m or len(set(lvl.S)) != lvl.m:
            rep.add("structure", i, f"S is not {lvl.m} distinct elements of B")
        if not prev.G <= lvl.G or not lvl.G - prev.G <= set(lvl.S):
            rep.add("structure", i, "G does not extend the previous G by sampled elements")
        if lvl.bucket_idx is None or lvl.tau_level != level_threshold(tau, inst.eps, lvl.bucket_idx[0]) \
                or lvl.tau_level < tau:
            rep.add("structure", i, f"tau_level={lvl.tau_level} inconsistent with bucket {lvl.bucket_idx}")
    top = levels[T + 1]
    if top.L or top.L_ext or (top.L_ext - D):
        rep.add("stopping", T + 1, "level T+1 is not empty")
    return rep


@dataclass
class CostChainReport:
    passed: bool
    total_weight: float
    bound: float
    detail: str = ""


def audit_cost_chain(inst: InstanceState) -> CostChainReport:
    """Every addition cleared its level threshold, and cost(G_T) <= f(G_T)/tau."""
    problem = _quiet(inst.problem)
    log = inst.addition_log
    G_T = inst.top_solution()
    f_GT = problem.value(G_T) if G_T else 0.0
    weight = problem.cost(G_T)
    bound = f_GT / inst.tau
    for a in log:
        if not (a.density >= a.tau_level >= inst.tau):
            return CostChainReport(False, weight, bound,
                                   f"{a.element!r} joined level {a.level} with density "
                                   f"{a.density} against tau_level {a.tau_level}")
    logged = [a.element for a in log]
    if len(logged) != len(set(logged)) or set(logged) != set(G_T):
        return CostChainReport(False, weight, bound, "addition log does not match G_T")
    if weight > bound + TOL * max(1.0, bound):
        return CostChainReport(False, weight, bound, f"cost {weight} exceeds f(G_T)/tau = {bound}")
    return CostChainReport(True, weight, bound)


def estimate_expected_X(problem: Problem, Lp, Gp, taup: float, trials: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Monte-Carlo mean of the apply_and_revert indicator vector."""
    if trials < 100:
        raise InvalidArgument(f"estimate_expected_X needs >= 100 trials, got {trials}")
    Gp = frozenset(Gp)
    f_Gp = problem.value(Gp) if Gp else 0.0
    total = np.zeros(len(Lp) + 1)
    for _ in range(trials):
        total += apply_and_revert(problem, Lp, Gp, f_Gp, taup, rng)
    return total / trials


@dataclass
class FrozenHistory:
    """Pre-sample state of one level: the bucket (in ground order) and m."""

    B: tuple
    m: int
    G_prev: frozenset
    tau_level: float
    level: int


def freeze_history(inst: InstanceState, i: int) -> FrozenHistory:
    if not 1 <= i <= inst.T:
        raise InvalidArgument(f"level {i} is not in [1, T={inst.T}]")
    lvl = inst.levels[i]
    return FrozenHistory(tuple(inst.problem.ground.ordered(lvl.B)), lvl.m,
                         inst.levels[i - 1].G, lvl.tau_level, i)


@dataclass
class UniformityReport:
    frequencies: dict
    expected: float
    band: float
    chi_square: float
    passed: bool


def uniformity_test(history: FrozenHistory, repeats: int,
                    rng: np.random.Generator) -> UniformityReport:
    """Redraw the level's sample ``repeats`` times and test inclusion rates.

    Each element should appear with probability m/|B|; the pass band is four
    binomial standard deviations.
    """
    if repeats < 500:
        raise InvalidArgument(f"uniformity_test needs >= 500 repeats, got {repeats}")
    B, m = list(history.B), history.m
    counts = dict.fromkeys(B, 0)
    for _ in range(repeats):
        for e in draw_sample(B, m, rng):
            counts[e] += 1
    p = m / len(B)
    band = 4 * math.sqrt(p * (1 - p) / repeats)
    freqs = {e: c / repeats for e, c in counts.items()}
    exp_count = p * repeats
    chi2 = sum((c - exp_count) ** 2 / exp_count for c in counts.values())
    passed = all(abs(fr - p) <= band for fr in freqs.values())
    return UniformityReport(freqs, p, band, chi2, passed)

"""Static reference solvers: density greedy, exhaustive search, one-pass threshold."""
from __future__ import annotations

import heapq

from dynsc.errors import InvalidArgument, InvariantViolation
from dynsc.oracle import Problem

BRUTE_FORCE_LIMIT = 22


def _goal(problem: Problem, V, target_fraction: float) -> float:
    if not 0 < target_fraction <= 1:
        raise InvalidArgument(f"target_fraction must lie in (0, 1], got {target_fraction}")
    return target_fraction * problem.value(set(V)) if V else 0.0


def greedy_cover(problem: Problem, V, target_fraction: float = 1.0) -> set:
    """Wolsey-style greedy: repeatedly take the best marginal density.

    Lazy evaluation: stale densities are upper bounds by submodularity, so a
    refreshed element that still beats the heap top is the true argmax.
    Ties go to the element that comes first in the ground order.
    """
    ground = problem.ground
    goal = _goal(problem, V, target_fraction)
    S: set = set()
    f_S = 0.0
    if goal <= 0:
        return S
    heap = [(-problem.density(e, S, f_S), ground.rank(e), e) for e in ground.ordered(V)]
    heapq.heapify(heap)
    while f_S < goal:
        if not heap:
            raise InvariantViolation(f"greedy stalled at f={f_S} below goal {goal}")
        _, rank, e = heapq.heappop(heap)
        gain = problem.gain(e, S, f_S)
        entry = (-gain / ground.weight(e), rank, e)
        if heap and entry > heap[0]:
            heapq.heappush(heap, entry)
            continue
        if gain <= 0:
            raise InvariantViolation(f"greedy stalled at f={f_S} below goal {goal}")
        S.add(e)
        f_S += gain
    return S


def brute_force_opt(problem: Problem, V, target_fraction: float = 1.0) -> tuple[set, float]:
    """Exact minimum-cost S with f(S) >= target_fraction * f(V).

    Depth-first include/exclude search in ground order with cost pruning;
    among equal-cost optima the first one found is kept.
    """
    V = problem.ground.ordered(V)
    if len(V) > BRUTE_FORCE_LIMIT:
        raise InvalidArgument(
            f"brute force refuses |V|={len(V)} > {BRUTE_FORCE_LIMIT}")
    goal = _goal(problem, V, target_fraction)
    if goal <= 0:
        return set(), 0.0
    weights = [problem.ground.weight(e) for e in V]
    oracle = problem.oracle
    best_set, best_cost = list(V), sum(weights)
    tol = 1e-9 * max(1.0, goal)

    def search(pos: int, chosen: list, cost: float):
        nonlocal best_set, best_cost
        if cost >= best_cost:
            return
        if oracle.evaluate(chosen) >= goal - tol:
            best_set, best_cost = list(chosen), cost
            return
        if pos == len(V):
            return
        # adding everything left must be able to reach the goal
        if oracle.evaluate(chosen + V[pos:]) < goal - tol:
            return
        chosen.append(V[pos])
        search(pos + 1, chosen, cost + weights[pos])
        chosen.pop()
        search(pos + 1, chosen, cost)

    search(0, [], 0.0)
    return set(best_set), float(sum(problem.ground.weight(e) for e in best_set))


def static_threshold_cover(problem: Problem, V, tau: float) -> set:
    """One pass in ground order, keeping e iff d(e|S) >= tau and its gain is positive."""
    S: set = set()
    f_S = 0.0
    for e in problem.ground.ordered(V):
        gain = problem.gain(e, S, f_S)
        if gain > 0 and gain / problem.ground.weight(e) >= tau:
            S.add(e)
            f_S += gain
    return S

import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from dynsc.baselines import brute_force_opt, greedy_cover, static_threshold_cover
from dynsc.errors import InvalidArgument
from dynsc.harness import random_coverage_problem
from dynsc.oracle import coverage_problem


def enumerate_opt(problem, V):
    """Cheapest subset reaching f(V), by listing every subset."""
    goal = problem.value(V)
    best = None
    for r in range(len(V) + 1):
        for S in itertools.combinations(V, r):
            if problem.value(S) >= goal - 1e-9:
                c = problem.cost(S)
                if best is None or c < best:
                    best = c
    return best


def test_greedy_three_sets(three_sets):
    S = greedy_cover(three_sets, three_sets.ground.ids)
    assert S == {"v2", "v3"} and three_sets.cost(S) == 2


def test_greedy_trivial_cases(three_sets):
    assert greedy_cover(three_sets, []) == set()
    p = coverage_problem({"x": []})
    assert greedy_cover(p, ["x"]) == set()
    assert greedy_cover(three_sets, ["v1"]) == {"v1"}
    with pytest.raises(InvalidArgument):
        greedy_cover(three_sets, ["v1"], target_fraction=0)


def test_brute_force_three_sets(three_sets):
    assert enumerate_opt(three_sets, three_sets.ground.ids) == 2
    assert brute_force_opt(three_sets, three_sets.ground.ids) == ({"v2", "v3"}, 2.0)
    assert brute_force_opt(three_sets, []) == (set(), 0.0)


def test_brute_force_disjoint_needs_everything():
    p = coverage_problem({f"e{i}": [i] for i in range(6)})
    S, c = brute_force_opt(p, p.ground.ids)
    assert S == set(p.ground.ids) and c == 6


def test_brute_force_size_limit():
    p = coverage_problem({f"e{i}": [i] for i in range(23)})
    with pytest.raises(InvalidArgument):
        brute_force_opt(p, p.ground.ids)


def test_static_threshold(three_sets):
    V = three_sets.ground.ids
    assert static_threshold_cover(three_sets, V, 0) == {"v1"}
    p = coverage_problem({"a": [1], "b": [2], "c": [1]})
    assert static_threshold_cover(p, p.ground.ids, 0) == {"a", "b"}
    assert static_threshold_cover(three_sets, V, 100) == set()
    S = static_threshold_cover(three_sets, V, 1)
    assert S == {"v1"} and three_sets.cost(S) == 3


@given(seed=st.integers(0, 10_000), n=st.integers(1, 9), frac=st.sampled_from([0.5, 0.8, 1.0]))
@settings(max_examples=80, deadline=None)
def test_brute_force_matches_enumeration(seed, n, frac):
    p = random_coverage_problem(n, 12, 3.0, seed=seed, max_cover=5)
    V = p.ground.ids
    S, c = brute_force_opt(p, V, frac)
    assert p.value(S) >= frac * p.value(V) - 1e-9
    goal = frac * p.value(V)
    best = min(p.cost(T) for r in range(n + 1) for T in itertools.combinations(V, r)
               if p.value(T) >= goal - 1e-9)
    assert c == pytest.approx(best)


@given(seed=st.integers(0, 10_000), n=st.integers(1, 12))
@settings(max_examples=60, deadline=None)
def test_greedy_between_opt_and_log_bound(seed, n):
    p = random_coverage_problem(n, 16, 4.0, seed=seed, max_cover=6)
    V = p.ground.ids
    S = greedy_cover(p, V)
    assert p.value(S) >= p.value(V) - 1e-9
    _, opt = brute_force_opt(p, V)
    g = p.cost(S)
    assert opt - 1e-9 <= g <= opt * (1 + math.log(p.value(V))) + 1e-9

"""Ground sets, submodular oracles, and oracle-call accounting.

Every algorithm in the package talks to the objective only through
``Oracle.evaluate``; wrapping an oracle in :class:`CountingOracle` is how
query complexity is measured.
"""
from __future__ import annotations

import functools
import json
import operator
import random
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping

from dynsc.errors import InvalidArgument, OracleContractError

# additive slack for rounding noise in oracle values
GAIN_TOL = 1e-9


@dataclass(frozen=True)
class GroundElement:
    id: Hashable
    weight: float


class GroundSet:
    """Weighted ground set with a canonical element order.

    The order (position in the input) is what every randomized or
    tie-breaking step sorts by, so results never depend on set iteration
    order or hash seeds.
    """

    def __init__(self, elements: Iterable[GroundElement], rho: float | None = None):
        self._weights: dict[Hashable, float] = {}
        self._rank: dict[Hashable, int] = {}
        for el in elements:
            if el.id in self._weights:
                raise InvalidArgument(f"duplicate element id {el.id!r}")
            self._rank[el.id] = len(self._rank)
            self._weights[el.id] = float(el.weight)
        max_w = max(self._weights.values(), default=1.0)
        self.rho = float(rho) if rho is not None else max(max_w, 1.0)
        for eid, w in self._weights.items():
            if not 1.0 <= w <= self.rho:
                raise InvalidArgument(
                    f"weight of {eid!r} is {w}, outside [1, rho={self.rho}]")

    @property
    def ids(self) -> list:
        return list(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __contains__(self, e) -> bool:
        return e in self._weights

    def weight(self, e) -> float:
        try:
            return self._weights[e]
        except KeyError:
            raise InvalidArgument(f"unknown element id {e!r}") from None

    def rank(self, e) -> int:
        try:
            return self._rank[e]
        except KeyError:
            raise InvalidArgument(f"unknown element id {e!r}") from None

    def ordered(self, S: Iterable) -> list:
        return sorted(S, key=self.rank)

    def cost(self, S: Iterable) -> float:
        return float(sum(self.weight(e) for e in self.ordered(S)))


class Oracle(ABC):
    """Value oracle for a monotone, normalized, submodular set function."""

    @abstractmethod
    def evaluate(self, S: Iterable) -> float:
        ...


class CoverageOracle(Oracle):
    """f(S) = (weighted) number of universe items covered by S.

    Items are interned to bit positions so a union is an integer OR.
    """

    def __init__(self, covers: Mapping[Hashable, Iterable[Hashable]],
                 item_weights: Mapping[Hashable, float] | None = None):
        self._item_index: dict[Hashable, int] = {}
        self._masks: dict[Hashable, int] = {}
        for eid, items in covers.items():
            mask = 0
            for item in items:
                bit = self._item_index.setdefault(item, len(self._item_index))
                mask |= 1 << bit
            self._masks[eid] = mask
        self._item_w: list[float] | None = None
        if item_weights is not None:
            self._item_w = [0.0] * len(self._item_index)
            for item, bit in self._item_index.items():
                w = float(item_weights.get(item, 1.0))
                if w < 0:
                    raise InvalidArgument(f"negative weight for item {item!r}")
                self._item_w[bit] = w

    @property
    def n_items(self) -> int:
        return len(self._item_index)

    def covered_mask(self, S: Iterable) -> int:
        try:
            return functools.reduce(operator.or_, map(self._masks.__getitem__, S), 0)
        except KeyError as exc:
            raise InvalidArgument(f"unknown element id {exc.args[0]!r}") from None

    def evaluate(self, S: Iterable) -> float:
        mask = self.covered_mask(S)
        if self._item_w is None:
            return float(mask.bit_count())
        total = 0.0
        while mask:
            low = mask & -mask
            total += self._item_w[low.bit_length() - 1]
            mask ^= low
        return total


class CountingOracle(Oracle):
    """Pass-through wrapper that counts evaluate() invocations."""

    def __init__(self, inner: Oracle):
        self.inner = inner
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def evaluate(self, S: Iterable) -> float:
        with self._lock:
            self._calls += 1
        return self.inner.evaluate(S)


def uncounted(oracle: Oracle) -> Oracle:
    """The innermost oracle, for bookkeeping queries that must not be billed."""
    while isinstance(oracle, CountingOracle):
        oracle = oracle.inner
    return oracle


def marginal_gain(oracle: Oracle, e, A: set | frozenset, f_A: float) -> float:
    """Δ(e|A) using one oracle call against the caller's cached f(A)."""
    gain = oracle.evaluate(A | {e}) - f_A
    return _clamp_gain(gain, e, f_A) if gain < 0 else gain


def _clamp_gain(gain: float, e, f_A: float) -> float:
    if gain < -GAIN_TOL * max(1.0, abs(f_A)):
        raise OracleContractError(
            f"negative marginal gain {gain} for {e!r}: oracle is not monotone")
    return 0.0


def marginal_density(oracle: Oracle, ground: GroundSet, e, A, f_A: float) -> float:
    return marginal_gain(oracle, e, A, f_A) / ground.weight(e)


@dataclass
class Problem:
    """A weighted submodular cover instance: ground set plus objective."""

    ground: GroundSet
    oracle: Oracle

    def value(self, S) -> float:
        return self.oracle.evaluate(S)

    def gain(self, e, A, f_A: float) -> float:
        gain = self.oracle.evaluate(A | {e}) - f_A
        if gain < 0:
            return _clamp_gain(gain, e, f_A)
        return gain

    def density(self, e, A, f_A: float) -> float:
        return self.gain(e, A, f_A) / self.ground.weight(e)

    def cost(self, S) -> float:
        return self.ground.cost(S)

    def with_oracle(self, oracle: Oracle) -> "Problem":
        return Problem(self.ground, oracle)


def coverage_problem(covers: Mapping[Hashable, Iterable[Hashable]],
                     weights: Mapping[Hashable, float] | None = None,
                     rho: float | None = None,
                     item_weights: Mapping[Hashable, float] | None = None) -> Problem:
    weights = weights or {}
    ground = GroundSet((GroundElement(e, weights.get(e, 1.0)) for e in covers), rho)
    return Problem(ground, CoverageOracle(covers, item_weights))


def dominating_set_problem(nodes: Iterable, edges: Iterable,
                           weights: Mapping | None = None,
                           rho: float | None = None) -> Problem:
    """f(S) = |N[S]|, the closed neighbourhood of S."""
    nbrs: dict = {v: {v} for v in nodes}
    for u, v in edges:
        if u not in nbrs or v not in nbrs:
            raise InvalidArgument(f"edge ({u!r}, {v!r}) references an unknown node")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return coverage_problem(nbrs, weights, rho)


def load_problem(path: str | Path) -> Problem:
    """Read an instance file (coverage or graph form)."""
    data = json.loads(Path(path).read_text())
    return problem_from_json(data)


def problem_from_json(data: dict) -> Problem:
    rho = data.get("rho")
    if "elements" in data:
        covers, weights = {}, {}
        for el in data["elements"]:
            eid = el["id"]
            if eid in covers:
                raise InvalidArgument(f"duplicate element id {eid!r}")
            covers[eid] = el.get("covers", [])
            weights[eid] = el.get("weight", 1.0)
        return coverage_problem(covers, weights, rho, data.get("item_weights"))
    if "graph" in data:
        g = data["graph"]
        return dominating_set_problem(g["nodes"], g.get("edges", []),
                                      data.get("weights"), rho)
    raise InvalidArgument("instance JSON needs an 'elements' or 'graph' key")


def problem_to_json(covers: Mapping, weights: Mapping, rho: float) -> dict:
    return {"rho": rho,
            "elements": [{"id": e, "weight": weights[e], "covers": list(items)}
                         for e, items in covers.items()]}


@dataclass
class SelfTestReport:
    passed: bool
    trials: int
    violation: str | None = None
    warnings: list[str] = field(default_factory=list)


def oracle_self_test(oracle: Oracle, ids: Iterable, trials: int = 100,
                     seed: int = 0, tol: float = 1e-9) -> SelfTestReport:
    """Spot-check normalization, monotonicity and submodularity on random chains."""
    ids = list(ids)
    report = SelfTestReport(passed=True, trials=trials)
    if trials < 1:
        report.warnings.append("no trials run; pass is vacuous")
        return report
    f_empty = oracle.evaluate(set())
    if abs(f_empty) > tol:
        report.passed = False
        report.violation = f"normalization: f(empty) = {f_empty}"
        return report
    if not ids:
        report.warnings.append("empty ground set; only normalization checked")
        return report
    rng = random.Random(seed)
    for trial in range(trials):
        v = rng.choice(ids)
        rest = [e for e in ids if e != v]
        B = {e for e in rest if rng.random() < 0.5}
        A = {e for e in B if rng.random() < 0.5}
        fA, fB = oracle.evaluate(A), oracle.evaluate(B)
        if fA > fB + tol:
            report.passed = False
            report.violation = (f"monotonicity (trial {trial}): f(A)={fA} > f(B)={fB} "
                                f"for A={sorted(map(str, A))}, B={sorted(map(str, B))}")
            return report
        gA = oracle.evaluate(A | {v}) - fA
        gB = oracle.evaluate(B | {v}) - fB
        if min(gA, gB) < -tol:
            report.passed = False
            report.violation = (f"monotonicity (trial {trial}): adding {v!r} lowers f "
                                f"(gains {gA}, {gB})")
            return report
        if gA < gB - tol:
            report.passed = False
            report.violation = (f"submodularity (trial {trial}): gain of {v!r} is {gA} on A "
                                f"but {gB} on superset B")
            return report
    return report

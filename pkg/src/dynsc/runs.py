"""Parallel threshold runs and solution retrieval.

Run ``i`` uses threshold (1+eps)**i.  An element only matters to runs in a
bounded index window around its own density, so each update touches
O(log_{1+eps}(n rho / eps)) runs, and runs are created the first time an
update lands on them.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from dynsc.errors import InvalidArgument, InvariantViolation
from dynsc.levels import (DEFAULT_T_OVERRIDE, InstanceState, ceil_log, floor_log,
                          instance_rng, power)
from dynsc.oracle import Problem


@dataclass
class PoolConfig:
    eps: float = 0.1
    eps_del: float | None = None
    n_max: int | None = None
    rho: float | None = None
    seed: int = 0
    # None selects the simulation count from the theory formula
    t_override: int | None = DEFAULT_T_OVERRIDE
    # a run qualifies when f(G_T) >= (1 - qualify_slack * eps) f(V)
    qualify_slack: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps <= 0.1:
            raise InvalidArgument(f"eps must lie in (0, 0.1], got {self.eps}")
        if self.eps_del is None:
            self.eps_del = self.eps / 20
        if not 0 < self.eps_del < self.eps / 16:
            raise InvalidArgument(
                f"eps_del must lie in (0, eps/16) = (0, {self.eps / 16}), got {self.eps_del}")
        if self.t_override is not None and self.t_override < 1:
            raise InvalidArgument("t_override must be >= 1")
        if self.seed < 0:
            raise InvalidArgument("seed must be non-negative")


@dataclass
class Retrieval:
    solution: frozenset
    value: float
    cost: float
    index: int | None
    f_V: float


class RunPool:
    def __init__(self, problem: Problem, config: PoolConfig | None = None):
        self.problem = problem
        self.config = config or PoolConfig()
        if self.config.n_max is None:
            self.config.n_max = len(problem.ground)
        if self.config.rho is None:
            self.config.rho = problem.ground.rho
        if self.config.rho < problem.ground.rho:
            raise InvalidArgument(
                f"configured rho={self.config.rho} is below the ground set's {problem.ground.rho}")
        if self.config.t_override is None:
            warnings.warn("theory-mode simulation counts are very large; expect slow updates",
                          RuntimeWarning, stacklevel=2)
        self.instances: dict[int, InstanceState] = {}
        self.V: set = set()
        self._singleton_density: dict = {}
        self._f_V: float | None = None

    # -- routing --------------------------------------------------------------

    def singleton_density(self, e) -> float:
        d = self._singleton_density.get(e)
        if d is None:
            d = self.problem.value({e}) / self.problem.ground.weight(e)
            self._singleton_density[e] = d
        return d

    def index_interval(self, e) -> tuple[int, int] | None:
        """Integers i with log(d(e) eps / (n rho (1+eps))) <= i <= log d(e); None if empty."""
        d = self.singleton_density(e)
        if d <= 0:
            return None
        eps, n, rho = self.config.eps, self.config.n_max, self.config.rho
        lo = ceil_log(d * eps / (n * rho * (1 + eps)), eps)
        hi = floor_log(d, eps)
        return (lo, hi) if lo <= hi else None

    def _new_instance(self, i: int) -> InstanceState:
        c = self.config
        return InstanceState(self.problem, power(c.eps, i), c.eps, c.eps_del, c.n_max,
                             c.t_override, instance_rng(c.seed, i), index=i)

    def insert(self, e) -> None:
        self.problem.ground.weight(e)
        if e in self.V:
            raise InvalidArgument(f"{e!r} is already live")
        if len(self._singleton_density) >= self.config.n_max and e not in self._singleton_density:
            raise InvalidArgument(f"more than n_max={self.config.n_max} distinct elements")
        self.V.add(e)
        self._f_V = None
        span = self.index_interval(e)
        if span is None:
            return
        for i in range(span[0], span[1] + 1):
            inst = self.instances.get(i)
            if inst is None:
                inst = self._new_instance(i)
                inst.init(self._routed_to(i))
                self.instances[i] = inst
            else:
                inst.insert(e)

    def delete(self, e) -> None:
        if e not in self.V:
            raise InvalidArgument(f"{e!r} is not live")
        self.V.remove(e)
        self._f_V = None
        span = self.index_interval(e)
        if span is None:
            return
        for i in range(span[0], span[1] + 1):
            inst = self.instances.get(i)
            if inst is None:
                raise InvariantViolation(f"run {i} missing for live element {e!r}")
            inst.delete(e)

    def global_update(self, op: str, e) -> None:
        if op in ("insert", "+"):
            self.insert(e)
        elif op in ("delete", "-"):
            self.delete(e)
        else:
            raise InvalidArgument(f"unknown update kind {op!r}")

    def _routed_to(self, i: int) -> set:
        out = set()
        for u in self.V:
            span = self.index_interval(u)
            if span is not None and span[0] <= i <= span[1]:
                out.add(u)
        return out

    # -- retrieval ------------------------------------------------------------

    def f_V(self) -> float:
        """f of the live set, evaluated at most once between updates."""
        if self._f_V is None:
            self._f_V = self.problem.value(self.V) if self.V else 0.0
        return self._f_V

    def retrieval_interval(self) -> tuple[int, int] | None:
        f_V = self.f_V()
        if not self.V or f_V <= 0:
            return None
        eps, rho = self.config.eps, self.config.rho
        return (floor_log(f_V * eps / (len(self.V) * rho), eps), floor_log(f_V * eps, eps))

    def qualifying(self) -> list[int]:
        span = self.retrieval_interval()
        if span is None:
            return []
        f_V = self.f_V()
        bar = (1 - self.config.qualify_slack * self.config.eps) * f_V
        tol = 1e-9 * max(1.0, f_V)
        return [i for i in sorted(self.instances)
                if span[0] <= i <= span[1] and self.instances[i].top_value() >= bar - tol]

    def solution_retrieval(self) -> Retrieval:
        f_V = self.f_V()
        if not self.V or f_V <= 0:
            return Retrieval(frozenset(), 0.0, 0.0, None, f_V)
        cands = self.qualifying()
        if not cands:
            raise InvariantViolation(
                f"no run in {self.retrieval_interval()} reaches (1-eps) f(V) = "
                f"{(1 - self.config.eps) * f_V}")
        best = min(cands, key=lambda i: (self.instances[i].solution_cost(), i))
        S, f_S, cost = self.instances[best].current_solution()
        return Retrieval(S, f_S, cost, best, f_V)

    @property
    def reconstructions(self) -> int:
        return sum(inst.reconstructions for inst in self.instances.values())

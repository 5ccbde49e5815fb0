"""Single-threshold leveled structure for dynamic weighted submodular cover.

One :class:`InstanceState` keeps, for a fixed threshold ``tau``, a stack of
levels.  Level ``i`` holds the candidates ``L`` that still have marginal
density at least ``tau`` against the previous level's solution, the
extended set ``L_ext`` (``L`` plus insertions buffered since the level was
last rebuilt), the bucket ``B`` chosen for sampling, the ordered sample
``S`` and the cumulative solution ``G``.  Deletions are recorded lazily in
``D``; the emitted solution is ``G_T minus D``.

Level 0 is the base: ``L_ext`` there is every element routed to this
instance and ``G`` is empty.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from dynsc.errors import InvalidArgument, InvariantViolation, OracleContractError
from dynsc.oracle import GAIN_TOL, Problem

DEFAULT_T_OVERRIDE = 200


def power(eps: float, j: int) -> float:
    """(1+eps)**j.  Every threshold in the package goes through here."""
    return (1.0 + eps) ** j


def level_threshold(tau: float, eps: float, j: int) -> float:
    return power(eps, j) * tau


def floor_log(x: float, eps: float, scale: float = 1.0) -> int:
    """Largest integer j with scale * (1+eps)**j <= x  (x, scale > 0).

    The float estimate is corrected against the same products used for
    comparisons elsewhere, so ``x >= level_threshold(scale, eps, j)`` holds
    exactly for the returned j.
    """
    j = math.floor(math.log(x / scale) / math.log1p(eps))
    while scale * power(eps, j + 1) <= x:
        j += 1
    while scale * power(eps, j) > x:
        j -= 1
    return j


@functools.lru_cache(maxsize=65536)
def weight_index(w: float, eps: float) -> int:
    return floor_log(w, eps)


def ceil_log(x: float, eps: float) -> int:
    """Smallest integer j with (1+eps)**j >= x  (x > 0)."""
    j = math.ceil(math.log(x) / math.log1p(eps))
    while power(eps, j - 1) >= x:
        j -= 1
    while power(eps, j) < x:
        j += 1
    return j


def theory_trials(n: int, eps: float) -> int:
    """Simulation count ceil(4 eps^-2 ln(n^12 / eps)), natural log."""
    return math.ceil(4.0 / eps ** 2 * (12.0 * math.log(n) - math.log(eps)))


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for run ``index`` under ``seed``."""
    zigzag = 2 * index if index >= 0 else -2 * index - 1
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, zigzag])))


# -- stateless building blocks ------------------------------------------------

def densities(problem: Problem, L, G, f_G: float) -> dict:
    """d(e|G) for each e in L, one oracle call per element, ground order."""
    ground = problem.ground
    return {e: problem.gain(e, G, f_G) / ground.weight(e) for e in ground.ordered(L)}


def filter_set(problem: Problem, L, G, f_G: float, tau: float) -> set:
    """{e in L : d(e|G) >= tau}."""
    return {e for e, d in densities(problem, L, G, f_G).items() if d >= tau}


def bucketize(problem: Problem, L, G_prev, f_Gprev: float, tau: float, eps: float,
              dens: dict | None = None) -> dict[tuple[int, int], list]:
    """Group L by (density index j, weight index k)."""
    if dens is None:
        dens = densities(problem, L, G_prev, f_Gprev)
    ground = problem.ground
    buckets: dict[tuple[int, int], list] = {}
    for e in ground.ordered(L):
        d = dens[e]
        if not d >= tau:
            raise InvariantViolation(
                f"element {e!r} has density {d} below tau={tau} during bucketing")
        j = floor_log(d, eps, scale=tau)
        k = weight_index(ground.weight(e), eps)
        buckets.setdefault((j, k), []).append(e)
    return buckets


def select_largest_bucket(buckets: dict, tau: float, eps: float):
    """Largest bucket, ties to the lexicographically smallest (j, k).

    Returns ``(B, tau_level, (j, k))`` with tau_level = (1+eps)**j * tau.
    """
    nonempty = [(key, b) for key, b in buckets.items() if b]
    if not nonempty:
        raise InvalidArgument("select_largest_bucket needs a nonempty bucket")
    key, B = min(nonempty, key=lambda kb: (-len(kb[1]), kb[0]))
    return list(B), level_threshold(tau, eps, key[0]), key


def draw_sample(B: list, m: int, rng: np.random.Generator) -> list:
    """Uniform ordered sample of size m without replacement (partial Fisher-Yates)."""
    pool = list(B)
    for a in range(m):
        b = int(rng.integers(a, len(pool)))
        pool[a], pool[b] = pool[b], pool[a]
    return pool[:m]


def apply_and_revert(problem: Problem, Lp, Gp, f_Gp: float, taup: float,
                     rng: np.random.Generator) -> np.ndarray:
    """One random sequential pass over Lp on a scratch copy of Gp.

    ``X[r] = 1`` iff the r-th element of the permutation cleared ``taup`` at
    its turn; the trailing entry is always 0.
    """
    order = problem.ground.ordered(Lp)
    X = np.zeros(len(order) + 1, dtype=np.int8)
    G = set(Gp)
    f_G = f_Gp
    for pos, idx in enumerate(rng.permutation(len(order))):
        e = order[idx]
        gain = problem.gain(e, G, f_G)
        if gain / problem.ground.weight(e) >= taup:
            X[pos] = 1
            G.add(e)
            f_G += gain
    return X


def calc_sample_size(problem: Problem, Lp, Gp, f_Gp: float, taup: float, eps: float,
                     n: int, rng: np.random.Generator,
                     t_override: int | None = None) -> int:
    """Largest prefix length whose simulated acceptance rate stays >= 1 - eps.

    Runs ``t`` random passes (as :func:`apply_and_revert`) in lockstep by
    position and returns m' - 1, where m' is the first position whose mean
    acceptance drops below 1 - eps.  Positions after m' are never simulated
    and repeated scratch sets are evaluated once per call; neither changes
    the returned value.
    """
    if t_override is not None:
        if t_override < 1:
            raise InvalidArgument(f"t_override must be >= 1, got {t_override}")
        t = int(t_override)
    else:
        t = theory_trials(n, eps)
    order = problem.ground.ordered(Lp)
    k = len(order)
    if k == 0:
        return 0
    if k == 1:
        # every pass sees the same single element: X = (x, 0) with x fixed
        return int(problem.density(order[0], Gp, f_Gp) >= taup)
    weights = [problem.ground.weight(e) for e in order]
    perms = rng.permuted(np.tile(np.arange(k, dtype=np.int64), (t, 1)), axis=1)
    base = frozenset(Gp)
    # trials sharing a scratch set behave identically, so each position is
    # resolved once per distinct (scratch set, next element) pair
    state_mask = [0]
    state_f = [f_Gp]
    state_of_mask = {0: 0}
    value_of_mask = {0: f_Gp}
    sid = np.zeros(t, dtype=np.int64)
    for pos in range(k):
        pairs, inverse = np.unique(sid * k + perms[:, pos], return_inverse=True)
        passed = np.zeros(len(pairs), dtype=bool)
        nxt = np.empty(len(pairs), dtype=np.int64)
        for u, pair in enumerate(pairs.tolist()):
            s, idx = divmod(pair, k)
            new_mask = state_mask[s] | (1 << idx)
            ns = state_of_mask.get(new_mask)
            f_new = value_of_mask.get(new_mask)
            if f_new is None:
                members = [order[b] for b in range(k) if new_mask >> b & 1]
                f_new = problem.oracle.evaluate(base.union(members))
                value_of_mask[new_mask] = f_new
            gain = f_new - state_f[s]
            if gain < -GAIN_TOL * max(1.0, abs(state_f[s])):
                raise OracleContractError("negative marginal gain during simulation")
            if max(gain, 0.0) / weights[idx] >= taup:
                if ns is None:
                    ns = len(state_mask)
                    state_mask.append(new_mask)
                    state_f.append(f_new)
                    state_of_mask[new_mask] = ns
                passed[u] = True
                nxt[u] = ns
            else:
                nxt[u] = s
        hits = int(passed[inverse].sum())
        if hits / t < 1.0 - eps:
            return pos
        sid = nxt[inverse]
    return k


# -- the leveled structure ----------------------------------------------------

@dataclass
class Level:
    L: set
    L_ext: set
    G: frozenset = frozenset()
    f_G: float = 0.0
    B: frozenset = frozenset()
    S: tuple = ()
    tau_level: float = 0.0
    m: int = 0
    bucket_idx: tuple[int, int] | None = None
    # (element, marginal gain, marginal density) at the moment it joined G
    additions: list = field(default_factory=list)


@dataclass
class Addition:
    element: object
    level: int
    gain: float
    density: float
    tau_level: float


class InstanceState:
    """The leveled structure for one threshold ``tau``."""

    def __init__(self, problem: Problem, tau: float, eps: float,
                 eps_del: float | None = None, n: int | None = None,
                 t_override: int | None = DEFAULT_T_OVERRIDE,
                 rng: np.random.Generator | None = None, index: int | None = None):
        if tau <= 0:
            raise InvalidArgument("tau must be positive")
        self.problem = problem
        self.tau = tau
        self.eps = eps
        self.eps_del = eps / 20 if eps_del is None else eps_del
        self.n = n if n is not None else max(len(problem.ground), 2)
        self.t_override = t_override
        self.rng = rng if rng is not None else instance_rng(0, index or 0)
        self.index = index
        self.levels: list[Level] = [Level(set(), set()), Level(set(), set())]
        self.D: set = set()
        self.reconstructions = 0
        self.version = 0

    @property
    def T(self) -> int:
        return len(self.levels) - 2

    def live(self) -> set:
        return self.levels[0].L_ext - self.D

    @property
    def addition_log(self) -> list[Addition]:
        return [Addition(e, i, g, d, lvl.tau_level)
                for i, lvl in enumerate(self.levels[1:self.T + 1], start=1)
                for e, g, d in lvl.additions]

    def top_value(self) -> float:
        """f(G_T), cached; no oracle call."""
        return self.levels[self.T].f_G

    def top_solution(self) -> frozenset:
        return self.levels[self.T].G

    def init(self, V) -> None:
        V = set(V)
        self.D = set()
        self.levels = [Level(L=set(V), L_ext=set(V))]
        dens = densities(self.problem, V, frozenset(), 0.0)
        L1 = {e for e, d in dens.items() if d >= self.tau}
        self.levels.append(Level(L=L1, L_ext=set(L1)))
        self._rebuild_from(1, {e: dens[e] for e in L1})

    def reconstruct(self, i: int) -> None:
        if not 1 <= i <= self.T + 1:
            raise InvalidArgument(f"reconstruct({i}) outside [1, T+1={self.T + 1}]")
        self._rebuild_from(i, None)

    def _rebuild_from(self, i: int, dens: dict | None) -> None:
        self.reconstructions += 1
        self.version += 1
        problem, ground, tau, eps = self.problem, self.problem.ground, self.tau, self.eps
        del self.levels[i + 1:]
        L = self.levels[i].L_ext - self.D
        if dens is not None:
            dens = {e: d for e, d in dens.items() if e in L}
        if i == 1:
            # nothing at level >= 1 references a deleted element after this
            base = self.levels[0]
            base.L_ext -= self.D
            base.L = set(base.L_ext)
            self.D.clear()
        self.levels[i] = Level(L=L, L_ext=set(L))
        while self.levels[i].L:
            prev, lvl = self.levels[i - 1], self.levels[i]
            if dens is None:
                dens = densities(problem, lvl.L, prev.G, prev.f_G)
            buckets = bucketize(problem, lvl.L, prev.G, prev.f_G, tau, eps, dens)
            B, tau_i, idx = select_largest_bucket(buckets, tau, eps)
            m = calc_sample_size(problem, B, prev.G, prev.f_G, tau_i, eps, self.n,
                                 self.rng, self.t_override)
            if m < 1:
                raise InvariantViolation(f"sample size 0 at level {i} of tau={tau}")
            S = draw_sample(B, m, self.rng)
            G, f_G = set(prev.G), prev.f_G
            for e in S:
                gain = problem.gain(e, G, f_G)
                d = gain / ground.weight(e)
                if d >= tau_i:
                    G.add(e)
                    f_G += gain
                    lvl.additions.append((e, gain, d))
            lvl.B, lvl.S, lvl.tau_level, lvl.m, lvl.bucket_idx = \
                frozenset(B), tuple(S), tau_i, m, idx
            lvl.G, lvl.f_G = frozenset(G), f_G
            dens = {e: d for e, d in densities(problem, lvl.L, lvl.G, f_G).items()
                    if d >= tau}
            nxt = set(dens)
            self.levels.append(Level(L=nxt, L_ext=set(nxt)))
            i += 1

    def insert(self, e) -> None:
        if e in self.levels[0].L_ext and e not in self.D:
            raise InvalidArgument(f"{e!r} is already live in this instance")
        self.problem.ground.weight(e)
        self.version += 1
        self.D.discard(e)
        self.levels[0].L_ext.add(e)
        T = self.T
        for i in range(1, T + 2):
            prev, lvl = self.levels[i - 1], self.levels[i]
            if self.problem.density(e, prev.G, prev.f_G) < self.tau:
                break
            lvl.L_ext.add(e)
            if i == T + 1 or 2 * len(lvl.L_ext) >= 3 * len(lvl.L):
                self.reconstruct(i)
                break

    def delete(self, e) -> None:
        if e not in self.levels[0].L_ext or e in self.D:
            raise InvalidArgument(f"{e!r} is not live in this instance")
        self.version += 1
        self.D.add(e)
        for i in range(1, self.T + 1):
            B = self.levels[i].B
            # levels whose bucket misses e were below the trigger before this call
            if e in B and len(self.D & B) >= self.eps_del * len(B):
                self.reconstruct(i)
                break

    def current_solution(self) -> tuple[frozenset, float, float]:
        """(G_T minus D, its f-value, its cost); one oracle call if nonempty."""
        S = frozenset(self.top_solution() - self.D)
        if not S:
            return S, 0.0, 0.0
        return S, self.problem.value(S), self.problem.cost(S)

    def solution_cost(self) -> float:
        return self.problem.cost(self.top_solution() - self.D)

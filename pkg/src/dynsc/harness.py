"""Update streams, experiment replay, metrics and report files."""
from __future__ import annotations

import csv
import dataclasses
import json
import random
from dataclasses import dataclass
from pathlib import Path

from dynsc.baselines import brute_force_opt, greedy_cover
from dynsc.errors import InvalidArgument
from dynsc.oracle import CountingOracle, Problem, coverage_problem, uncounted
from dynsc.runs import PoolConfig, RunPool
from dynsc.verify import audit_cost_chain, check_level_invariants

STREAM_KINDS = ("sliding_window", "random_churn", "insert_only")
BRUTE_FORCE_SUMMARY_LIMIT = 16


@dataclass(frozen=True)
class UpdateOp:
    kind: str  # "insert" | "delete"
    id: object
    t: int


# -- streams ------------------------------------------------------------------

def validate_stream(ops, live=()) -> None:
    live = set(live)
    for op in ops:
        if op.kind == "insert":
            if op.id in live:
                raise InvalidArgument(f"op {op.t}: insert of live element {op.id!r}")
            live.add(op.id)
        elif op.kind == "delete":
            if op.id not in live:
                raise InvalidArgument(f"op {op.t}: delete of non-live element {op.id!r}")
            live.remove(op.id)
        else:
            raise InvalidArgument(f"op {op.t}: unknown kind {op.kind!r}")


def gen_stream(kind: str, ids, ops: int | None = None, seed: int = 0,
               window: int | None = None, churn: float = 0.5) -> list[UpdateOp]:
    """Generate a valid update stream over ``ids``.

    sliding_window: insert ids in order (cycling), evicting the oldest live
    id once ``window`` are live.  random_churn: delete a random live id with
    probability ``churn``, otherwise insert a random non-live id.
    insert_only: every id once, in a seeded random order.
    """
    ids = list(ids)
    n = len(ids)
    rng = random.Random(seed)
    out: list[UpdateOp] = []

    def emit(k, e):
        out.append(UpdateOp(k, e, len(out)))

    if kind == "insert_only":
        order = ids[:]
        rng.shuffle(order)
        for e in order[:ops] if ops is not None else order:
            emit("insert", e)
    elif kind == "sliding_window":
        window = window if window is not None else max(1, n // 4)
        if not 1 <= window <= n:
            raise InvalidArgument(f"window must lie in [1, n={n}], got {window}")
        total = ops if ops is not None else 2 * n
        live: list = []
        pos = 0
        while len(out) < total:
            if len(live) == window:
                emit("delete", live.pop(0))
                continue
            e = ids[pos % n]
            pos += 1
            emit("insert", e)
            live.append(e)
    elif kind == "random_churn":
        if not 0 < churn < 1:
            raise InvalidArgument(f"churn probability must lie in (0, 1), got {churn}")
        if n == 0:
            raise InvalidArgument("random_churn needs at least one id")
        total = ops if ops is not None else 2 * n
        live_list: list = []
        dead = ids[:]
        for _ in range(total):
            if live_list and (not dead or rng.random() < churn):
                e = live_list.pop(rng.randrange(len(live_list)))
                dead.append(e)
                emit("delete", e)
            else:
                e = dead.pop(rng.randrange(len(dead)))
                live_list.append(e)
                emit("insert", e)
    else:
        raise InvalidArgument(f"unknown stream kind {kind!r}; expected one of {STREAM_KINDS}")
    validate_stream(out)
    return out


def format_stream(ops) -> str:
    return "".join(f"{'+' if op.kind == 'insert' else '-'} {op.id}\n" for op in ops)


def parse_stream(text: str) -> list[UpdateOp]:
    ops = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        sign, _, eid = line.partition(" ")
        eid = eid.strip()
        if sign not in "+-" or len(sign) != 1 or not eid:
            raise InvalidArgument(f"stream line {lineno}: expected '+ <id>' or '- <id>'")
        ops.append(UpdateOp("insert" if sign == "+" else "delete", eid, len(ops)))
    validate_stream(ops)
    return ops


def read_stream(path) -> list[UpdateOp]:
    return parse_stream(Path(path).read_text())


def write_stream(ops, path) -> None:
    Path(path).write_text(format_stream(ops))


# -- instances ----------------------------------------------------------------

def random_coverage(n: int, universe: int, rho: float = 4.0, seed: int = 0,
                    max_cover: int = 8, prefix: str = "v") -> tuple[dict, dict]:
    """Random weighted set system: ids -> covered items, ids -> weights in [1, rho]."""
    rng = random.Random(seed)
    covers = {f"{prefix}{i}": sorted(rng.sample(range(universe), rng.randint(1, min(max_cover, universe))))
              for i in range(n)}
    weights = {e: round(rng.uniform(1.0, rho), 6) for e in covers}
    return covers, weights


def random_coverage_problem(n: int, universe: int, rho: float = 4.0, seed: int = 0,
                            max_cover: int = 8) -> Problem:
    covers, weights = random_coverage(n, universe, rho, seed, max_cover)
    return coverage_problem(covers, weights, rho)


# -- experiments --------------------------------------------------------------

@dataclass
class ExperimentConfig:
    eps: float = 0.1
    eps_del: float | None = None
    n_max: int | None = None
    seed: int = 0
    t_override: int | None = 200
    check: bool = False
    retrieve_every: int = 1
    qualify_slack: float = 1.0

    def pool_config(self) -> PoolConfig:
        return PoolConfig(eps=self.eps, eps_del=self.eps_del, n_max=self.n_max,
                          seed=self.seed, t_override=self.t_override,
                          qualify_slack=self.qualify_slack)


@dataclass
class MetricsRecord:
    t: int
    op: str
    id: object
    f_V: float | None
    chosen_index: int | None
    solution_size: int | None
    solution_cost: float | None
    f_solution: float | None
    coverage_ratio: float | None
    chosen_top_value: float | None
    oracle_calls_cumulative: int
    reconstructions_triggered: int


@dataclass
class Summary:
    updates: int
    oracle_calls: int
    amortized_oracle_calls: float
    mean_coverage_ratio: float | None
    worst_coverage_ratio: float | None
    final_solution_cost: float | None
    final_cost_vs_greedy: float | None
    final_cost_vs_opt: float | None
    instances: int
    reconstructions: int
    invariant_violations: int
    violation_details: list


def _check_pool(pool: RunPool, seen: dict, t: int) -> list[str]:
    problems = []
    for i in sorted(pool.instances):
        inst = pool.instances[i]
        if seen.get(i) == inst.version:
            continue  # untouched since its last check
        seen[i] = inst.version
        rep = check_level_invariants(inst)
        for v in rep.violations:
            problems.append(f"t={t} run={i} {v.invariant}@{v.level}: {v.detail}")
        chain = audit_cost_chain(inst)
        if not chain.passed:
            problems.append(f"t={t} run={i} cost-chain: {chain.detail}")
    return problems


def run_experiment(problem: Problem, ops, config: ExperimentConfig | None = None,
                   pool_out: list | None = None) -> tuple[list[MetricsRecord], Summary]:
    """Replay ``ops`` through a fresh RunPool, recording metrics after each op."""
    config = config or ExperimentConfig()
    if config.retrieve_every < 1:
        raise InvalidArgument("retrieve_every must be >= 1")
    ops = list(ops)
    validate_stream(ops)
    distinct = {op.id for op in ops}
    if config.n_max is not None and config.n_max < len(distinct):
        raise InvalidArgument(f"n_max={config.n_max} is below the stream's "
                              f"{len(distinct)} distinct ids")
    counter = CountingOracle(uncounted(problem.oracle))
    counted = problem.with_oracle(counter)
    pool = RunPool(counted, config.pool_config())
    if pool_out is not None:
        pool_out.append(pool)
    records: list[MetricsRecord] = []
    violations: list[str] = []
    seen: dict = {}
    ratios = []
    for t, op in enumerate(ops):
        before = pool.reconstructions
        pool.global_update(op.kind, op.id)
        fields = dict(f_V=None, chosen_index=None, solution_size=None, solution_cost=None,
                      f_solution=None, coverage_ratio=None, chosen_top_value=None)
        if (t + 1) % config.retrieve_every == 0 or t == len(ops) - 1:
            r = pool.solution_retrieval()
            ratio = r.value / r.f_V if r.f_V > 0 else 1.0
            ratios.append(ratio)
            fields.update(f_V=r.f_V, chosen_index=r.index, solution_size=len(r.solution),
                          solution_cost=r.cost, f_solution=r.value, coverage_ratio=ratio,
                          chosen_top_value=(pool.instances[r.index].top_value()
                                            if r.index is not None else None))
        records.append(MetricsRecord(t=t, op=op.kind, id=op.id, **fields,
                                     oracle_calls_cumulative=counter.calls,
                                     reconstructions_triggered=pool.reconstructions - before))
        if config.check:
            violations.extend(_check_pool(pool, seen, t))
    return records, _summarize(problem, pool, records, ratios, counter.calls, violations)


def _summarize(problem, pool, records, ratios, calls, violations) -> Summary:
    quiet = problem.with_oracle(uncounted(problem.oracle))
    final_cost = vs_greedy = vs_opt = None
    if records and records[-1].solution_cost is not None:
        final_cost = records[-1].solution_cost
        if pool.V and pool.f_V() > 0:
            g_cost = quiet.cost(greedy_cover(quiet, pool.V))
            vs_greedy = final_cost / g_cost if g_cost > 0 else None
            if len(pool.V) <= BRUTE_FORCE_SUMMARY_LIMIT:
                _, opt = brute_force_opt(quiet, pool.V)
                vs_opt = final_cost / opt if opt > 0 else None
    n = len(records)
    return Summary(
        updates=n,
        oracle_calls=calls,
        amortized_oracle_calls=calls / n if n else 0.0,
        mean_coverage_ratio=sum(ratios) / len(ratios) if ratios else None,
        worst_coverage_ratio=min(ratios) if ratios else None,
        final_solution_cost=final_cost,
        final_cost_vs_greedy=vs_greedy,
        final_cost_vs_opt=vs_opt,
        instances=len(pool.instances),
        reconstructions=pool.reconstructions,
        invariant_violations=len(violations),
        violation_details=violations[:50],
    )


# -- reports ------------------------------------------------------------------

def record_dict(rec: MetricsRecord) -> dict:
    return dataclasses.asdict(rec)


def to_jsonl(records) -> str:
    return "".join(json.dumps(record_dict(rec)) + "\n" for rec in records)


def emit_report(records, fmt: str, path) -> None:
    path = Path(path)
    fields = [f.name for f in dataclasses.fields(MetricsRecord)]
    try:
        if fmt == "jsonl":
            path.write_text(to_jsonl(records))
        elif fmt == "csv":
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(fields)
                for rec in records:
                    d = record_dict(rec)
                    writer.writerow(["" if d[k] is None else d[k] for k in fields])
        else:
            raise InvalidArgument(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def read_jsonl(path) -> list[MetricsRecord]:
    with Path(path).open() as fh:
        return [MetricsRecord(**json.loads(line)) for line in fh if line.strip()]

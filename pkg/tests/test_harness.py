import csv
import json
import shutil
import subprocess

import pytest

from dynsc import cli, harness
from dynsc.errors import InvalidArgument
from dynsc.harness import (ExperimentConfig, UpdateOp, emit_report,
                           format_stream, gen_stream, parse_stream, random_coverage_problem,
                           read_jsonl, run_experiment, validate_stream, write_stream)
from dynsc.oracle import problem_to_json
from dynsc.verify import InvariantReport


def kinds(ops):
    return [("+" if op.kind == "insert" else "-") + str(op.id) for op in ops]


def test_insert_only_counts():
    ops = gen_stream("insert_only", list("abcde"), seed=1)
    assert len(ops) == 5 and {op.id for op in ops} == set("abcde")
    assert all(op.kind == "insert" for op in ops)


def test_sliding_window_semantics():
    assert kinds(gen_stream("sliding_window", list("abc"), ops=5, window=2)) == \
        ["+a", "+b", "-a", "+c", "-b"]


def test_random_churn_reproducible():
    a = format_stream(gen_stream("random_churn", [f"v{i}" for i in range(20)], 200, seed=3))
    b = format_stream(gen_stream("random_churn", [f"v{i}" for i in range(20)], 200, seed=3))
    assert a == b


def test_stream_param_checks():
    with pytest.raises(InvalidArgument):
        gen_stream("sliding_window", list("abc"), window=4)
    with pytest.raises(InvalidArgument):
        gen_stream("random_churn", list("abc"), churn=1.0)
    with pytest.raises(InvalidArgument):
        gen_stream("zigzag", list("abc"))


def test_stream_validation():
    with pytest.raises(InvalidArgument):
        validate_stream([UpdateOp("delete", "a", 0)])
    with pytest.raises(InvalidArgument):
        validate_stream([UpdateOp("insert", "a", 0), UpdateOp("insert", "a", 1)])
    with pytest.raises(InvalidArgument):
        parse_stream("* a\n")
    assert kinds(parse_stream("# header\n+ a\n\n- a\n")) == ["+a", "-a"]


def test_stream_file_round_trip(tmp_path):
    ops = gen_stream("random_churn", [f"v{i}" for i in range(10)], 50, seed=2)
    write_stream(ops, tmp_path / "s.txt")
    assert parse_stream((tmp_path / "s.txt").read_text()) == ops


def three_set_problem():
    from dynsc.oracle import coverage_problem
    return coverage_problem({"v1": ["a", "b", "c"], "v2": ["a", "b"], "v3": ["c"]},
                            {"v1": 3, "v2": 1, "v3": 1}, rho=3)


def test_empty_stream_summary():
    records, summary = run_experiment(three_set_problem(), [], ExperimentConfig())
    assert records == [] and summary.updates == 0 and summary.oracle_calls == 0


def test_three_set_insert_only_coverage():
    p = three_set_problem()
    ops = gen_stream("insert_only", p.ground.ids, seed=0)
    records, summary = run_experiment(p, ops, ExperimentConfig(eps=0.05, check=True))
    assert records[-1].coverage_ratio >= 1 - 3 * 0.05
    assert summary.invariant_violations == 0


def test_records_monotone_and_bounded():
    p = random_coverage_problem(12, 20, 2.0, seed=0)
    ops = gen_stream("random_churn", p.ground.ids, 60, seed=0)
    records, summary = run_experiment(p, ops, ExperimentConfig(retrieve_every=3))
    calls = [r.oracle_calls_cumulative for r in records]
    assert calls == sorted(calls) and calls[-1] == summary.oracle_calls
    ratios = [r.coverage_ratio for r in records if r.coverage_ratio is not None]
    assert all(0 <= c <= 1 + 1e-9 for c in ratios)
    assert records[-1].coverage_ratio is not None
    assert len(ratios) == len([t for t in range(60) if (t + 1) % 3 == 0 or t == 59])


def test_n_max_below_stream_rejected():
    p = three_set_problem()
    with pytest.raises(InvalidArgument):
        run_experiment(p, gen_stream("insert_only", p.ground.ids), ExperimentConfig(n_max=2))


def jsonl_bytes(p, ops, tmp_path, name):
    records, _ = run_experiment(p, ops, ExperimentConfig(seed=3))
    emit_report(records, "jsonl", tmp_path / name)
    return (tmp_path / name).read_bytes()


def test_same_seed_identical_jsonl(tmp_path):
    p = random_coverage_problem(10, 16, 2.0, seed=5)
    ops = gen_stream("random_churn", p.ground.ids, 40, seed=5)
    assert jsonl_bytes(p, ops, tmp_path, "a") == jsonl_bytes(p, ops, tmp_path, "b")


def test_report_formats(tmp_path):
    p = random_coverage_problem(8, 12, 2.0, seed=1)
    records, _ = run_experiment(p, gen_stream("random_churn", p.ground.ids, 20, seed=1))
    emit_report(records, "jsonl", tmp_path / "r.jsonl")
    assert read_jsonl(tmp_path / "r.jsonl") == records
    emit_report(records, "csv", tmp_path / "r.csv")
    rows = list(csv.reader((tmp_path / "r.csv").open()))
    assert len(rows) == len(records) + 1 and len({len(r) for r in rows}) == 1
    emit_report([], "jsonl", tmp_path / "e.jsonl")
    assert (tmp_path / "e.jsonl").read_text() == ""
    emit_report([], "csv", tmp_path / "e.csv")
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 1
    with pytest.raises(InvalidArgument):
        emit_report(records, "xml", tmp_path / "r.xml")


# -- CLI ------------------------------------------------------------------------

@pytest.fixture
def files(tmp_path):
    p_json = problem_to_json({"v1": ["a", "b", "c"], "v2": ["a", "b"], "v3": ["c"]},
                             {"v1": 3, "v2": 1, "v3": 1}, 3)
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps(p_json))
    stream = tmp_path / "s.txt"
    stream.write_text("+ v1\n+ v2\n+ v3\n- v1\n")
    return tmp_path, inst, stream


def test_cli_run_and_verify(files, capsys):
    tmp, inst, stream = files
    out = tmp / "m.jsonl"
    assert cli.main(["run", "--instance", str(inst), "--stream", str(stream),
                     "--epsilon", "0.1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    capsys.readouterr()
    assert cli.main(["verify", "--instance", str(inst), "--stream", str(stream),
                     "--epsilon", "0.1"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["invariant_violations"] == 0


def test_cli_csv_by_suffix(files):
    tmp, inst, stream = files
    out = tmp / "m.csv"
    assert cli.main(["run", "--instance", str(inst), "--stream", str(stream),
                     "--epsilon", "0.1", "--out", str(out)]) == 0
    assert out.read_text().startswith("t,op,id,")


def test_cli_usage_errors(files, capsys):
    tmp, inst, stream = files
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--instance", str(inst)])
    assert exc.value.code == 1
    assert cli.main(["run", "--instance", str(inst), "--stream", str(stream),
                     "--epsilon", "0.5", "--out", str(tmp / "x")]) == 1
    bad = tmp / "bad.txt"
    bad.write_text("- v1\n")
    assert cli.main(["verify", "--instance", str(inst), "--stream", str(bad),
                     "--epsilon", "0.1"]) == 1
    assert cli.main(["gen-stream", "--kind", "insert_only", "--out", str(tmp / "g")]) == 1
    assert cli.main(["baseline", "--instance", str(inst), "--algo", "static"]) == 1


def test_cli_io_error(files):
    tmp, inst, stream = files
    assert cli.main(["verify", "--instance", str(tmp / "missing.json"), "--stream",
                     str(stream), "--epsilon", "0.1"]) == 3
    (tmp / "broken.json").write_text("{")
    assert cli.main(["baseline", "--instance", str(tmp / "broken.json"), "--algo", "greedy"]) == 3


def test_cli_violation_exit_code(files, monkeypatch):
    tmp, inst, stream = files

    def always_broken(inst_state):
        rep = InvariantReport(inst_state.T)
        rep.add("filter", 1, "forced")
        return rep

    monkeypatch.setattr(harness, "check_level_invariants", always_broken)
    assert cli.main(["verify", "--instance", str(inst), "--stream", str(stream),
                     "--epsilon", "0.1"]) == 2


def test_cli_generators_and_baseline(tmp_path, capsys):
    inst = tmp_path / "g.json"
    assert cli.main(["gen-instance", "--n", "8", "--universe", "12", "--out", str(inst)]) == 0
    s = tmp_path / "s.txt"
    assert cli.main(["gen-stream", "--kind", "sliding_window", "--instance", str(inst),
                     "--window", "3", "--ops", "12", "--out", str(s)]) == 0
    assert len(parse_stream(s.read_text())) == 12
    capsys.readouterr()
    assert cli.main(["baseline", "--instance", str(inst), "--algo", "brute"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == out["f_V"]


@pytest.mark.skipif(shutil.which("dynsc") is None, reason="console script not installed")
def test_console_script(files):
    tmp, inst, stream = files
    proc = subprocess.run(["dynsc", "verify", "--instance", str(inst), "--stream", str(stream),
                           "--epsilon", "0.1"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["updates"] == 4

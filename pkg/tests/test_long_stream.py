import pytest

from dynsc.harness import ExperimentConfig, gen_stream, random_coverage_problem, run_experiment


@pytest.mark.slow
def test_invariants_hold_over_ten_thousand_updates():
    p = random_coverage_problem(8, 16, 2.0, seed=3, max_cover=5)
    ops = gen_stream("random_churn", p.ground.ids, 10_000, seed=3)
    _, summary = run_experiment(p, ops, ExperimentConfig(eps=0.1, eps_del=0.005, check=True))
    assert summary.updates == 10_000
    assert summary.invariant_violations == 0, summary.violation_details[:5]

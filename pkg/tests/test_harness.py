import math

import numpy as np
import pytest

from marginlearn.core import LearnParams, margin_error
from marginlearn.harness import (
    CSV_COLUMNS,
    SyntheticSpec,
    acceptance_rate,
    comparison_table,
    gen_synthetic,
    required_samples,
    run_generalization_check,
    run_learner,
    split,
    sweep,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(3, 10, 0.2, noise_rate=0.5)
    with pytest.raises(ValueError):
        SyntheticSpec(3, 10, 1.0)
    with pytest.raises(ValueError):
        SyntheticSpec(0, 10, 0.2)


def test_realizable_data_has_margin():
    data = gen_synthetic(SyntheticSpec(5, 500, 0.2, 0.0, 1))
    D, w = data.dataset, data.planted.w
    assert margin_error(D, w, 0.2 * (1 - 1e-12)) == 0.0
    assert np.allclose(np.linalg.norm(D.X, axis=1), 1.0)
    assert np.linalg.norm(w) == pytest.approx(1.0)


def test_margin_error_equals_flip_fraction():
    for seed in range(5):
        data = gen_synthetic(SyntheticSpec(4, 2000, 0.25, 0.2, seed))
        frac = data.flipped.size / data.dataset.size
        assert margin_error(data.dataset, data.planted.w, 0.25 * (1 - 1e-12)) == pytest.approx(frac, abs=1e-12)


def test_flip_fraction_concentrates():
    data = gen_synthetic(SyntheticSpec(3, 10_000, 0.1, 0.1, 7))
    assert abs(data.flipped.size / 10_000 - 0.1) <= 0.01


def test_dim_one():
    data = gen_synthetic(SyntheticSpec(1, 50, 0.5, 0.0, 2))
    assert set(np.unique(data.dataset.X[:, 0])) <= {1.0, -1.0}


def test_acceptance_rate_matches_monte_carlo():
    rng = np.random.default_rng(0)
    for dim, gamma in ((2, 0.5), (5, 0.3), (20, 0.2)):
        Z = rng.standard_normal((200_000, dim))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        emp = np.mean(np.abs(Z[:, 0]) >= gamma)
        assert acceptance_rate(dim, gamma) == pytest.approx(emp, abs=0.005)


def test_gamma_too_large_for_dim_rejected():
    with pytest.raises(ValueError, match="accept about"):
        gen_synthetic(SyntheticSpec(400, 10, 0.5))


def test_generator_determinism():
    a = gen_synthetic(SyntheticSpec(6, 300, 0.2, 0.1, 9))
    b = gen_synthetic(SyntheticSpec(6, 300, 0.2, 0.1, 9))
    assert np.array_equal(a.dataset.X, b.dataset.X) and np.array_equal(a.dataset.y, b.dataset.y)
    assert np.array_equal(a.planted.w, b.planted.w)


def test_split_is_disjoint_and_uniform():
    data = gen_synthetic(SyntheticSpec(3, 100, 0.2, 0.0, 3))
    train, test = split(data.dataset, 60)
    assert train.size == 60 and test.size == 40
    rows = {tuple(x) for x in train.X}
    assert not rows & {tuple(x) for x in test.X}
    assert math.fsum(train.probs) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        split(data.dataset, 100)


def test_required_samples():
    assert required_samples(0.15, 0.3, 0.1) == math.ceil(100 * math.log(10) / (0.15**2 * 0.3**2))


def test_generalization_realizable_staged():
    p = LearnParams(gamma=0.3, epsilon=0.15, seed=0)
    m = required_samples(0.15, 0.3, 0.1)
    res = run_generalization_check(SyntheticSpec(2, 1, 0.3, 0.0, 100), "staged", m, 5000, 20, p)
    assert res.status == "pass"
    assert res.passed >= 18


def test_generalization_insufficient_m():
    p = LearnParams(gamma=0.3, epsilon=0.15)
    res = run_generalization_check(SyntheticSpec(2, 1, 0.3, 0.1, 0), "staged", 10, 100, 3, p)
    assert res.status == "insufficient m"
    assert res.trials == []


def test_generalization_noisy_staged_near_noise_rate():
    p = LearnParams(gamma=0.3, epsilon=0.15, delta_slack=1.0, seed=3)
    m = required_samples(0.15, 0.3, 0.1)
    m_test = 20_000
    res = run_generalization_check(SyntheticSpec(2, 1, 0.3, 0.1, 200), "staged", m, m_test, 5, p)
    assert res.status == "pass"
    slack = 3 * math.sqrt(0.25 / m_test)
    good = sum(t["test_01"] <= (1 + 1.0) * 0.1 + 0.15 + slack for t in res.trials)
    assert good >= math.ceil(0.9 * len(res.trials))


def _cfg(**kw):
    cfg = {
        "learners": ["staged"],
        "specs": [{"dim": 3, "gamma": 0.3, "eta": 0.0, "m_train": 300, "m_test": 300}],
        "master_seed": 4,
        "params": {"epsilon": 0.1, "delta": 1.0},
    }
    cfg.update(kw)
    return cfg


def test_single_cell_matches_direct_run():
    rep = sweep(_cfg(), timing=False)
    row = rep.rows[0]
    seed = rep.seeds[0]
    data = gen_synthetic(SyntheticSpec(3, 600, 0.3, 0.0, seed))
    train, test = split(data.dataset, 300)
    direct = run_learner("staged", train, LearnParams(gamma=0.3, epsilon=0.1, delta_slack=1.0, seed=seed))
    assert row["train_01"] == direct.train_zero_one
    assert row["train_margin_g2"] == direct.train_margin_errors["gamma/2"]
    assert row["candidates"] == direct.candidates_examined


def test_sweep_csv_columns_and_determinism():
    cfg = _cfg(learners=["perceptron", "staged", "basic"], opt_oracle=True)
    a, b = sweep(cfg, timing=False), sweep(cfg, timing=False)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    header = a.to_csv().splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    assert all(r["opt_oracle"] is not None for r in a.rows)


def test_sweep_workers_do_not_change_results():
    cfg = _cfg(learners=["perceptron", "staged"],
               specs=[{"dim": 2, "gamma": 0.3, "eta": 0.1, "m_train": 200, "m_test": 200}] * 3)
    assert sweep(cfg, timing=False).to_csv() == sweep(cfg, timing=False, workers=3).to_csv()


def test_sweep_records_cell_failure_and_continues():
    cfg = _cfg(specs=[{"dim": 400, "gamma": 0.5, "eta": 0.0, "m_train": 10, "m_test": 10},
                      {"dim": 2, "gamma": 0.3, "eta": 0.0, "m_train": 50, "m_test": 50}])
    rep = sweep(cfg, timing=False)
    assert rep.rows[0]["status"].startswith("error: ValueError")
    assert rep.rows[1]["status"] == "ok"


def test_sweep_budget_exhaustion_recorded():
    # noisy labels rule out the zero-error early exit
    cfg = _cfg(learners=["basic"], params={"epsilon": 0.1, "budget_cap": 5},
               specs=[{"dim": 3, "gamma": 0.3, "eta": 0.2, "m_train": 300, "m_test": 300}])
    assert sweep(cfg, timing=False).rows[0]["status"] == "budget_exhausted"


def test_sweep_rejects_unknown_learner():
    with pytest.raises(ValueError, match="unknown learner"):
        sweep(_cfg(learners=["svm"]))


def test_staged_beats_perceptron_on_noisy_cells():
    specs = [{"dim": d, "gamma": 0.3, "eta": 0.1, "m_train": 1000, "m_test": 4000} for d in (2,) * 5 + (3,) * 5]
    rep = sweep(_cfg(learners=["perceptron", "staged"], specs=specs, master_seed=11), timing=False)
    table = comparison_table(rep)
    assert len(table) == 10
    wins = sum(r["staged"] <= r["perceptron"] for r in table)
    assert wins >= 8

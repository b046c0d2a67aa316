import json
import subprocess
import sys

import numpy as np
import pytest

from marginlearn import cli
from marginlearn.core import LearnParams, margin_error, read_dataset, write_dataset, zero_one_error
from marginlearn.harness import SyntheticSpec, gen_synthetic, split
from marginlearn.learners import learn_staged
from marginlearn.reductions import CspInstance, write_csp


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def separable(tmp_path):
    path = tmp_path / "s.jsonl"
    assert run("gen", "synthetic", "--dim", 3, "--n", 40, "--gamma", 0.5, "--seed", 2, "--out", path) == 0
    return path


def test_gen_synthetic_writes_dataset_and_planted_sidecar(tmp_path):
    out = tmp_path / "d.jsonl"
    code = run("gen", "synthetic", "--dim", 20, "--n", 2000, "--gamma", 0.2, "--eta", 0.05, "--seed", 7, "--out", out)
    assert code == 0
    D = read_dataset(out)
    side = json.loads((tmp_path / "d.json").read_text())
    assert D.size == 2000 and D.dim == 20
    assert side["config"]["seed"] == 7 and side["config"]["eta"] == 0.05
    w = np.array(side["planted"])
    assert margin_error(D, w, 0.2 * (1 - 1e-12)) == pytest.approx(len(side["flipped"]) / 2000, abs=1e-12)
    assert D.meta["config"]["dim"] == 20


def test_gen_clique_sidecar_and_certificate_eval(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text("5 3\n1 2\n2 3\n1 3\n")
    out = tmp_path / "c.jsonl"
    assert run("gen", "clique", "--graph", g, "--k", 3, "--out", out) == 0
    side = json.loads((tmp_path / "c.json").read_text())
    assert side["kappa"] == pytest.approx(2 * 0.01 / 125, rel=1e-15)
    assert side["exact_params"]["kappa"] == "1/6250"
    gam = side["gamma"] * (1 - 1e-9)
    capsys.readouterr()
    assert run("eval", "--data", out, "--hypothesis", tmp_path / "c.json", "--gammas", repr(gam)) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["margin_errors"][repr(gam)] == pytest.approx(side["kappa"], rel=1e-12)


def test_gen_clique_with_supplied_clique(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("4 3\n1 2\n2 3\n1 3\n")
    assert run("gen", "clique", "--graph", g, "--k", 3, "--clique", "1,2,3", "--out", tmp_path / "c.jsonl") == 0
    assert json.loads((tmp_path / "c.json").read_text())["flags"]["clique"] == [0, 1, 2]
    assert run("gen", "clique", "--graph", g, "--k", 3, "--clique", "1,2,4", "--out", tmp_path / "x.jsonl") == 2


def test_gen_csp_sidecar(tmp_path):
    inst = tmp_path / "c.json"
    write_csp(inst, CspInstance(["a", "b"], [0, 1], [(("a", "b"), [(0, 1), (1, 1)])]))
    assert run("gen", "csp", "--instance", inst, "--nu", 0.1, "--out", tmp_path / "r.jsonl") == 0
    side = json.loads((tmp_path / "r.json").read_text())
    for key in ("gamma", "kappa", "epsilon", "alpha"):
        assert side[key] > 0
    assert side["epsilon"] == pytest.approx(side["kappa"] * side["alpha"])


def test_irregular_csp_is_usage_error(tmp_path):
    inst = tmp_path / "c.json"
    write_csp(inst, CspInstance([0, 1, 2], [0, 1], [((0, 1), [(0, 0)]), ((1, 2), [(0, 0)])]))
    assert run("gen", "csp", "--instance", inst, "--nu", 0.1, "--out", tmp_path / "r.jsonl") == 2
    assert not (tmp_path / "r.jsonl").exists()


def test_invalid_flags_exit_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("gen", "synthetic", "--dim", 3)
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run("learn", "--algo", "svm", "--data", "x", "--gamma", 0.1)
    assert exc.value.code == 2
    assert run("gen", "synthetic", "--dim", 3, "--n", 5, "--gamma", 1.5, "--out", tmp_path / "x.jsonl") == 2


def test_learn_staged_report(separable, tmp_path):
    out = tmp_path / "r.json"
    code = run("learn", "--algo", "staged", "--data", separable, "--gamma", 0.3, "--delta", 1.0,
               "--eps", 0.1, "--seed", 1, "--out", out)
    assert code == 0
    rep = json.loads(out.read_text())
    assert "train_margin_g2" in rep
    assert rep["train_margin_g2"] == rep["train_margin_errors"]["gamma/2"]
    assert rep["config"]["delta_slack"] == 1.0 and rep["config"]["budget_cap"] == 10**7


def test_learn_basic_separable(separable, capsys):
    assert run("learn", "--algo", "basic", "--data", separable, "--gamma", 0.5, "--eps", 0.4) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["train_margin_g4"] == 0.0


def test_learn_chow_echoes_guess_depth(separable, capsys):
    assert run("learn", "--algo", "chow", "--alpha", 2, "--gamma", 0.25, "--data", separable) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["details"]["guess_depth"] == 3


def test_learn_perceptron(separable, capsys):
    assert run("learn", "--algo", "perceptron", "--data", separable, "--gamma", 0.5) == 0
    assert json.loads(capsys.readouterr().out)["train_zero_one"] == 0.0


def test_learn_budget_exhaustion_exit_3(tmp_path):
    data = gen_synthetic(SyntheticSpec(3, 200, 0.2, 0.2, 1)).dataset
    path = tmp_path / "n.jsonl"
    write_dataset(path, data)
    out = tmp_path / "r.json"
    assert run("learn", "--algo", "basic", "--data", path, "--gamma", 0.2, "--budget-cap", 10, "--out", out) == 3
    rep = json.loads(out.read_text())
    assert rep["status"] == "budget_exhausted"
    assert rep["candidates_examined"] >= 10


def test_learn_no_timing_is_byte_stable(separable, tmp_path):
    # the echoed config includes --out, so both runs write to the same path
    out = tmp_path / "r.json"
    runs = []
    for _ in range(2):
        run("learn", "--algo", "staged", "--data", separable, "--gamma", 0.3, "--no-timing", "--out", out)
        runs.append(out.read_bytes())
    a, b = runs
    assert a == b
    assert b"wallclock_ms" not in a


def test_eval_zero_vector_predicts_plus_one(separable, capsys):
    D = read_dataset(separable)
    assert run("eval", "--data", separable, "--hypothesis", "[0, 0, 0]", "--gammas", "0.1") == 0
    body = json.loads(capsys.readouterr().out)
    assert body["zero_one"] == pytest.approx(float(D.probs[D.y == -1].sum()))
    assert body["margin_errors"]["0.1"] == 1.0


def test_eval_matches_in_process(separable, capsys):
    D = read_dataset(separable)
    w = [0.3, -0.2, 0.9]
    run("eval", "--data", separable, "--hypothesis", json.dumps(w), "--gammas", "0.05,0.2,0.45")
    body = json.loads(capsys.readouterr().out)
    assert body["zero_one"] == zero_one_error(D, w)
    for g in (0.05, 0.2, 0.45):
        assert body["margin_errors"][repr(g)] == margin_error(D, w, g)


def test_eval_dimension_mismatch_exit_2(separable):
    assert run("eval", "--data", separable, "--hypothesis", "[1, 2]") == 2
    assert run("eval", "--data", separable, "--hypothesis", "not json") == 2


def _bench_cfg(tmp_path, **kw):
    cfg = {"learners": ["staged"], "master_seed": 3, "params": {"epsilon": 0.1, "delta": 1.0},
           "specs": [{"dim": 3, "gamma": 0.3, "eta": 0.1, "m_train": 200, "m_test": 200}]}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_bench_one_cell_matches_learn(tmp_path, capsys):
    cfg = _bench_cfg(tmp_path)
    assert run("bench", "--config", cfg, "--out", tmp_path / "sw", "--no-timing") == 0
    row = json.loads((tmp_path / "sw.json").read_text())["rows"][0]
    data = gen_synthetic(SyntheticSpec(3, 400, 0.3, 0.1, row["seed"])).dataset
    train, _ = split(data, 200)
    write_dataset(tmp_path / "train.jsonl", train)
    capsys.readouterr()
    run("learn", "--algo", "staged", "--data", tmp_path / "train.jsonl", "--gamma", 0.3,
        "--eps", 0.1, "--delta", 1.0, "--seed", row["seed"])
    rep = json.loads(capsys.readouterr().out)
    assert rep["train_zero_one"] == row["train_01"]
    assert rep["train_margin_g2"] == row["train_margin_g2"]
    assert rep["candidates_examined"] == row["candidates"]


def test_bench_rerun_is_byte_identical(tmp_path):
    cfg = _bench_cfg(tmp_path, learners=["perceptron", "staged"])
    run("bench", "--config", cfg, "--out", tmp_path / "a", "--no-timing")
    run("bench", "--config", cfg, "--out", tmp_path / "b", "--no-timing")
    for ext in (".csv", ".json"):
        assert (tmp_path / f"a{ext}").read_bytes() == (tmp_path / f"b{ext}").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header.startswith("learner,dim,gamma,eps,delta,alpha,eta,m_train,m_test,train_01,test_01")


def test_bench_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("bench", "--config", bad, "--out", tmp_path / "x") == 2
    assert run("bench", "--config", _bench_cfg(tmp_path, learners=["svm"]), "--out", tmp_path / "x") == 2


def test_interrupt_leaves_no_output(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise KeyboardInterrupt
    monkeypatch.setattr(cli, "sweep", boom)
    assert run("bench", "--config", _bench_cfg(tmp_path), "--out", tmp_path / "x") == 130
    assert sorted(p.name for p in tmp_path.iterdir()) == ["cfg.json"]


def test_no_temp_files_left(separable, tmp_path):
    run("learn", "--algo", "staged", "--data", separable, "--gamma", 0.3, "--out", tmp_path / "r.json")
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_help_lists_flags_with_units():
    out = subprocess.run([sys.executable, "-m", "marginlearn", "learn", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for flag in ("--gamma", "--epsilon", "--delta-slack", "--alpha", "--tau", "--seed", "--budget-cap"):
        assert flag in out
    assert "candidate hypotheses" in out

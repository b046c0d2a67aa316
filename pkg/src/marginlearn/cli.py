"""Command-line entry point: ``marginlearn {gen,learn,eval,bench}``.

Exit codes: 0 success, 2 usage or validation error, 3 learner budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core import (
    DatasetError,
    DimensionError,
    LearnParams,
    atomic_write_text,
    margin_error,
    read_dataset,
    write_dataset,
    zero_one_error,
)
from .harness import SyntheticSpec, gen_synthetic, sweep
from .learners import BudgetExceeded, learn_alpha, learn_basic, learn_chow, learn_staged, perceptron
from .reductions import read_csp, read_graph, reduce_clique, reduce_csp

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3


class UsageError(Exception):
    pass


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _sidecar_path(out: str, given: str | None) -> Path:
    if given:
        return Path(given)
    p = Path(out)
    return p.with_suffix(".sidecar.json") if p.suffix == ".json" else p.with_suffix(".json")


def _config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# ---------------------------------------------------------------- gen

def cmd_gen(args: argparse.Namespace) -> int:
    side = _sidecar_path(args.out, args.sidecar)
    config = _config(args)
    if args.source == "synthetic":
        spec = SyntheticSpec(args.dim, args.n, args.gamma, args.eta, args.seed)
        data = gen_synthetic(spec)
        write_dataset(args.out, data.dataset, {"config": config})
        atomic_write_text(side, _dump({
            "config": config,
            "planted": [float(v) for v in data.planted.w],
            "flipped": [int(i) for i in data.flipped],
            "flip_fraction": data.flipped.size / data.dataset.size,
        }))
        return EXIT_OK
    if args.source == "clique":
        G = read_graph(args.graph)
        clique = None if args.clique is None else [int(v) - 1 for v in args.clique.split(",")]
        R = reduce_clique(G, args.k, clique)
    else:
        L = read_csp(args.instance)
        R = reduce_csp(L, args.nu)
    write_dataset(args.out, R.dataset, {"config": config, "kind": R.kind, "families": R.families()})
    atomic_write_text(side, _dump(dict(R.sidecar(), config=config)))
    return EXIT_OK


# ---------------------------------------------------------------- learn

def _params(args: argparse.Namespace) -> LearnParams:
    return LearnParams(gamma=args.gamma, epsilon=args.epsilon, delta_slack=args.delta_slack,
                       alpha=args.alpha, tau=args.tau, seed=args.seed, budget_cap=args.budget_cap)


def _run(args: argparse.Namespace, D, p: LearnParams):
    if args.algo == "basic":
        return learn_basic(D, p)
    if args.algo == "staged":
        return learn_staged(D, p, exhaustive=args.exhaustive)
    if args.algo == "chow":
        return learn_alpha(D, p, rounds=args.rounds) if args.jl else learn_chow(D, p, rounds=args.rounds)
    return perceptron(D, max_passes=args.max_passes, seed=args.seed, gamma=args.gamma)


def _learn_output(rep, args: argparse.Namespace) -> str:
    body = rep.to_dict(timing=not args.no_timing)
    prof = rep.train_margin_errors
    body.update(train_margin_g=prof["gamma"], train_margin_g2=prof["gamma/2"],
                train_margin_g4=prof["gamma/4"], train_margin_099g=prof["0.99gamma"],
                config=_config(args))
    return _dump(body)


def cmd_learn(args: argparse.Namespace) -> int:
    D = read_dataset(args.data)
    p = _params(args)
    try:
        rep = _run(args, D, p)
    except BudgetExceeded as exc:
        _emit(_learn_output(exc.report, args), args.out)
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    _emit(_learn_output(rep, args), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- eval

def _load_vector(spec: str) -> np.ndarray:
    path = Path(spec)
    text = path.read_text(encoding="utf-8") if path.exists() else spec
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--hypothesis is neither a JSON vector nor a readable file: {exc}") from None
    if isinstance(obj, dict):
        for key in ("hypothesis", "certificate", "planted", "w"):
            if obj.get(key) is not None:
                obj = obj[key]
                break
        else:
            raise UsageError("hypothesis file has no 'hypothesis', 'certificate', 'planted' or 'w' entry")
    if not isinstance(obj, list):
        raise UsageError("hypothesis must be a JSON list of numbers")
    return np.array(obj, dtype=float)


def cmd_eval(args: argparse.Namespace) -> int:
    D = read_dataset(args.data)
    w = _load_vector(args.hypothesis)
    gammas = [float(g) for g in args.gammas.split(",") if g.strip()] if args.gammas else []
    body = {
        "zero_one": zero_one_error(D, w),
        "margin_errors": {repr(g): margin_error(D, w, g) for g in gammas},
        "config": _config(args),
    }
    _emit(_dump(body), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- bench

def cmd_bench(args: argparse.Namespace) -> int:
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad sweep config: {exc}") from None
    if args.master_seed is not None:
        config["master_seed"] = args.master_seed
    rep = sweep(config, timing=not args.no_timing, workers=args.workers)
    out = Path(args.out)
    atomic_write_text(out.with_suffix(".csv"), rep.to_csv())
    atomic_write_text(out.with_suffix(".json"), rep.to_json())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _learn_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, required=True, help="margin gamma in (0, 1) (unitless, unit-ball data)")
    p.add_argument("--epsilon", "--eps", type=float, default=0.1, help="additive error epsilon in (0, 1) (default 0.1)")
    p.add_argument("--delta-slack", "--delta", type=float, default=1.0,
                   help="multiplicative slack delta > 0 (default 1.0; staged needs <= 1)")
    p.add_argument("--alpha", type=float, default=2.0, help="approximation factor alpha > 1 for chow (default 2.0)")
    p.add_argument("--tau", type=float, default=0.1, help="failure probability tau in (0, 1) (default 0.1)")
    p.add_argument("--seed", type=int, default=0, help="integer seed (default 0)")
    p.add_argument("--budget-cap", type=int, default=10**7,
                   help="maximum number of candidate hypotheses evaluated (default 10000000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marginlearn", description="Proper learners for margin halfspaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a dataset")
    gsub = gen.add_subparsers(dest="source", required=True)
    syn = gsub.add_parser("synthetic", help="margin-separated sphere data with label noise")
    syn.add_argument("--dim", type=int, required=True, help="dimension (count)")
    syn.add_argument("--n", type=int, required=True, help="number of samples (count)")
    syn.add_argument("--gamma", type=float, required=True, help="margin of the planted halfspace in (0, 1)")
    syn.add_argument("--eta", type=float, default=0.0, help="label flip probability in [0, 0.5) (default 0)")
    syn.add_argument("--seed", type=int, default=0, help="integer seed (default 0)")
    cl = gsub.add_parser("clique", help="dataset from a k-Clique instance")
    cl.add_argument("--graph", required=True, help="edge-list file: 'n m' header, then 1-indexed 'i j' lines")
    cl.add_argument("--k", type=int, required=True, help="clique size (count, 2 <= k <= n)")
    cl.add_argument("--clique", help="comma-separated 1-indexed vertices of a known k-clique (default: search)")
    cs = gsub.add_parser("csp", help="dataset from a regular k-CSP instance")
    cs.add_argument("--instance", required=True, help="CSP JSON file")
    cs.add_argument("--nu", type=float, required=True, help="soundness value threshold nu in (0, 1)")
    for p in (syn, cl, cs):
        p.add_argument("--out", required=True, help="output dataset path (JSON Lines)")
        p.add_argument("--sidecar", help="sidecar JSON path (default: --out with a .json suffix)")
        p.set_defaults(func=cmd_gen)

    learn = sub.add_parser("learn", help="run a learner on a dataset")
    learn.add_argument("--algo", required=True, choices=["basic", "staged", "chow", "perceptron"],
                       help="learner to run")
    learn.add_argument("--data", required=True, help="dataset path (JSON Lines)")
    _learn_flags(learn)
    learn.add_argument("--exhaustive", action="store_true", help="staged: enumerate every stage sequence")
    learn.add_argument("--jl", action="store_true", help="chow: project with a random sign matrix first")
    learn.add_argument("--rounds", type=int, default=200, help="chow: reconstruction rounds (count, default 200)")
    learn.add_argument("--max-passes", type=int, default=100,
                       help="perceptron: passes over the data (count, default 100)")
    learn.add_argument("--out", help="report path (default: stdout)")
    learn.add_argument("--no-timing", action="store_true", help="omit wall-clock fields for byte-stable output")
    learn.set_defaults(func=cmd_learn)

    ev = sub.add_parser("eval", help="evaluate a weight vector on a dataset")
    ev.add_argument("--data", required=True, help="dataset path (JSON Lines)")
    ev.add_argument("--hypothesis", required=True,
                    help="JSON vector, or a JSON file holding a list or a report/sidecar")
    ev.add_argument("--gammas", default="", help="comma-separated margins >= 0 (unitless)")
    ev.add_argument("--out", help="output path (default: stdout)")
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="run a learner x data sweep")
    bench.add_argument("--config", required=True, help="sweep config JSON")
    bench.add_argument("--out", required=True, help="output stem; writes <stem>.csv and <stem>.json")
    bench.add_argument("--master-seed", type=int, help="override the config's master seed")
    bench.add_argument("--workers", type=int, default=1, help="concurrent cells (count, default 1)")
    bench.add_argument("--no-timing", action="store_true", help="leave the ms column empty")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DimensionError, DatasetError, ValueError, OSError) as exc:
        print(f"marginlearn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("marginlearn: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())

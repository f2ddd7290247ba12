"""Command line entry point: verify, bench, epsilon-search, gen-suite."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import EPS_BUDGET, SUITE_TIMEOUT, epsilon_search, gen_suite, load_suite, run_suite, summarize
from .model import ModelFormatError, read_network
from .numerics import KERNEL
from .relax import Backend
from .search import STRATEGIES, SearchConfig, run
from .spec import SpecFormatError, read_problem

BACKENDS = {"backsub": Backend.BACKSUB, "lp": Backend.TRIANGLE_LP}


def _config(args) -> SearchConfig:
    return SearchConfig(
        lam=args.lam,
        t_max=args.tmax,
        alpha=args.alpha,
        timeout=args.timeout,
        seed=args.seed,
        backend=BACKENDS[args.backend],
    )


def _add_search_flags(p, timeout):
    p.add_argument("--timeout", type=float, default=timeout, help="seconds per run")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="depth weight in [0, 1]")
    p.add_argument("--alpha", type=float, default=0.99, help="temperature decay in (0, 1)")
    p.add_argument("--tmax", type=float, default=1.0, help="initial temperature")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=sorted(BACKENDS), default="lp")


def cmd_verify(args):
    problem = read_problem(args.model, args.spec)
    verdict = run(problem, args.strategy, _config(args))
    doc = json.dumps(verdict.to_json(), indent=1)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    print(doc)
    return 0


def cmd_bench(args):
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise SystemExit(f"unknown strategies: {', '.join(sorted(unknown))}")
    instances = load_suite(args.suite)
    rows = run_suite(instances, strategies, _config(args), args.repeats, args.csv, args.json_dir, args.workers)
    summary = summarize(rows)
    for s in strategies:
        print(f"{s}: solved {summary['solved'].get(s, 0)}/{summary['runs'].get(s, 0)} runs")
    for (a, b), med in sorted(summary["median_speedup"].items()):
        print(f"median time({a})/time({b}) = {med:.3f}")
    return 0


def _read_center(path):
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["center"]
    return np.asarray(data, dtype=np.float64)


def cmd_epsilon_search(args):
    net = read_network(args.model)
    center = _read_center(args.center)
    classes = args.classes if args.classes is not None else net.output_dim
    config = SearchConfig(timeout=args.timeout)
    res = epsilon_search(net, center, args.label, classes, args.lo, args.hi, args.budget, config=config)
    print(json.dumps({
        "epsilon": res.epsilon,
        "accepted": res.accepted,
        "tree_size": res.tree_size,
        "verdict": res.outcome,
        "history": [list(h) for h in res.history],
    }, indent=1))
    return 0 if res.accepted else 1


def cmd_gen_suite(args):
    records = gen_suite(args.seed, args.count, args.out, args.inputs, args.layers, args.relus)
    accepted = sum(bool(r.epsilon_accepted) for r in records)
    falsified = sum(r.ground_truth == "falsified" for r in records)
    print(f"wrote {len(records)} instances to {args.out} "
          f"({falsified} falsified, {accepted} with accepted epsilon)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="relubab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify one model/spec pair")
    p.add_argument("--model", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="bab")
    _add_search_flags(p, 1000.0)
    p.add_argument("--out", help="write the result JSON here as well")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run strategies over a generated suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--strategies", default=",".join(STRATEGIES), help="comma separated")
    p.add_argument("--repeats", type=int, default=1, help="seeds per SA run")
    _add_search_flags(p, SUITE_TIMEOUT)
    p.add_argument("--csv", default="results.csv")
    p.add_argument("--json-dir", help="also write one result JSON per run")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("epsilon-search", help="pick a radius whose baseline tree is non-trivial")
    p.add_argument("--model", required=True)
    p.add_argument("--center", required=True, help="JSON list, or object with a 'center' list")
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--budget", type=int, default=EPS_BUDGET)
    p.add_argument("--timeout", type=float, default=SUITE_TIMEOUT, help="seconds per probe")
    p.set_defaults(func=cmd_epsilon_search)

    p = sub.add_parser("gen-suite", help="generate random instances with oracle ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--inputs", type=int, default=6)
    p.add_argument("--layers", type=int, default=3, help="hidden layers")
    p.add_argument("--relus", type=int, default=12)
    p.set_defaults(func=cmd_gen_suite)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    logging.getLogger(__name__).debug("simplex kernel: %s", KERNEL)
    try:
        return args.func(args)
    except (ModelFormatError, SpecFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

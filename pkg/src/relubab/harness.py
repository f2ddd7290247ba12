"""Instance generation, epsilon selection and suite benchmarking."""
from __future__ import annotations

import csv
import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import Layer, Network, infer, write_network
from .oracle import MAX_RELUS, exact_verify
from .search import Outcome, SearchConfig, run, run_bab
from .spec import VerificationProblem, compile_robustness, read_problem

log = logging.getLogger(__name__)

CSV_HEADER = ["instance", "strategy", "seed", "verdict", "elapsed_s", "nodes_expanded", "tree_size"]
SUITE_TIMEOUT = 30.0
EPS_BUDGET = 10
# generated boxes are not clipped, so the label can flip beyond the unit cube
SUITE_EPS_RANGE = (0.0, 4.0)


@dataclass
class EpsilonResult:
    epsilon: float
    accepted: bool
    tree_size: int
    outcome: str
    history: list = field(default_factory=list)


def epsilon_search(net, center, label, num_classes, lo, hi, budget=EPS_BUDGET,
                   clip=None, config=None) -> EpsilonResult:
    """Binary search for a perturbation radius whose baseline tree has more than one node.

    A falsified probe means the radius is too large (shrink from above), a
    certified one that it is too small (grow from below).
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    config = config or SearchConfig(timeout=SUITE_TIMEOUT)
    l, u = float(lo), float(hi)
    history = []
    m, verdict = l, None
    for _ in range(budget):
        m = (l + u) / 2
        box, objectives = compile_robustness(center, m, clip, label, num_classes)
        verdict = run_bab(VerificationProblem(net, box, objectives), config)
        size = verdict.stats.tree_size
        history.append((m, verdict.outcome.value, size))
        if size > 1:
            return EpsilonResult(m, True, size, verdict.outcome.value, history)
        if verdict.outcome is Outcome.FALSIFIED:
            u = m
        elif verdict.outcome is Outcome.CERTIFIED:
            l = m
        else:
            break
    return EpsilonResult(m, False, verdict.stats.tree_size, verdict.outcome.value, history)


@dataclass
class InstanceRecord:
    instance_id: str
    model_path: str
    spec_path: str
    ground_truth: str | None = None
    oracle_min: float | None = None
    epsilon: float | None = None
    epsilon_accepted: bool | None = None

    def load(self) -> VerificationProblem:
        return read_problem(self.model_path, self.spec_path, {"instance": self.instance_id})


def random_network(rng, n_inputs, widths, n_outputs) -> Network:
    layers, d = [], n_inputs
    for w in widths:
        layers.append(Layer(rng.uniform(-1, 1, (w, d)), rng.uniform(-1, 1, w), "relu"))
        d = w
    layers.append(Layer(rng.uniform(-1, 1, (n_outputs, d)), rng.uniform(-1, 1, n_outputs), "none"))
    return Network(layers)


def _architecture(rng, inputs, layers, relus):
    # relus are spread evenly over the hidden layers; only the class count varies
    widths = [relus // layers + (1 if i < relus % layers else 0) for i in range(layers)]
    if min(widths) < 1:
        raise ValueError(f"{relus} ReLUs cannot fill {layers} hidden layers")
    return inputs, widths, int(rng.integers(2, 4))


def sample_instance(rng, inputs=6, layers=3, relus=12):
    """Random network of the given shape plus a centre in the unit cube labelled by it.

    ``layers`` counts hidden (ReLU) layers.
    """
    n_inputs, widths, n_out = _architecture(rng, inputs, layers, relus)
    net = random_network(rng, n_inputs, widths, n_out)
    center = rng.uniform(0, 1, n_inputs)
    label = int(np.argmax(infer(net, center)))
    return net, center, label


def gen_suite(seed, count, out_dir, inputs=6, layers=3, relus=12,
              eps_range=SUITE_EPS_RANGE, budget=EPS_BUDGET, config=None):
    """Write ``count`` instances under ``out_dir`` with oracle ground truth attached."""
    if relus > MAX_RELUS:
        raise ValueError(f"relus={relus} exceeds the oracle cap of {MAX_RELUS}")
    if inputs < 1 or layers < 1 or relus < layers:
        raise ValueError("need at least one input, one hidden layer and one ReLU per layer")
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(count):
        net, center, label = sample_instance(rng, inputs, layers, relus)
        eps = epsilon_search(net, center, label, net.output_dim, *eps_range, budget=budget, config=config)
        box, objectives = compile_robustness(center, eps.epsilon, None, label, net.output_dim)
        oracle = exact_verify(net, box, objectives)
        iid = f"inst_{i:04d}"
        d = out / iid
        d.mkdir(exist_ok=True)
        write_network(net, d / "model.json")
        spec = {
            "robustness": {
                "center": center.tolist(),
                "epsilon": eps.epsilon,
                "label": label,
                "num_classes": net.output_dim,
            }
        }
        (d / "spec.json").write_text(json.dumps(spec))
        rec = InstanceRecord(
            iid,
            str(d / "model.json"),
            str(d / "spec.json"),
            "certified" if oracle.certified else "falsified",
            oracle.min_value,
            eps.epsilon,
            eps.accepted,
        )
        (d / "meta.json").write_text(json.dumps(asdict(rec), indent=1))
        records.append(rec)
    (out / "suite.json").write_text(
        json.dumps({"seed": seed, "count": count, "instances": [r.instance_id for r in records]})
    )
    return records


def load_suite(suite_dir):
    suite_dir = Path(suite_dir)
    records = []
    for meta in sorted(suite_dir.glob("*/meta.json")):
        data = json.loads(meta.read_text())
        # paths are stored relative to wherever the suite was generated
        data["model_path"] = str(meta.parent / "model.json")
        data["spec_path"] = str(meta.parent / "spec.json")
        records.append(InstanceRecord(**data))
    if not records:
        raise FileNotFoundError(f"no instances found under {suite_dir}")
    return records


@dataclass
class RunRecord:
    instance_id: str
    strategy: str
    seed: int
    verdict: str
    elapsed_seconds: float
    nodes_expanded: int
    tree_size: int
    counterexample: list | None = None
    error: str | None = None

    def csv_row(self):
        return [
            self.instance_id,
            self.strategy,
            self.seed,
            self.verdict,
            # full repr so speed-up ratios recompute exactly from the file
            repr(float(self.elapsed_seconds)),
            self.nodes_expanded,
            self.tree_size,
        ]


def _run_one(job):
    record, strategy, config = job
    try:
        verdict = run(record.load(), strategy, config)
    except Exception as exc:  # one bad run must not abort the suite
        log.exception("run failed: %s/%s", record.instance_id, strategy)
        return RunRecord(record.instance_id, strategy, config.seed, "error", 0.0, 0, 0, error=repr(exc))
    s = verdict.stats
    cex = None if verdict.counterexample is None else verdict.counterexample.tolist()
    return RunRecord(record.instance_id, strategy, s.seed, verdict.outcome.value,
                     s.elapsed_seconds, s.nodes_expanded, s.tree_size, cex)


def _jobs(instances, strategies, config, repeats):
    for rec in instances:
        for strategy in strategies:
            seeds = range(config.seed, config.seed + repeats) if strategy == "sa" else [config.seed]
            for seed in seeds:
                cfg = SearchConfig(config.lam, config.t_max, config.alpha, config.timeout, seed, config.backend)
                yield rec, strategy, cfg


def run_suite(instances, strategies, config=None, repeats=1, csv_path=None, json_dir=None, workers=1):
    """Run every (instance, strategy, seed) job; SA gets ``repeats`` seeds, the others one."""
    config = config or SearchConfig(timeout=SUITE_TIMEOUT)
    jobs = list(_jobs(instances, strategies, config, repeats))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    if csv_path is not None:
        write_csv(rows, csv_path)
    if json_dir is not None:
        os.makedirs(json_dir, exist_ok=True)
        for r in rows:
            doc = {
                "verdict": r.verdict,
                "elapsed_s": r.elapsed_seconds,
                "nodes_expanded": r.nodes_expanded,
                "tree_size": r.tree_size,
                "seed": r.seed,
                "strategy": r.strategy,
                "counterexample": r.counterexample,
            }
            name = f"{r.instance_id}__{r.strategy}__{r.seed}.json"
            Path(json_dir, name).write_text(json.dumps(doc))
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_row())


def summarize(rows):
    """Solved run counts per strategy and pairwise speed-up ratios on jointly solved instances.

    ``speedups[(a, b)]`` maps instance -> elapsed(a) / elapsed(b), using the
    first seed's run for each strategy.
    """
    solved = {}
    runs = {}
    times = {}
    for r in rows:
        solved.setdefault(r.strategy, 0)
        runs[r.strategy] = runs.get(r.strategy, 0) + 1
        if r.verdict in (Outcome.CERTIFIED.value, Outcome.FALSIFIED.value):
            solved[r.strategy] += 1
            times.setdefault(r.strategy, {}).setdefault(r.instance_id, r.elapsed_seconds)
    speedups = {}
    names = sorted(times)
    for a in names:
        for b in names:
            if a == b:
                continue
            joint = sorted(set(times[a]) & set(times[b]))
            speedups[(a, b)] = {
                i: times[a][i] / times[b][i] for i in joint if times[b][i] > 0
            }
    medians = {k: statistics.median(v.values()) for k, v in speedups.items() if v}
    return {"solved": solved, "runs": runs, "speedups": speedups, "median_speedup": medians}

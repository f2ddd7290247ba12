import csv
import filecmp
import json

import pytest

from relubab import harness
from relubab.cli import main
from relubab.harness import (
    CSV_HEADER,
    InstanceRecord,
    epsilon_search,
    gen_suite,
    load_suite,
    run_suite,
    summarize,
)
from relubab.model import write_network
from relubab.search import Outcome, SearchConfig, SearchStats, Verdict

from conftest import tiny_net_a


def two_class_net():
    from relubab.model import Layer, Network

    return Network([Layer([[1.0]], [0.0]), Layer([[1.0], [-1.0]], [0.0, 0.0], "none")])


def scripted_bab(outcomes):
    """Replacement for the baseline run that replays ``(outcome, tree_size)`` pairs."""
    seen = []

    def fake(problem, config):
        outcome, size = outcomes[len(seen)]
        seen.append(float(problem.box.upper[0] - problem.box.lower[0]) / 2)
        stats = SearchStats("bab", 0, size - 1, size)
        return Verdict(outcome, None, stats)

    return fake, seen


def test_first_midpoint(monkeypatch):
    fake, seen = scripted_bab([(Outcome.CERTIFIED, 2)])
    monkeypatch.setattr(harness, "run_bab", fake)
    res = epsilon_search(two_class_net(), [0.5], 0, 2, 0.0, 16 / 255)
    assert res.accepted and res.epsilon == 8 / 255
    assert seen == pytest.approx([8 / 255])


def test_interval_updates(monkeypatch):
    fake, seen = scripted_bab([
        (Outcome.FALSIFIED, 1),  # too large: [0, 8]
        (Outcome.CERTIFIED, 1),  # too small: [4, 8]
        (Outcome.FALSIFIED, 3),  # accepted at 6
    ])
    monkeypatch.setattr(harness, "run_bab", fake)
    res = epsilon_search(two_class_net(), [0.5], 0, 2, 0.0, 16 / 255)
    assert [h[0] for h in res.history] == pytest.approx([8 / 255, 4 / 255, 6 / 255])
    assert res.accepted and res.tree_size == 3 and res.outcome == "falsified"


def test_budget_exhaustion_returns_last_midpoint(monkeypatch):
    fake, _ = scripted_bab([(Outcome.CERTIFIED, 1)] * 3)
    monkeypatch.setattr(harness, "run_bab", fake)
    res = epsilon_search(two_class_net(), [0.5], 0, 2, 0.0, 1.0, budget=3)
    assert not res.accepted and res.epsilon == 0.875


def test_epsilon_search_contracts():
    with pytest.raises(ValueError):
        epsilon_search(two_class_net(), [0.5], 0, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        epsilon_search(two_class_net(), [0.5], 0, 2, 0.0, 1.0, budget=0)


def _tree(path):
    return sorted(p.relative_to(path) for p in path.rglob("*") if p.is_file())


def test_gen_suite_is_deterministic(tmp_path):
    a = gen_suite(1, 3, tmp_path / "a")
    b = gen_suite(1, 3, tmp_path / "b")
    assert len(a) == len(b) == 3
    files = _tree(tmp_path / "a")
    assert files == _tree(tmp_path / "b")
    assert len([f for f in files if f.name == "model.json"]) == 3
    for f in files:
        if f.name == "meta.json":
            continue  # carries absolute paths
        assert filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False)
    assert [r.ground_truth for r in a] == [r.ground_truth for r in b]


def test_gen_suite_attaches_ground_truth(tmp_path):
    recs = gen_suite(2, 4, tmp_path)
    for r in recs:
        assert r.ground_truth in ("certified", "falsified")
        assert (r.ground_truth == "certified") == (r.oracle_min > 0)
        p = r.load()
        assert p.network.relu_count == 12 and p.network.input_dim == 6
    assert [r.instance_id for r in load_suite(tmp_path)] == [r.instance_id for r in recs]


def test_gen_suite_refuses_over_cap(tmp_path):
    with pytest.raises(ValueError):
        gen_suite(0, 1, tmp_path, relus=20)


def _one_instance(tmp_path):
    # tiny net A with a violated property: falsified at the root by every strategy
    d = tmp_path / "inst_0000"
    d.mkdir()
    write_network(tiny_net_a(), d / "model.json")
    spec = {"raw": {"box": {"lower": [-1.0], "upper": [1.0]}, "objectives": [{"coeffs": [-1.0], "offset": 0.3}]}}
    (d / "spec.json").write_text(json.dumps(spec))
    return InstanceRecord("inst_0000", str(d / "model.json"), str(d / "spec.json"))


def test_run_suite_rows_and_speedups(tmp_path):
    rec = _one_instance(tmp_path)
    rows = run_suite([rec], ["bab", "greedy"], csv_path=tmp_path / "out.csv", json_dir=tmp_path / "json")
    assert [r.verdict for r in rows] == ["falsified", "falsified"]
    with open(tmp_path / "out.csv") as fh:
        table = list(csv.reader(fh))
    assert table[0] == CSV_HEADER and len(table) == 3
    summary = summarize(rows)
    ratio = summary["speedups"][("bab", "greedy")]["inst_0000"]
    # recomputable from the CSV columns
    t = {row[1]: float(row[4]) for row in table[1:]}
    assert ratio == t["bab"] / t["greedy"]
    assert len(list((tmp_path / "json").glob("*.json"))) == 2


def test_sa_repeats_give_one_row_per_seed(tmp_path):
    rec = _one_instance(tmp_path)
    rows = run_suite([rec], ["bab", "greedy", "sa"], repeats=5)
    assert len(rows) == 1 + 1 + 5
    assert sorted(r.seed for r in rows if r.strategy == "sa") == [0, 1, 2, 3, 4]


def test_timeout_row(tmp_path):
    rec = _one_instance(tmp_path)
    rows = run_suite([rec], ["bab"], SearchConfig(timeout=0.0))
    assert rows[0].verdict == "timeout"
    assert rows[0].elapsed_seconds < 1.0


def test_failed_run_is_recorded(tmp_path):
    rec = InstanceRecord("missing", str(tmp_path / "nope.json"), str(tmp_path / "nope.json"))
    rows = run_suite([rec], ["bab", "greedy"])
    assert [r.verdict for r in rows] == ["error", "error"]


def test_cli_end_to_end(tmp_path, capsys):
    suite = tmp_path / "suite"
    assert main(["gen-suite", "--seed", "3", "--count", "2", "--out", str(suite)]) == 0
    inst = suite / "inst_0000"
    out = tmp_path / "r.json"
    assert main(["verify", "--model", str(inst / "model.json"), "--spec", str(inst / "spec.json"),
                 "--strategy", "greedy", "--backend", "backsub", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["strategy"] == "greedy" and doc["verdict"] in ("certified", "falsified")
    csv_path = tmp_path / "b.csv"
    assert main(["bench", "--suite", str(suite), "--strategies", "bab,sa", "--repeats", "2",
                 "--timeout", "30", "--csv", str(csv_path)]) == 0
    assert len(csv_path.read_text().strip().splitlines()) == 1 + 2 * (1 + 2)
    spec = json.loads((inst / "spec.json").read_text())["robustness"]
    (tmp_path / "c.json").write_text(json.dumps(spec["center"]))
    capsys.readouterr()
    code = main(["epsilon-search", "--model", str(inst / "model.json"), "--center", str(tmp_path / "c.json"),
                 "--label", str(spec["label"]), "--classes", str(spec["num_classes"]),
                 "--lo", "0", "--hi", "4", "--budget", "10"])
    res = json.loads(capsys.readouterr().out)
    assert code == (0 if res["accepted"] else 1)
    assert res["history"][0][0] == 2.0


def test_cli_reports_bad_input(tmp_path, capsys):
    (tmp_path / "m.json").write_text("{}")
    code = main(["verify", "--model", str(tmp_path / "m.json"), "--spec", str(tmp_path / "m.json")])
    assert code == 2
    assert "error" in capsys.readouterr().err

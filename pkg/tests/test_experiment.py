import dataclasses
import json

import numpy as np
import pytest

import oracles
from psafair.data import AnnealConfig
from psafair.datasets import SyntheticConfig, generate_synthetic
from psafair.errors import ConfigError, NotAPsaReport, ReportError, SplitMismatch
from psafair.experiment import (
    SCHEMA,
    ExperimentConfig,
    RunReport,
    cmd_compare,
    cmd_front,
    cmd_gen_synthetic,
    cmd_run,
    compare_rows,
    parse_config,
    read_table,
    recompute,
)

SMALL = AnnealConfig(n_chains=3, iters_per_temp=30, alpha=0.8, seed=5)
RAW = generate_synthetic(SyntheticConfig(n_samples=400, seed=2))

CONFIG = """
[experiment]
dataset = synthetic
optimizer = psa
split_seed = 3
output_dir = out
workers = 2

[anneal]
t_ba = 0.3
n_chains = 4
seed = 9
"""


def run(tmp_path, optimizer="psa", sub="a", **kw):
    extra = {"anneal": SMALL} if optimizer != "gd_logloss" else {}
    extra.update(kw)
    cfg = ExperimentConfig(optimizer=optimizer, output_dir=str(tmp_path / sub), **extra)
    return cmd_run(cfg, RAW)


def strip_clock(text):
    out = []
    for line in text.splitlines():
        obj = json.loads(line)
        obj.pop("wall_clock_s", None)
        out.append(obj)
    return out


def fake_report(path, objs, optimizer="psa", split_seed=0):
    header = {"record": "header", "schema": SCHEMA, "optimizer": optimizer, "split_seed": split_seed,
              "dataset": {"name": "fake"}}
    recs = []
    for i, (ba, us) in enumerate(objs):
        m = {"ba": ba, "us": us, "us_dev": abs(1 - us), "di": 1.0}
        recs.append({"record": "solution", "index": i, "chain_id": 0, "step": i, "theta": [0.0],
                     "train": m, "test": m, "di_test": 1.0})
    return RunReport(header, recs).write(path)


class TestConfig:
    def test_parse(self):
        cfg = parse_config(CONFIG)
        assert cfg.optimizer == "psa" and cfg.split_seed == 3 and cfg.workers == 2
        assert cfg.anneal == AnnealConfig(t_ba=0.3, n_chains=4, seed=9)
        assert cfg.sgd is None

    def test_defaults_fill_sub_config(self):
        assert ExperimentConfig(optimizer="gd_logloss").sgd is not None
        assert ExperimentConfig(optimizer="sa_ba").anneal == AnnealConfig()

    @pytest.mark.parametrize(
        "text",
        [
            CONFIG + "colour = red\n",
            CONFIG.replace("workers = 2", "workers = 2\nthreads = 4"),
            CONFIG + "[plot]\nwidth = 3\n",
            CONFIG.replace("optimizer = psa", "optimizer = gd_logloss"),
            CONFIG.replace("optimizer = psa", "optimizer = adam"),
            CONFIG.replace("split_seed = 3", "split_seed = three"),
            "[anneal]\nseed = 1\n",
        ],
    )
    def test_fail_closed(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_hash(self):
        a = parse_config(CONFIG)
        assert a.config_hash() == parse_config(CONFIG).config_hash()
        assert a.config_hash() != dataclasses.replace(a, split_seed=4).config_hash()
        assert ExperimentConfig.from_dict(json.loads(json.dumps(a.to_dict()))) == a

    def test_columns_for_csv(self):
        text = (
            "[experiment]\ndataset = data.csv\noptimizer = gd_logloss\n"
            "[column y]\nrole = target\npositive_value = 1\n"
            "[column g]\nrole = sensitive\nmajority_value = a\n[column x]\n"
        )
        cfg = parse_config(text)
        assert [c.csv_column for c in cfg.columns] == ["y", "g", "x"]


class TestRun:
    def test_gd_single_record(self, tmp_path):
        report, path = run(tmp_path, "gd_logloss")
        assert len(report.records) == 1
        assert RunReport.read(path).records == report.records

    def test_psa_records(self, tmp_path):
        report, _ = run(tmp_path)
        assert len(report.records) >= 1
        assert report.header["n_train"] == 280 and report.header["n_test"] == 120
        rec = report.records[0]
        assert rec["di_test"] == rec["test"]["di"]
        assert len(rec["theta"]) == 4

    def test_deterministic_with_workers(self, tmp_path):
        _, path = run(tmp_path, workers=2)
        first = path.read_text()
        run(tmp_path, workers=2)
        assert strip_clock(path.read_text()) == strip_clock(first)

    def test_metrics_recompute_exactly(self, tmp_path):
        for opt in ("psa", "sa_ba", "gd_logloss"):
            report, _ = run(tmp_path, opt, sub=opt)
            again = recompute(report, RAW)
            for rec, re in zip(report.records, again):
                assert rec["train"] == re["train"] and rec["test"] == re["test"]

    def test_bad_report(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text('{"record": "solution"}\n')
        with pytest.raises(ReportError):
            RunReport.read(p)


class TestFront:
    def test_single_solution(self, tmp_path):
        p = fake_report(tmp_path / "one.jsonl", [(0.7, 0.9)])
        assert len(read_table(cmd_front(p))) == 1

    def test_dominated_entry_removed(self, tmp_path):
        p = fake_report(tmp_path / "three.jsonl", [(0.9, 1.3), (0.8, 1.2), (0.85, 1.05)])
        rows = read_table(cmd_front(p))
        assert [(r["ba_train"], r["us_dev_train"]) for r in rows] == [(0.9, pytest.approx(0.3)), (0.85, pytest.approx(0.05))]

    def test_rejects_other_optimizers(self, tmp_path):
        _, path = run(tmp_path, "gd_logloss")
        with pytest.raises(NotAPsaReport):
            cmd_front(path)

    def test_real_front_is_fixed_point(self, tmp_path):
        _, path = run(tmp_path)
        text = cmd_front(path, tmp_path / "front.csv")
        assert (tmp_path / "front.csv").read_text() == text
        rows = read_table(text)
        pts = [(r["ba_train"], r["us_dev_train"]) for r in rows]
        assert oracles.pareto_filter(pts, list(range(len(pts)))) == list(range(len(pts)))
        assert [p[0] for p in pts] == sorted((p[0] for p in pts), reverse=True)
        refiltered = fake_report(tmp_path / "again.jsonl", [(r["ba_train"], r["us_train"]) for r in rows])
        assert len(read_table(cmd_front(refiltered))) == len(rows)

    def test_twelve_significant_digits(self, tmp_path):
        p = fake_report(tmp_path / "d.jsonl", [(2 / 3, 1 / 3)])
        line = cmd_front(p).splitlines()[1]
        assert line.split(",")[0] == "0.666666666667"


class TestCompare:
    def test_self_comparison(self, tmp_path):
        _, path = run(tmp_path)
        rows = compare_rows([path, path])
        assert rows[0] == rows[1]

    def test_selection_prefers_us_then_ba(self, tmp_path):
        p = fake_report(tmp_path / "s.jsonl", [(0.9, 1.2), (0.7, 1.0), (0.75, 1.0), (0.8, 0.95)])
        g = fake_report(tmp_path / "g.jsonl", [(0.9, 0.5)], optimizer="gd_logloss")
        rows = compare_rows([p, g])
        assert (rows[0]["ba_test"], rows[0]["step"]) == (0.75, 2)
        assert rows[1]["optimizer"] == "gd_logloss"

    def test_split_mismatch(self, tmp_path):
        a = fake_report(tmp_path / "a.jsonl", [(0.8, 1.0)], split_seed=0)
        b = fake_report(tmp_path / "b.jsonl", [(0.8, 1.0)], split_seed=1)
        with pytest.raises(SplitMismatch):
            cmd_compare([a, b])

    def test_needs_two(self, tmp_path):
        a = fake_report(tmp_path / "a.jsonl", [(0.8, 1.0)])
        with pytest.raises(ConfigError):
            cmd_compare([a])


class TestGenSynthetic:
    def test_line_counts_and_bytes(self, tmp_path):
        p = cmd_gen_synthetic(SyntheticConfig(n_samples=10), tmp_path / "s10.csv")
        assert len(p.read_text().splitlines()) == 11
        big = cmd_gen_synthetic(SyntheticConfig(), tmp_path / "s.csv")
        again = cmd_gen_synthetic(SyntheticConfig(), tmp_path / "t.csv")
        assert len(big.read_text().splitlines()) == 5001
        assert big.read_bytes() == again.read_bytes()
        params = json.loads((tmp_path / "s.csv.params.json").read_text())
        assert params["n_samples"] == 5000 and params["seed"] == 0

    def test_csv_dataset_runs_like_generated(self, tmp_path):
        path = cmd_gen_synthetic(SyntheticConfig(n_samples=400, seed=2), tmp_path / "syn.csv")
        cfg = ExperimentConfig(dataset=str(path), optimizer="gd_logloss", output_dir=str(tmp_path / "o"))
        from_csv, _ = cmd_run(cfg)
        direct, _ = run(tmp_path, "gd_logloss", sub="d")
        assert np.array_equal(from_csv.records[0]["theta"], direct.records[0]["theta"])

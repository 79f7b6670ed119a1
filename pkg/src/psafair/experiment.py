"""Experiment configuration, run reports and the commands behind the CLI.

A run report is a UTF-8 JSON-lines file. The first line is a header::

    {"record": "header", "schema": "psafair.report/1", "optimizer": ...,
     "config": {...}, "config_hash": ..., "split_seed": ..., "dataset": {...},
     "n_train": ..., "n_test": ..., "feature_names": [...],
     "standardization": {"mean": [...], "scale": [...], "scaled": [...]}}

followed by one line per solution::

    {"record": "solution", "index": i, "optimizer": ..., "config_hash": ...,
     "chain_id": ..., "step": ..., "theta": [...],
     "train": {"ba", "us", "us_dev", "di"}, "test": {"ba", "us", "us_dev", "di"},
     "di_test": ..., "wall_clock_s": ...}

``theta`` lives in standardized feature space. Undefined metrics (a zero
denominator) are written as ``null``. ``wall_clock_s`` is the only field
that varies between identical runs.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence


from .baselines import SgdConfig, run_gd_logloss, run_sa_ba
from .data import AnnealConfig, Dataset, ModelParams, ObjectiveValues, Solution, split_70_30, validate_dataset
from .datasets import (
    ColumnSpec,
    SyntheticConfig,
    Standardization,
    typed_section,
    atomic_write_text,
    describe,
    dumps_csv,
    generate_synthetic,
    fit_standardization,
    load_csv,
    load_dataset,
    load_native_csv,
    load_preset,
)
from .errors import ConfigError, DegenerateDenominator, NotAPsaReport, ReportError, SplitMismatch
from .metrics import balanced_accuracy, confusion, disparate_impact, underestimation_score
from .model import predict
from .psa import non_dominated, run_psa

log = logging.getLogger(__name__)

OPTIMIZERS = ("psa", "sa_ba", "gd_logloss")
SCHEMA = "psafair.report/1"
REPORT_NAME = "report.jsonl"
FRONT_COLUMNS = ("ba_train", "us_train", "us_dev_train", "ba_test", "us_test", "di_test")
COMPARE_COLUMNS = ("optimizer", "ba_test", "us_test", "us_dev_test", "di_test", "chain_id", "step", "report")


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"  # preset name, preset file, or CSV path
    optimizer: str = "psa"
    split_seed: int = 0
    output_dir: str = "runs"
    data_dir: Optional[str] = None
    data_paths: tuple[str, ...] = ()
    workers: int = 1
    capacity: Optional[int] = None
    anneal: Optional[AnnealConfig] = None
    sgd: Optional[SgdConfig] = None
    columns: tuple[ColumnSpec, ...] = ()

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        wants_anneal = self.optimizer in ("psa", "sa_ba")
        if wants_anneal and self.anneal is None:
            object.__setattr__(self, "anneal", AnnealConfig())
        if not wants_anneal and self.sgd is None:
            object.__setattr__(self, "sgd", SgdConfig())
        if wants_anneal and self.sgd is not None:
            raise ConfigError(f"[sgd] settings given but optimizer is {self.optimizer!r}")
        if not wants_anneal and self.anneal is not None:
            raise ConfigError(f"[anneal] settings given but optimizer is {self.optimizer!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.capacity is not None and self.optimizer != "psa":
            raise ConfigError("capacity only applies to the psa optimizer")
        object.__setattr__(self, "data_paths", tuple(self.data_paths))
        object.__setattr__(self, "columns", tuple(self.columns))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["data_paths"] = list(self.data_paths)
        d["columns"] = [asdict(c) for c in self.columns]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("anneal") is not None:
            d["anneal"] = AnnealConfig(**d["anneal"])
        if d.get("sgd") is not None:
            d["sgd"] = SgdConfig(**d["sgd"])
        d["columns"] = tuple(ColumnSpec(**c) for c in d.get("columns", ()))
        d["data_paths"] = tuple(d.get("data_paths", ()))
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


_EXPERIMENT_KEYS = {
    "dataset": str, "optimizer": str, "split_seed": int, "output_dir": str,
    "data_dir": str, "data_paths": tuple, "workers": int, "capacity": int,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse an INI experiment config. Unknown sections and keys are errors.

    Sections: ``[experiment]`` (required), ``[anneal]`` (psa / sa_ba only),
    ``[sgd]`` (gd_logloss only), and ``[column NAME]`` sections describing a
    raw CSV when ``dataset`` points at a ``.csv`` file.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigError(f"{source}: missing [experiment] section")
    kw: dict = {}
    for key, raw in cp["experiment"].items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"{source} [experiment]: unknown key {key!r}")
        typ = _EXPERIMENT_KEYS[key]
        try:
            if typ is int:
                kw[key] = int(raw)
            elif typ is tuple:
                kw[key] = tuple(p.strip() for p in raw.replace("\n", ",").split(",") if p.strip())
            else:
                kw[key] = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"{source} [experiment]: bad value for {key!r}: {raw!r}") from exc
    columns = []
    for sec in cp.sections():
        if sec == "experiment":
            continue
        if sec == "anneal":
            kw["anneal"] = AnnealConfig(**typed_section(AnnealConfig, cp[sec], f"{source} [anneal]"))
        elif sec == "sgd":
            kw["sgd"] = SgdConfig(**typed_section(SgdConfig, cp[sec], f"{source} [sgd]"))
        elif sec.startswith("column "):
            ck = typed_section(ColumnSpec, cp[sec], f"{source} [{sec}]")
            ck.pop("csv_column", None)
            columns.append(ColumnSpec(sec[len("column "):].strip(), **ck))
        else:
            raise ConfigError(f"{source}: unknown section [{sec}]")
    kw["columns"] = tuple(columns)
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def resolve_dataset(cfg: ExperimentConfig) -> Dataset:
    """Load or generate the dataset an experiment refers to."""
    if cfg.dataset.lower().endswith(".csv"):
        paths = [cfg.dataset, *cfg.data_paths]
        if cfg.columns:
            return load_csv(paths, cfg.columns, name=Path(cfg.dataset).stem)
        if len(paths) > 1:
            raise ConfigError("several CSV files need [column ...] sections")
        return load_native_csv(paths[0])
    if cfg.columns:
        raise ConfigError("[column ...] sections only apply when dataset is a .csv path")
    preset = load_preset(cfg.dataset)
    return load_dataset(preset, cfg.data_paths or None, cfg.data_dir)


# --------------------------------------------------------------------------- evaluation


def _safe(fn, *args) -> Optional[float]:
    try:
        return float(fn(*args))
    except DegenerateDenominator:
        return None


def split_metrics(params: ModelParams, data: Dataset) -> dict:
    """BA, US, |1 - US| and DI of ``params`` on ``data`` (``None`` where undefined)."""
    gc = confusion(data.target, predict(params, data.features), data.sensitive)
    us = _safe(underestimation_score, gc)
    return {
        "ba": _safe(balanced_accuracy, gc),
        "us": us,
        "us_dev": None if us is None else abs(1.0 - us),
        "di": _safe(disparate_impact, gc),
    }


@dataclass(frozen=True)
class PreparedData:
    dataset: Dataset  # standardized, all rows
    train: Dataset
    test: Dataset
    standardization: Standardization
    raw: Dataset


def prepare(raw: Dataset, split_seed: int) -> PreparedData:
    validate_dataset(raw)
    sp = split_70_30(raw, split_seed)
    st = fit_standardization(raw, sp.train)
    ds = raw.with_features(st.apply(raw.features))
    return PreparedData(ds, ds.subset(sp.train), ds.subset(sp.test), st, raw)


@dataclass
class RunReport:
    header: dict
    records: list[dict]

    def dumps(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        atomic_write_text(path, self.dumps())
        return path

    @classmethod
    def read(cls, path) -> "RunReport":
        header, records = None, []
        try:
            with open(path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    kind = obj.get("record")
                    if kind == "header":
                        if header is not None:
                            raise ReportError(f"{path}:{n}: second header record")
                        header = obj
                    elif kind == "solution":
                        records.append(obj)
                    else:
                        raise ReportError(f"{path}:{n}: unknown record type {kind!r}")
        except (OSError, json.JSONDecodeError) as exc:
            raise ReportError(f"cannot read report {path}: {exc}") from exc
        if header is None or header.get("schema") != SCHEMA:
            raise ReportError(f"{path}: missing or unsupported report header")
        return cls(header, records)


def _optimize(cfg: ExperimentConfig, train: Dataset) -> list[Solution]:
    if cfg.optimizer == "psa":
        return list(run_psa(train, cfg.anneal, workers=cfg.workers, capacity=cfg.capacity).entries)
    if cfg.optimizer == "sa_ba":
        return [run_sa_ba(train, cfg.anneal)]
    return [run_gd_logloss(train, cfg.sgd)]


def cmd_run(cfg: ExperimentConfig, raw: Optional[Dataset] = None) -> tuple[RunReport, Path]:
    """Load, split 70:30, standardize, optimize on train, evaluate on both splits, write."""
    started = time.perf_counter()
    raw = resolve_dataset(cfg) if raw is None else raw
    prep = prepare(raw, cfg.split_seed)
    solutions = _optimize(cfg, prep.train)
    digest = cfg.config_hash()
    records = []
    for i, sol in enumerate(solutions):
        train = split_metrics(sol.params, prep.train)
        test = split_metrics(sol.params, prep.test)
        records.append({
            "record": "solution",
            "index": i,
            "optimizer": cfg.optimizer,
            "config_hash": digest,
            "chain_id": sol.chain_id,
            "step": sol.step,
            "theta": sol.params.theta.tolist(),
            "train": train,
            "test": test,
            "di_test": test["di"],
        })
    elapsed = time.perf_counter() - started
    for r in records:
        r["wall_clock_s"] = elapsed
    header = {
        "record": "header",
        "schema": SCHEMA,
        "optimizer": cfg.optimizer,
        "config": cfg.to_dict(),
        "config_hash": digest,
        "split_seed": cfg.split_seed,
        "dataset": describe(raw),
        "feature_names": list(raw.feature_names),
        "n_train": prep.train.n_samples,
        "n_test": prep.test.n_samples,
        "standardization": prep.standardization.to_dict(),
    }
    report = RunReport(header, records)
    path = report.write(Path(cfg.output_dir) / REPORT_NAME)
    log.info("wrote %d solution(s) to %s in %.1fs", len(records), path, elapsed)
    return report, path


# --------------------------------------------------------------------------- tables


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _table(columns: Sequence[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _as_solution(rec: dict) -> Optional[Solution]:
    tr = rec["train"]
    if tr["ba"] is None or tr["us_dev"] is None:
        return None
    return Solution(
        ModelParams(rec["theta"]),
        ObjectiveValues(tr["ba"], tr["us_dev"], tr["us"]),
        rec["chain_id"],
        rec["step"],
    )


def front_rows(report: RunReport) -> list[dict]:
    """Non-dominated records on the train objectives, ``ba_train`` descending."""
    if report.header.get("optimizer") != "psa":
        raise NotAPsaReport(f"front needs a psa report, got optimizer {report.header.get('optimizer')!r}")
    by_key = {}
    sols = []
    for rec in report.records:
        sol = _as_solution(rec)
        if sol is not None:
            by_key[(sol.chain_id, sol.step)] = rec
            sols.append(sol)
    if not sols:
        raise ReportError("report has no solutions with defined train objectives")
    rows = []
    for sol in non_dominated(sols):
        rec = by_key[(sol.chain_id, sol.step)]
        rows.append({
            "ba_train": rec["train"]["ba"],
            "us_train": rec["train"]["us"],
            "us_dev_train": rec["train"]["us_dev"],
            "ba_test": rec["test"]["ba"],
            "us_test": rec["test"]["us"],
            "di_test": rec["test"]["di"],
        })
    return rows


def cmd_front(report_path, out=None) -> str:
    text = _table(FRONT_COLUMNS, front_rows(RunReport.read(report_path)))
    if out is not None:
        atomic_write_text(out, text)
    return text


def read_table(text: str) -> list[dict]:
    """Parse a CSV table emitted by ``front`` or ``compare``; blanks become ``None``."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        conv = {}
        for k, v in row.items():
            if v == "":
                conv[k] = None
            else:
                try:
                    conv[k] = float(v)
                except ValueError:
                    conv[k] = v
        out.append(conv)
    return out


def select_record(report: RunReport) -> dict:
    """Record a report contributes to a comparison.

    For psa: the solution closest to ``US = 1`` on train (min ``us_dev``),
    ties broken by higher train BA, then earliest chain / step.
    """
    recs = [r for r in report.records if r["train"]["us_dev"] is not None]
    if not recs:
        raise ReportError("report has no solution with a defined train underestimation score")
    if report.header["optimizer"] != "psa":
        return recs[0]
    return min(recs, key=lambda r: (r["train"]["us_dev"], -(r["train"]["ba"] or 0.0), r["chain_id"], r["step"]))


def compare_rows(report_paths: Sequence) -> list[dict]:
    if len(report_paths) < 2:
        raise ConfigError("compare needs at least two reports")
    reports = [RunReport.read(p) for p in report_paths]
    ref = reports[0].header
    for p, rep in zip(report_paths, reports):
        h = rep.header
        if h["split_seed"] != ref["split_seed"]:
            raise SplitMismatch(
                f"{p}: split_seed {h['split_seed']} differs from {ref['split_seed']}; test sets are not comparable"
            )
        if h["dataset"] != ref["dataset"]:
            raise SplitMismatch(f"{p}: dataset {h['dataset']['name']!r} differs from {ref['dataset']['name']!r}")
    rows = []
    for p, rep in zip(report_paths, reports):
        r = select_record(rep)
        rows.append({
            "optimizer": rep.header["optimizer"],
            "ba_test": r["test"]["ba"],
            "us_test": r["test"]["us"],
            "us_dev_test": r["test"]["us_dev"],
            "di_test": r["test"]["di"],
            "chain_id": r["chain_id"],
            "step": r["step"],
            "report": str(p),
        })
    return rows


def cmd_compare(report_paths: Sequence, out=None) -> str:
    text = _table(COMPARE_COLUMNS, compare_rows(report_paths))
    if out is not None:
        atomic_write_text(out, text)
    return text


def cmd_gen_synthetic(cfg: SyntheticConfig, out_path) -> Path:
    """Write a synthetic dataset as CSV plus a ``<out>.params.json`` sidecar."""
    out_path = Path(out_path)
    atomic_write_text(out_path, dumps_csv(generate_synthetic(cfg)))
    params = {"generator": "psafair.synthetic", **asdict(cfg)}
    atomic_write_text(out_path.with_name(out_path.name + ".params.json"), json.dumps(params, indent=2) + "\n")
    return out_path


def recompute(report: RunReport, raw: Dataset) -> list[dict]:
    """Re-derive every record's train/test metrics from its theta, the raw data and the split seed."""
    prep = prepare(raw, report.header["split_seed"])
    out = []
    for rec in report.records:
        params = ModelParams(rec["theta"])
        out.append({"train": split_metrics(params, prep.train), "test": split_metrics(params, prep.test)})
    return out

"""Dataset construction: synthetic generator, CSV loading, presets, standardization."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .data import Dataset, validate_dataset
from .errors import (
    ConfigError,
    EmptyAfterFiltering,
    MissingColumn,
    UnmappableValue,
)

log = logging.getLogger(__name__)

MISSING = frozenset({"", "?"})
TARGET_COLUMN = "target"
SENSITIVE_COLUMN = "sensitive"
ROLES = ("feature", "target", "sensitive", "drop")
PRESET_NAMES = ("adult", "recidivism", "synthetic")

PathLike = Union[str, os.PathLike]


# --------------------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class SyntheticConfig:
    n_samples: int = 5000
    minority_fraction: float = 0.5
    bias_strength: float = 2.0
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if not 0 < self.minority_fraction < 1:
            raise ConfigError("minority_fraction must lie in (0, 1)")
        if self.bias_strength < 0:
            raise ConfigError("bias_strength must be >= 0")
        if not self.noise_sd > 0:
            raise ConfigError("noise_sd must be > 0")


SYNTHETIC_FEATURES = ("s", "merit", "proxy")


def generate_synthetic(cfg: SyntheticConfig = SyntheticConfig()) -> Dataset:
    """Three-feature dataset with a group gap in the positive base rate.

    Columns are the group indicator ``s`` (1 = majority), a merit score
    ``m ~ N(0, 1)`` and a noisy proxy ``m + b*(s - 1/2) + noise``. The label is
    ``1`` iff ``m + b*(s - 1/2) + noise > 0``, so with ``b > 0`` the minority
    has a lower rate of desirable outcomes in the data. This is a stand-in
    generator with the same shape as the usual three-column synthetic
    benchmark, not a reproduction of any published one.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & 0xFFFFFFFFFFFFFFFF, 0x5E7]))
    n = cfg.n_samples
    s = (rng.random(n) >= cfg.minority_fraction).astype(np.int64)
    merit = rng.standard_normal(n)
    shift = cfg.bias_strength * (s - 0.5)
    proxy = merit + shift + rng.normal(0.0, cfg.noise_sd, n)
    y = (merit + shift + rng.normal(0.0, cfg.noise_sd, n) > 0).astype(np.int64)
    X = np.column_stack([s.astype(np.float64), merit, proxy])
    return Dataset(X, y, s, SYNTHETIC_FEATURES, "synthetic")


# --------------------------------------------------------------------------- column specs


def _values(v: Optional[str]) -> frozenset[str]:
    if v is None:
        return frozenset()
    return frozenset(p.strip() for p in str(v).split("|") if p.strip())


@dataclass(frozen=True)
class ColumnSpec:
    """How one CSV column feeds a :class:`Dataset`.

    ``positive_value`` / ``majority_value`` may list alternatives separated by
    ``|``. When ``negative_value`` (target, binary features) or
    ``minority_value`` (sensitive) is also given, any value outside the two
    sets raises :class:`UnmappableValue`; otherwise everything else maps to 0.
    A feature with ``positive_value`` becomes a 0/1 indicator. The sensitive
    column is also kept as a feature unless ``include_as_feature`` is false.
    """

    csv_column: str
    role: str = "feature"
    positive_value: Optional[str] = None
    majority_value: Optional[str] = None
    negative_value: Optional[str] = None
    minority_value: Optional[str] = None
    include_as_feature: bool = True

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"column {self.csv_column!r}: unknown role {self.role!r}")
        if self.role == "target" and not _values(self.positive_value):
            raise ConfigError(f"target column {self.csv_column!r} needs positive_value")
        if self.role == "sensitive" and not _values(self.majority_value):
            raise ConfigError(f"sensitive column {self.csv_column!r} needs majority_value")

    def binarize(self, raw: str) -> int:
        if self.role == "sensitive":
            one, zero = _values(self.majority_value), _values(self.minority_value)
        else:
            one, zero = _values(self.positive_value), _values(self.negative_value)
        if raw in one:
            return 1
        if zero and raw not in zero:
            raise UnmappableValue(f"column {self.csv_column!r}: value {raw!r} is not mapped")
        return 0


def _check_specs(specs: Sequence[ColumnSpec]) -> None:
    roles = [c.role for c in specs]
    if roles.count("target") != 1 or roles.count("sensitive") != 1:
        raise ConfigError("column spec needs exactly one target and one sensitive column")
    names = [c.csv_column for c in specs]
    if len(set(names)) != len(names):
        raise ConfigError("column spec lists a column twice")


# --------------------------------------------------------------------------- csv io


@dataclass(frozen=True)
class LoadReport:
    n_read: int
    n_kept: int
    dropped_by_column: dict = field(default_factory=dict)

    @property
    def n_dropped(self) -> int:
        return self.n_read - self.n_kept


def _parse_float(raw: str) -> float:
    if raw in MISSING:
        return math.nan
    try:
        v = float(raw)
    except ValueError:
        return math.nan
    return v if math.isfinite(v) else math.nan


def _read_rows(
    paths: Sequence[PathLike], header: Optional[Sequence[str]], comment: Optional[str]
) -> tuple[list[str], list[list[str]]]:
    cols: Optional[list[str]] = list(header) if header else None
    rows: list[list[str]] = []
    for p in paths:
        with open(p, newline="", encoding="utf-8") as fh:
            lines = (
                ln for ln in fh if ln.strip() and not (comment and ln.lstrip().startswith(comment))
            )
            reader = csv.reader(lines, skipinitialspace=True)
            if not header:
                file_cols = [c.strip() for c in next(reader, [])]
                if cols is None:
                    cols = file_cols
                elif file_cols != cols:
                    raise MissingColumn(f"{p}: header differs from the first file's header")
            rows.extend([c.strip() for c in r] for r in reader)
    if cols is None:
        raise EmptyAfterFiltering("no header row found")
    return cols, rows


def load_csv_with_report(
    path: Union[PathLike, Sequence[PathLike]],
    spec: Sequence[ColumnSpec],
    *,
    header: Optional[Sequence[str]] = None,
    comment: Optional[str] = None,
    name: Optional[str] = None,
) -> tuple[Dataset, LoadReport]:
    """Read one CSV (or several with the same layout, concatenated) into a Dataset.

    ``header`` supplies column names for files without a header row. Lines
    starting with ``comment`` are skipped. Rows with a missing (``""`` or
    ``"?"``) or unparseable cell in any used column are dropped and counted.
    """
    paths = [path] if isinstance(path, (str, os.PathLike)) else list(path)
    _check_specs(spec)
    cols, rows = _read_rows(paths, header, comment)
    index = {}
    for i, c in enumerate(cols):
        index.setdefault(c, i)  # first occurrence wins for duplicated names
    used = [c for c in spec if c.role != "drop"]
    for c in used:
        if c.csv_column not in index:
            raise MissingColumn(f"column {c.csv_column!r} not found in {paths[0]}")

    feat_specs = [c for c in used if c.role == "feature" or (c.role == "sensitive" and c.include_as_feature)]
    target_spec = next(c for c in used if c.role == "target")
    sens_spec = next(c for c in used if c.role == "sensitive")
    width = len(cols)

    dropped: dict[str, int] = {}
    X, y, s = [], [], []
    for r in rows:
        if len(r) != width:
            dropped["<row length>"] = dropped.get("<row length>", 0) + 1
            continue
        bad = None
        for c in used:
            if r[index[c.csv_column]] in MISSING:
                bad = c.csv_column
                break
        feats = []
        if bad is None:
            for c in feat_specs:
                raw = r[index[c.csv_column]]
                if c.role == "sensitive":
                    v = float(c.binarize(raw))
                elif c.positive_value is not None:
                    v = float(c.binarize(raw))
                else:
                    v = _parse_float(raw)
                    if math.isnan(v):
                        bad = c.csv_column
                        break
                feats.append(v)
        if bad is not None:
            dropped[bad] = dropped.get(bad, 0) + 1
            continue
        X.append(feats)
        y.append(target_spec.binarize(r[index[target_spec.csv_column]]))
        s.append(sens_spec.binarize(r[index[sens_spec.csv_column]]))

    report = LoadReport(len(rows), len(X), dropped)
    if report.n_dropped:
        log.warning("dropped %d of %d rows with missing/unparseable cells: %s",
                    report.n_dropped, report.n_read, dropped)
    if not X:
        raise EmptyAfterFiltering(f"no usable rows in {', '.join(map(str, paths))}")
    ds = Dataset(
        np.array(X, dtype=np.float64).reshape(len(X), len(feat_specs)),
        np.array(y, dtype=np.int64),
        np.array(s, dtype=np.int64),
        tuple(c.csv_column for c in feat_specs),
        name or Path(paths[0]).stem,
    )
    return validate_dataset(ds), report


def load_csv(path, spec: Sequence[ColumnSpec], **kw) -> Dataset:
    return load_csv_with_report(path, spec, **kw)[0]


def native_spec(feature_names: Iterable[str]) -> list[ColumnSpec]:
    """Column spec that reads back a file written by :func:`save_csv`."""
    return [ColumnSpec(n) for n in feature_names] + [
        ColumnSpec(TARGET_COLUMN, "target", positive_value="1", negative_value="0"),
        ColumnSpec(SENSITIVE_COLUMN, "sensitive", majority_value="1", minority_value="0",
                   include_as_feature=False),
    ]


def dumps_csv(d: Dataset) -> str:
    if {TARGET_COLUMN, SENSITIVE_COLUMN} & set(d.feature_names):
        raise ConfigError(f"feature names may not be {TARGET_COLUMN!r} or {SENSITIVE_COLUMN!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*d.feature_names, TARGET_COLUMN, SENSITIVE_COLUMN])
    for x, t, g in zip(d.features.tolist(), d.target.tolist(), d.sensitive.tolist()):
        w.writerow([*map(repr, x), t, g])
    return buf.getvalue()


def save_csv(d: Dataset, path: PathLike) -> None:
    """Write ``d`` as UTF-8 CSV: feature columns, then ``target`` and ``sensitive``.

    Floats are written with ``repr`` so a reload is bit-exact. The write is
    atomic (temp file + rename).
    """
    atomic_write_text(path, dumps_csv(d))


def load_native_csv(path: PathLike, name: Optional[str] = None) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        cols = next(csv.reader(fh))
    feats = [c for c in cols if c not in (TARGET_COLUMN, SENSITIVE_COLUMN)]
    return load_csv(path, native_spec(feats), name=name)


def atomic_write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --------------------------------------------------------------------------- presets


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    kind: str  # "csv" | "synthetic"
    files: tuple[str, ...] = ()
    header: Optional[tuple[str, ...]] = None
    comment: Optional[str] = None
    columns: tuple[ColumnSpec, ...] = ()
    synthetic: Optional[SyntheticConfig] = None


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _csv_list(v: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in v.replace("\n", ",").split(",") if p.strip())


def typed_section(cls, section: configparser.SectionProxy, where: str) -> dict:
    known = {f.name: f for f in fields(cls)}
    out = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        typ = known[key].type
        try:
            if typ in ("int", int):
                out[key] = int(raw)
            elif typ in ("float", float):
                out[key] = float(raw)
            elif typ in ("bool", bool):
                out[key] = _BOOL[raw.strip().lower()]
            else:
                out[key] = raw.strip()
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {raw!r}") from exc
    return out


def parse_preset(text: str, source: str = "<preset>") -> DatasetPreset:
    """Parse an INI-style preset (see the packaged ``presets/*.preset`` files)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if "dataset" not in cp:
        raise ConfigError(f"{source}: missing [dataset] section")
    ds = dict(cp["dataset"])
    allowed = {"name", "kind", "files", "header", "comment"}
    extra = set(ds) - allowed
    if extra:
        raise ConfigError(f"{source}: unknown key(s) in [dataset]: {sorted(extra)}")
    kind = ds.get("kind", "csv").strip()
    name = ds.get("name", Path(source).stem).strip()
    if kind == "synthetic":
        bad = [s for s in cp.sections() if s not in ("dataset", "synthetic")]
        if bad:
            raise ConfigError(f"{source}: unexpected section(s) {bad} in synthetic preset")
        syn = typed_section(SyntheticConfig, cp["synthetic"], f"{source} [synthetic]") if "synthetic" in cp else {}
        return DatasetPreset(name, kind, synthetic=SyntheticConfig(**syn))
    if kind != "csv":
        raise ConfigError(f"{source}: kind must be 'csv' or 'synthetic', got {kind!r}")
    columns = []
    for sec in cp.sections():
        if sec == "dataset":
            continue
        if not sec.startswith("column "):
            raise ConfigError(f"{source}: unexpected section [{sec}]")
        kw = typed_section(ColumnSpec, cp[sec], f"{source} [{sec}]")
        kw.pop("csv_column", None)
        columns.append(ColumnSpec(sec[len("column "):].strip(), **kw))
    _check_specs(columns)
    return DatasetPreset(
        name,
        kind,
        files=_csv_list(ds.get("files", "")),
        header=_csv_list(ds["header"]) if "header" in ds else None,
        comment=ds.get("comment", "").strip() or None,
        columns=tuple(columns),
    )


def load_preset(name_or_path: PathLike) -> DatasetPreset:
    """Packaged preset by name (``adult``, ``recidivism``, ``synthetic``) or a preset file."""
    key = str(name_or_path)
    if key in PRESET_NAMES:
        text = resources.files("psafair.presets").joinpath(f"{key}.preset").read_text("utf-8")
        return parse_preset(text, f"{key}.preset")
    p = Path(key)
    if not p.is_file():
        raise ConfigError(f"unknown preset {key!r} (expected one of {PRESET_NAMES} or a file)")
    return parse_preset(p.read_text("utf-8"), str(p))


def default_data_dir() -> Path:
    return Path(os.environ.get("PSAFAIR_DATA_DIR", "data/raw"))


def load_dataset(
    preset: DatasetPreset,
    paths: Optional[Sequence[PathLike]] = None,
    data_dir: Optional[PathLike] = None,
) -> Dataset:
    """Materialise a preset: generate it, or load its CSV files.

    ``paths`` overrides the preset's file list; otherwise file names resolve
    against ``data_dir`` (default ``$PSAFAIR_DATA_DIR`` or ``data/raw``).
    """
    if preset.kind == "synthetic":
        return generate_synthetic(preset.synthetic or SyntheticConfig())
    if paths:
        files = [Path(p) for p in paths]
    else:
        base = Path(data_dir) if data_dir is not None else default_data_dir()
        files = [base / f for f in preset.files]
    if not files:
        raise ConfigError(f"preset {preset.name!r} lists no files and none were given")
    return load_csv(files, preset.columns, header=preset.header, comment=preset.comment, name=preset.name)


def describe(d: Dataset) -> dict:
    """Shape and group statistics (group share and positive rates)."""
    minority = d.sensitive == 0
    return {
        "name": d.name,
        "n_samples": d.n_samples,
        "n_features": d.n_features,
        "features": list(d.feature_names),
        "minority_share": float(minority.mean()),
        "positive_rate": float(d.target.mean()),
        "positive_rate_minority": float(d.target[minority].mean()) if minority.any() else None,
        "positive_rate_majority": float(d.target[~minority].mean()) if (~minority).any() else None,
    }


# --------------------------------------------------------------------------- standardization


@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-column affine map ``x -> (x - mean) / scale``.

    Columns left untouched carry ``mean = 0`` and ``scale = 1``.
    """

    mean: np.ndarray
    scale: np.ndarray
    scaled: np.ndarray

    def apply(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def compose(self, inner: "Standardization") -> "Standardization":
        """The map equal to applying ``inner`` first and then ``self``."""
        return Standardization(
            inner.mean + self.mean * inner.scale,
            inner.scale * self.scale,
            inner.scaled | self.scaled,
        )

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(), "scaled": self.scaled.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(np.array(d["mean"], float), np.array(d["scale"], float), np.array(d["scaled"], bool))


def fit_standardization(d: Dataset, train_idx) -> Standardization:
    idx = np.asarray(train_idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("train_idx is empty")
    Xt = d.features[idx]
    mean = np.zeros(d.n_features)
    scale = np.ones(d.n_features)
    scaled = np.zeros(d.n_features, dtype=bool)
    for j, name in enumerate(d.feature_names):
        col = Xt[:, j]
        if np.isin(col, (0.0, 1.0)).all():
            continue  # indicator columns, including the sensitive attribute
        sd = col.std()
        if not sd > 0:
            log.warning("feature %r has zero variance on the training rows; left unscaled", name)
            continue
        mean[j], scale[j], scaled[j] = col.mean(), sd, True
    return Standardization(mean, scale, scaled)


def standardize(d: Dataset, train_idx) -> tuple[Dataset, Standardization]:
    """Z-score non-binary features with statistics from ``train_idx`` rows only."""
    st = fit_standardization(d, train_idx)
    return d.with_features(st.apply(d.features)), st

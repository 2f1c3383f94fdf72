"""Dataset ingestion and preparation.

CSV rows are parsed against a schema that declares each column as numeric
or categorical (with a fixed value vocabulary). Categorical columns
expand to one-hot blocks in vocabulary order; values outside the
vocabulary map to an all-zero block so the feature width never depends on
the file contents. Feature scaling is per-column min-max fitted on the
training split only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CsvParseError, NotFittedError, SchemaError, ShapeError
from .rng import make_rng

NORMAL = 0
ANOMALY = 1

CLIP_LO = -0.5
CLIP_HI = 1.5


@dataclass(frozen=True)
class SchemaColumn:
    name: str
    kind: str  # "numeric" | "categorical"
    values: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.values:
                raise SchemaError(f"column {self.name!r}: empty vocabulary")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"column {self.name!r}: duplicate vocabulary values")
        elif self.values:
            raise SchemaError(f"numeric column {self.name!r} must not list values")

    @property
    def width(self) -> int:
        return len(self.values) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class Schema:
    """Column declarations plus the labeling rule.

    normal_value names the raw label string that reads as Normal; setting
    invert_labels swaps the two classes after that match (used when the
    majority class plays the role of normal traffic and the nominal
    "normal" label is the anomaly of interest).
    """

    columns: tuple[SchemaColumn, ...]
    label_column: str | None = None
    normal_value: str | None = None
    invert_labels: bool = False

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise SchemaError("schema declares no feature columns")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if self.label_column in names:
            raise SchemaError("label column also declared as a feature column")
        if self.label_column is not None and self.normal_value is None:
            raise SchemaError("schema with a label column must give normal_value")

    @property
    def feature_width(self) -> int:
        return sum(c.width for c in self.columns)

    def label_of(self, raw: str) -> int:
        matches = raw == self.normal_value
        if self.invert_labels:
            return ANOMALY if matches else NORMAL
        return NORMAL if matches else ANOMALY


@dataclass(frozen=True)
class ColumnMeta:
    """Origin of one expanded feature column."""

    name: str
    origin: str  # "numeric" | "onehot"
    source: str
    value: str | None = None


@dataclass
class ScalingStats:
    col_min: np.ndarray
    col_max: np.ndarray

    def __post_init__(self):
        self.col_min = np.asarray(self.col_min, dtype=np.float64)
        self.col_max = np.asarray(self.col_max, dtype=np.float64)
        if self.col_min.shape != self.col_max.shape or self.col_min.ndim != 1:
            raise ShapeError("scaling stats must be matching 1-D arrays")

    @property
    def span(self) -> np.ndarray:
        return self.col_max - self.col_min


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None
    column_meta: list[ColumnMeta] | None = None
    scaling_stats: ScalingStats | None = None

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {f.shape}")
        f = f.copy()
        f.flags.writeable = False
        self.features = f
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int8)
            if lab.shape != (f.shape[0],):
                raise ShapeError("labels length must match the row count")
            if lab.size and not np.isin(lab, (NORMAL, ANOMALY)).all():
                raise ValueError("labels must be 0 (normal) or 1 (anomaly)")
            lab.flags.writeable = False
            self.labels = lab
        if self.column_meta is not None and len(self.column_meta) != f.shape[1]:
            raise ShapeError("column_meta length must match the feature width")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def feature_names(self) -> list[str]:
        if self.column_meta is not None:
            return [m.name for m in self.column_meta]
        return [f"x{i}" for i in range(self.n_features)]

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[idx],
            labels=None if self.labels is None else self.labels[idx],
            column_meta=self.column_meta,
            scaling_stats=self.scaling_stats,
        )


def expanded_meta(schema: Schema) -> list[ColumnMeta]:
    meta: list[ColumnMeta] = []
    for col in schema.columns:
        if col.kind == "numeric":
            meta.append(ColumnMeta(col.name, "numeric", col.name))
        else:
            for v in col.values:
                meta.append(ColumnMeta(f"{col.name}={v}", "onehot", col.name, v))
    return meta


# ---------------------------------------------------------------------------
# CSV ingestion


def _grow(buf: np.ndarray, need: int) -> np.ndarray:
    cap = buf.shape[0]
    if need <= cap:
        return buf
    new = np.empty((max(need, 2 * cap), buf.shape[1]))
    new[:cap] = buf
    return new


def load_csv(path, schema: Schema, require_labels: bool | None = None,
             has_header: bool = True) -> Dataset:
    """Parse a CSV file into an expanded numeric Dataset.

    require_labels: None loads labels whenever the schema declares a label
    column and the file carries it; True insists on them; False skips them
    even when present. With has_header=False the columns are taken in
    schema declaration order with the label column (if any) last.
    """
    path = Path(path)
    if require_labels and schema.label_column is None:
        raise SchemaError("labels requested but the schema has no label column")
    want_labels = require_labels is not False and schema.label_column is not None

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        line = 0
        if has_header:
            try:
                header = next(reader)
            except StopIteration:
                raise CsvParseError("file is empty", 1) from None
            line = 1
            header = [h.strip() for h in header]
        else:
            header = [c.name for c in schema.columns]
            if schema.label_column is not None:
                header.append(schema.label_column)

        pos = {name: i for i, name in enumerate(header)}
        if len(pos) != len(header):
            raise SchemaError("duplicate column names in CSV header")
        for col in schema.columns:
            if col.name not in pos:
                raise SchemaError(f"CSV is missing declared column {col.name!r}")
        declared = {c.name for c in schema.columns} | {schema.label_column}
        unknown = [h for h in header if h not in declared]
        if unknown:
            raise SchemaError(f"CSV columns not covered by the schema: {unknown}")

        label_pos = None
        if want_labels:
            if schema.label_column not in pos:
                if require_labels:
                    raise SchemaError(
                        f"label column {schema.label_column!r} missing from CSV"
                    )
                want_labels = False
            else:
                label_pos = pos[schema.label_column]

        # (source position, output offset, kind, value->slot) per column
        plan = []
        offset = 0
        for col in schema.columns:
            slots = {v: i for i, v in enumerate(col.values)} if col.kind == "categorical" else None
            plan.append((pos[col.name], offset, col.kind, slots))
            offset += col.width
        width = offset
        n_cols = len(header)

        buf = np.zeros((1024, width))
        labels: list[int] = []
        n = 0
        for row in reader:
            line += 1
            if not row:
                continue
            if len(row) != n_cols:
                raise CsvParseError(
                    f"expected {n_cols} fields, found {len(row)}", line)
            buf = _grow(buf, n + 1)
            out = buf[n]
            out[:] = 0.0
            for src, off, kind, slots in plan:
                text = row[src].strip()
                if kind == "numeric":
                    try:
                        out[off] = float(text)
                    except ValueError:
                        raise CsvParseError(
                            f"non-numeric value {text!r} in column "
                            f"{header[src]!r}", line) from None
                else:
                    slot = slots.get(text)
                    if slot is not None:
                        out[off + slot] = 1.0
            if want_labels:
                labels.append(schema.label_of(row[label_pos].strip()))
            n += 1

    return Dataset(
        features=buf[:n],
        labels=np.array(labels, dtype=np.int8) if want_labels else None,
        column_meta=expanded_meta(schema),
    )


def write_csv(path, data: Dataset) -> None:
    """Write the expanded numeric matrix (plus labels when present) with a
    header row; floats use shortest-roundtrip repr so a reload is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = data.feature_names()
        if data.labels is not None:
            header = header + ["label"]
        writer.writerow(header)
        for i in range(data.n_rows):
            row = [repr(float(v)) for v in data.features[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            writer.writerow(row)


def numeric_schema_for(data: Dataset) -> Schema:
    """Schema that reads back a write_csv file of this dataset."""
    cols = tuple(SchemaColumn(name, "numeric") for name in data.feature_names())
    if data.labels is not None:
        return Schema(cols, label_column="label", normal_value="0")
    return Schema(cols)


# ---------------------------------------------------------------------------
# scaling


def fit_scale(data: Dataset) -> Dataset:
    """Min-max scale each column to [0, 1] and attach the fitted stats.

    Constant columns map to all zeros. Only ever call this on the training
    split; use apply_scale for everything else.
    """
    if data.n_rows == 0:
        raise ValueError("cannot fit scaling on an empty dataset")
    stats = ScalingStats(data.features.min(axis=0), data.features.max(axis=0))
    return _scale_with(data, stats, clip=False)


def apply_scale(data: Dataset, stats: ScalingStats | None) -> Dataset:
    """Scale with stats fitted elsewhere; out-of-range results are clipped
    to [-0.5, 1.5]."""
    if stats is None:
        raise NotFittedError("scaling stats missing; call fit_scale first")
    if stats.col_min.shape[0] != data.n_features:
        raise ShapeError(
            f"scaling stats cover {stats.col_min.shape[0]} columns, "
            f"data has {data.n_features}"
        )
    return _scale_with(data, stats, clip=True)


def _scale_with(data: Dataset, stats: ScalingStats, clip: bool) -> Dataset:
    span = stats.span
    safe = np.where(span > 0, span, 1.0)
    scaled = (data.features - stats.col_min) / safe
    scaled[:, span == 0] = 0.0
    if clip:
        scaled = np.clip(scaled, CLIP_LO, CLIP_HI)
    return Dataset(features=scaled, labels=data.labels,
                   column_meta=data.column_meta, scaling_stats=stats)


def scaling_to_dict(stats: ScalingStats) -> dict:
    return {"col_min": stats.col_min.tolist(), "col_max": stats.col_max.tolist()}


def scaling_from_dict(d: dict) -> ScalingStats:
    return ScalingStats(np.asarray(d["col_min"]), np.asarray(d["col_max"]))


# ---------------------------------------------------------------------------
# splits and synthetic data


def split_normal_train(data: Dataset, train_fraction: float, seed: int = 0
                       ) -> tuple[Dataset, Dataset]:
    """Seeded split into a normal-only training set and a labeled test set.

    A train_fraction share of rows is drawn at random; anomalies landing
    in that share are pushed back to the test side, so the two outputs are
    disjoint and together cover the input.
    """
    if data.labels is None:
        raise ValueError("split requires labels")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = data.n_rows
    perm = make_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    chosen = perm[:n_train]
    rest = perm[n_train:]

    chosen_normal = chosen[data.labels[chosen] == NORMAL]
    if chosen_normal.size == 0:
        raise ValueError("no normal rows available for the training split")
    pushed_back = chosen[data.labels[chosen] == ANOMALY]
    test_idx = np.sort(np.concatenate([rest, pushed_back]))

    train = data.take(np.sort(chosen_normal))
    train = Dataset(features=train.features, labels=None,
                    column_meta=train.column_meta,
                    scaling_stats=train.scaling_stats)
    return train, data.take(test_idx)


def generate_synthetic(d: int, n_normal: int, n_anomaly: int,
                       anomaly_shift: float, seed: int = 0) -> Dataset:
    """Gaussian toy data: normals at the origin, anomalies at shift*(1,..,1),
    both with identity covariance. Rows are normals first, then anomalies."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if n_normal < 0 or n_anomaly < 0:
        raise ValueError("counts must be >= 0")
    rng = make_rng(seed)
    normal = rng.standard_normal((n_normal, d))
    anomaly = rng.standard_normal((n_anomaly, d)) + anomaly_shift
    features = np.vstack([normal, anomaly])
    labels = np.concatenate([
        np.full(n_normal, NORMAL, dtype=np.int8),
        np.full(n_anomaly, ANOMALY, dtype=np.int8),
    ])
    meta = [ColumnMeta(f"x{i}", "numeric", f"x{i}") for i in range(d)]
    return Dataset(features=features, labels=labels, column_meta=meta)


# ---------------------------------------------------------------------------
# schema files


def schema_to_dict(schema: Schema) -> dict:
    cols = []
    for c in schema.columns:
        entry: dict = {"name": c.name, "type": c.kind}
        if c.kind == "categorical":
            entry["values"] = list(c.values)
        cols.append(entry)
    doc: dict = {"columns": cols}
    if schema.label_column is not None:
        doc["label_column"] = schema.label_column
        doc["normal_value"] = schema.normal_value
        doc["invert_labels"] = schema.invert_labels
    return doc


def schema_from_dict(doc: dict) -> Schema:
    if not isinstance(doc, dict) or "columns" not in doc:
        raise SchemaError("schema file must be an object with a 'columns' list")
    cols = []
    for entry in doc["columns"]:
        try:
            cols.append(SchemaColumn(
                name=str(entry["name"]),
                kind=str(entry.get("type", "numeric")),
                values=tuple(entry.get("values", ())),
            ))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad column entry {entry!r}: {exc}") from exc
    return Schema(
        columns=tuple(cols),
        label_column=doc.get("label_column"),
        normal_value=(None if doc.get("normal_value") is None
                      else str(doc["normal_value"])),
        invert_labels=bool(doc.get("invert_labels", False)),
    )


def load_schema(path) -> Schema:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file is not valid JSON: {exc}") from exc
    return schema_from_dict(doc)


def save_schema(schema: Schema, path) -> None:
    Path(path).write_text(json.dumps(schema_to_dict(schema), indent=2) + "\n",
                          encoding="utf-8")

"""Meta-learning over ensemble size.

Phase I trains an ensemble per (task, candidate I) pair and records the
test AUROC next to the task's meta-features. Phase II fits the kernel
regressor on those records. Phase III scores each candidate for a new
task and keeps the argmax, preferring the smallest I on ties.

Meta-features are simple dataset descriptors: instance count, sparse
column count (strictly more than half exact zeros), and the counts of
positively and negatively skewed columns under the mean-median skewness
measure.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .ensemble import TrainConfig, ensemble_score, init_ensemble, train_ensemble
from .errors import UndefinedAurocError
from .metrics import auroc
from .model import make_arch
from .svr import DEFAULT_C, DEFAULT_EPSILON, SvrModel, fit_svr, predict_svr

META_INPUT_DIM = 5  # four meta-features plus the candidate I


def pearson_skewness(column) -> float:
    """3 * (mean - median) / population std; 0 for constant columns."""
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.size == 0:
        raise ValueError("column must be a nonempty 1-D array")
    # test max == min, not std == 0: for some constant values the float
    # mean is off by an ulp, leaving a ~1e-16 std that would turn pure
    # rounding noise into a +-3 skewness
    if float(col.max()) == float(col.min()):
        return 0.0
    sigma = float(col.std())
    return 3.0 * (float(col.mean()) - float(np.median(col))) / sigma


@dataclass(frozen=True)
class MetaFeatures:
    n_instances: int
    n_sparse: int
    n_pos_skew: int
    n_neg_skew: int

    def __post_init__(self):
        for name in ("n_instances", "n_sparse", "n_pos_skew", "n_neg_skew"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def as_vector(self) -> np.ndarray:
        return np.array([self.n_instances, self.n_sparse,
                         self.n_pos_skew, self.n_neg_skew], dtype=np.float64)


def extract_meta_features(data: Dataset) -> MetaFeatures:
    """Column counting is strict: exactly-half zeros is not sparse, and
    zero-skew columns land in neither skew bucket."""
    if data.n_rows == 0:
        raise ValueError("dataset is empty")
    x = data.features
    n = data.n_rows
    n_sparse = n_pos = n_neg = 0
    for j in range(data.n_features):
        col = x[:, j]
        if 2 * np.count_nonzero(col == 0.0) > n:
            n_sparse += 1
        skew = pearson_skewness(col)
        if skew > 0:
            n_pos += 1
        elif skew < 0:
            n_neg += 1
    return MetaFeatures(n_instances=n, n_sparse=n_sparse,
                        n_pos_skew=n_pos, n_neg_skew=n_neg)


@dataclass(frozen=True)
class MetaRecord:
    features: MetaFeatures
    n_members: int
    performance: float

    def __post_init__(self):
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")
        if not 0.0 <= self.performance <= 1.0:
            raise ValueError("performance must lie in [0, 1]")

    def input_vector(self) -> np.ndarray:
        return np.concatenate([self.features.as_vector(),
                               [float(self.n_members)]])


@dataclass
class MetaTask:
    """One training task for Phase I: a normal-only training set and a
    labeled test set."""

    train: Dataset
    test: Dataset
    name: str = ""

    def __post_init__(self):
        if self.test.labels is None:
            raise ValueError("meta task test split must be labeled")
        if self.train.n_features != self.test.n_features:
            raise ValueError("train/test feature widths differ")


def task_seed(base_seed: int, task_index: int, candidate: int) -> int:
    """Stable per-(task, candidate) seed derived from the base seed."""
    ss = np.random.SeedSequence((base_seed, task_index, candidate))
    return int(ss.generate_state(1)[0])


def build_meta_dataset(tasks: list[MetaTask], candidates: list[int],
                       cfg: TrainConfig, arch_template: dict | None = None
                       ) -> list[MetaRecord]:
    """Phase I: one record per (task, candidate) with a defined AUROC.

    Each pair trains under its own derived seed, so records do not depend
    on evaluation order. Pairs whose test split is single-class are
    skipped with a warning instead of failing the whole build.
    """
    if not tasks:
        raise ValueError("need at least one task")
    if not candidates:
        raise ValueError("need at least one candidate")
    records: list[MetaRecord] = []
    for t_idx, task in enumerate(tasks):
        feats = extract_meta_features(task.train)
        spec = make_arch(task.train.n_features, arch_template)
        for cand in candidates:
            seed = task_seed(cfg.seed, t_idx, cand)
            ens = init_ensemble(spec, cand, seed=seed)
            train_ensemble(ens, task.train.features, replace(cfg, seed=seed))
            scores = ensemble_score(ens, task.test.features)
            try:
                perf = auroc(scores, task.test.labels)
            except UndefinedAurocError:
                label = task.name or f"task {t_idx}"
                warnings.warn(f"skipping {label}, I={cand}: "
                              "test split has a single class")
                continue
            records.append(MetaRecord(features=feats, n_members=cand,
                                      performance=perf))
    return records


# ---------------------------------------------------------------------------
# Phase II / III


def svr_fit(records: list[MetaRecord], C: float = DEFAULT_C,
            epsilon: float = DEFAULT_EPSILON, gamma: float | None = None
            ) -> SvrModel:
    """Fit the meta-learner on [meta-features, I] -> performance rows."""
    if len(records) < 2:
        raise ValueError("need at least 2 meta records")
    x = np.stack([r.input_vector() for r in records])
    y = np.array([r.performance for r in records])
    return fit_svr(x, y, C=C, epsilon=epsilon, gamma=gamma)


def svr_predict(model: SvrModel, features: MetaFeatures, n_members: int
                ) -> float:
    vec = np.concatenate([features.as_vector(), [float(n_members)]])
    return float(predict_svr(model, vec)[0])


def predict_candidates(model: SvrModel, features: MetaFeatures,
                       candidates: list[int]) -> list[tuple[int, float]]:
    return [(c, svr_predict(model, features, c)) for c in candidates]


def pick_best(candidates: list[int], predictions: list[float]) -> int:
    """Argmax over candidates; exact prediction ties go to the smallest I."""
    if not candidates or len(candidates) != len(predictions):
        raise ValueError("candidates and predictions must align and be nonempty")
    best_c, best_p = None, -np.inf
    for c, p in sorted(zip(candidates, predictions)):
        if p > best_p:
            best_c, best_p = c, p
    return best_c


def select_hyperparams(model: SvrModel, new_task: Dataset,
                       candidates: list[int]) -> int:
    """Phase III: predicted-best ensemble size for an unseen dataset."""
    if not candidates:
        raise ValueError("candidate list is empty")
    feats = extract_meta_features(new_task)
    scored = predict_candidates(model, feats, list(candidates))
    return pick_best([c for c, _ in scored], [p for _, p in scored])


# ---------------------------------------------------------------------------
# meta-dataset files

META_CSV_FIELDS = ["n_instances", "n_sparse", "n_pos_skew", "n_neg_skew",
                   "I", "auroc"]


def save_meta_csv(records: list[MetaRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(META_CSV_FIELDS)
        for r in records:
            writer.writerow([
                r.features.n_instances, r.features.n_sparse,
                r.features.n_pos_skew, r.features.n_neg_skew,
                r.n_members, repr(r.performance),
            ])


def load_meta_csv(path) -> list[MetaRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != META_CSV_FIELDS:
            raise ValueError(
                f"meta CSV must have header {META_CSV_FIELDS}, "
                f"found {reader.fieldnames}")
        for row in reader:
            feats = MetaFeatures(
                n_instances=int(row["n_instances"]),
                n_sparse=int(row["n_sparse"]),
                n_pos_skew=int(row["n_pos_skew"]),
                n_neg_skew=int(row["n_neg_skew"]),
            )
            records.append(MetaRecord(features=feats, n_members=int(row["I"]),
                                      performance=float(row["auroc"])))
    return records

"""Feature construction, encoding, standardization, splitting, and SMOTE.

Feature layout (fixed order): cyclic hour-of-day components, raw amounts,
the amount/(previous-month-average + 1) ratio, credit score, lexicographic
category codes for the seven categorical fields, and one binary keyword-hit
flag per wordlist. Encoders and the standardizer are fit on training rows
only; SMOTE runs after the split and only on the training side.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data_model import Dataset
from .errors import DegenerateClass, TooFewMinority
from .wordlists import DEFAULT_WORDLIST_NAMES

CATEGORICAL_FIELDS = (
    "customer_type",
    "product_type",
    "currency",
    "credit_debit",
    "country_origin",
    "country_dest",
    "branch",
)

KIND_NUMERIC = "numeric"
KIND_CATEGORICAL = "categorical"
KIND_FLAG = "text-derived-flag"
KIND_CYCLIC = "cyclic-time"


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    kind: str


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[FeatureColumn, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def __len__(self) -> int:
        return len(self.columns)


def default_schema(wordlist_names: Sequence[str] = DEFAULT_WORDLIST_NAMES) -> FeatureSchema:
    columns = [
        FeatureColumn("hour_sin", KIND_CYCLIC),
        FeatureColumn("hour_cos", KIND_CYCLIC),
        FeatureColumn("amount", KIND_NUMERIC),
        FeatureColumn("avg_amount_prev_month", KIND_NUMERIC),
        FeatureColumn("amount_ratio", KIND_NUMERIC),
        FeatureColumn("credit_score", KIND_NUMERIC),
    ]
    columns += [FeatureColumn(f"{f}_code", KIND_CATEGORICAL) for f in CATEGORICAL_FIELDS]
    columns += [FeatureColumn(f"flag_{name}", KIND_FLAG) for name in wordlist_names]
    return FeatureSchema(tuple(columns))


@dataclass(frozen=True)
class CategoryEncoder:
    """Per-field category -> code maps, assigned by lexicographic order of
    the training vocabulary; unseen categories map to the sentinel code
    len(vocabulary)."""

    mappings: Mapping[str, Mapping[str, int]]

    def vocabulary(self, field: str) -> tuple[str, ...]:
        mapping = self.mappings[field]
        return tuple(sorted(mapping, key=mapping.get))


def fit_encoder(train: Dataset) -> CategoryEncoder:
    cols = train.columns
    mappings = {}
    for field in CATEGORICAL_FIELDS:
        vocab = sorted(set(getattr(cols, field).tolist()))
        mappings[field] = {value: code for code, value in enumerate(vocab)}
    return CategoryEncoder(mappings)


def encode(encoder: CategoryEncoder, dataset: Dataset) -> np.ndarray:
    """Integer codes for the categorical fields, one column per field."""
    cols = dataset.columns
    out = np.empty((len(dataset), len(CATEGORICAL_FIELDS)), dtype=np.int64)
    for j, field in enumerate(CATEGORICAL_FIELDS):
        mapping = encoder.mappings[field]
        sentinel = len(mapping)
        column = getattr(cols, field)
        out[:, j] = [mapping.get(v, sentinel) for v in column.tolist()]
    return out


def build_features(
    dataset: Dataset,
    encoder: CategoryEncoder,
    wordlists: Mapping[str, frozenset[str]],
    schema: FeatureSchema | None = None,
) -> np.ndarray:
    """Raw (unstandardized) feature matrix in schema column order."""
    if schema is None:
        schema = default_schema(tuple(wordlists))
    cols = dataset.columns
    n = len(dataset)
    codes = encode(encoder, dataset)
    code_index = {f"{f}_code": j for j, f in enumerate(CATEGORICAL_FIELDS)}

    matrix = np.empty((n, len(schema)), dtype=np.float64)
    angle = 2.0 * math.pi * cols.hour / 24.0
    for j, column in enumerate(schema.columns):
        if column.name == "hour_sin":
            matrix[:, j] = np.sin(angle)
        elif column.name == "hour_cos":
            matrix[:, j] = np.cos(angle)
        elif column.name == "amount":
            matrix[:, j] = cols.amount
        elif column.name == "avg_amount_prev_month":
            matrix[:, j] = cols.avg_amount_prev_month
        elif column.name == "amount_ratio":
            matrix[:, j] = cols.amount / (cols.avg_amount_prev_month + 1.0)
        elif column.name == "credit_score":
            matrix[:, j] = cols.credit_score
        elif column.kind == KIND_CATEGORICAL:
            matrix[:, j] = codes[:, code_index[column.name]]
        elif column.kind == KIND_FLAG:
            name = column.name[len("flag_"):]
            words = wordlists[name]
            matrix[:, j] = np.fromiter(
                (not words.isdisjoint(t) for t in cols.statement_tokens),
                dtype=bool,
                count=n,
            )
        else:
            raise ValueError(f"unhandled feature column {column!r}")
    return matrix


@dataclass(frozen=True)
class Standardizer:
    """Column-wise z-scoring with population (divide-by-n) standard
    deviation; constant columns transform to all-zeros."""

    mean: np.ndarray
    std: np.ndarray


def fit_standardizer(X_train: np.ndarray) -> Standardizer:
    X_train = np.asarray(X_train, dtype=np.float64)
    return Standardizer(mean=X_train.mean(axis=0), std=X_train.std(axis=0))


def transform(standardizer: Standardizer, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    zero = standardizer.std == 0.0
    denom = np.where(zero, 1.0, standardizer.std)
    Z = (X - standardizer.mean) / denom
    Z[:, zero] = 0.0
    return Z


def split_train_test(
    dataset_or_n, labels: Sequence, test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified seeded split; returns sorted (train, test) row indices.

    Per class, round(count * test_fraction) rows go to the test side, so the
    per-class test share is within one row of the requested fraction.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = dataset_or_n if isinstance(dataset_or_n, int) else len(dataset_or_n)
    y = np.array([int(v) for v in labels])
    if len(y) != n:
        raise ValueError(f"labels length {len(y)} does not match {n} rows")

    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < 2:
            raise DegenerateClass(f"class {cls} has only {len(idx)} row(s)")
        shuffled = idx[rng.permutation(len(idx))]
        n_test = round(len(idx) * test_fraction)
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    train = np.sort(np.concatenate(train_parts)).astype(np.intp)
    test = np.sort(np.concatenate(test_parts)).astype(np.intp)
    return train, test


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def validate(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be positive")
        if self.target_ratio <= 0:
            raise ValueError("target_ratio must be positive")


def _minority_neighbors(X_min: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest minority neighbours of each minority row
    (self excluded), ties broken by row index."""
    m = len(X_min)
    norms = (X_min**2).sum(axis=1)
    neighbors = np.empty((m, k), dtype=np.intp)
    chunk = max(1, min(m, 8_000_000 // max(m, 1)))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        d2 = norms[start:stop, None] + norms[None, :] - 2.0 * (X_min[start:stop] @ X_min.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        rows = np.arange(stop - start)[:, None]
        order = np.lexsort((part, d2[rows, part]), axis=1)
        neighbors[start:stop] = part[rows, order]
    return neighbors


def smote_augment(
    X_train: np.ndarray, y_train: Sequence, cfg: SmoteConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class with synthetic interpolants.

    Each synthetic row is x_i + g * (x_nn - x_i) for a random minority row
    x_i, one of its k nearest minority neighbours x_nn, and g uniform in
    [0, 1]; originals are preserved unchanged and the returned class ratio is
    within one row of target_ratio.
    """
    cfg.validate()
    X = np.asarray(X_train, dtype=np.float64)
    y = np.array([int(v) for v in y_train])
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise TooFewMinority(f"need exactly 2 classes, got {classes.tolist()}")
    minority_class = classes[np.argmin(counts)]
    n_min = counts.min()
    n_maj = counts.max()
    if n_min <= cfg.k_neighbors:
        raise TooFewMinority(
            f"minority class has {n_min} rows; needs more than k={cfg.k_neighbors}"
        )

    n_target = round(n_maj * cfg.target_ratio)
    n_synth = n_target - n_min
    if n_synth <= 0:
        return X.copy(), y.copy()

    minority_idx = np.flatnonzero(y == minority_class)
    X_min = X[minority_idx]
    neighbors = _minority_neighbors(X_min, cfg.k_neighbors)

    rng = np.random.default_rng(cfg.seed)
    bases = rng.integers(0, n_min, size=n_synth)
    picks = rng.integers(0, cfg.k_neighbors, size=n_synth)
    gaps = rng.random(n_synth)
    anchor = X_min[bases]
    partner = X_min[neighbors[bases, picks]]
    synthetic = anchor + gaps[:, None] * (partner - anchor)

    X_aug = np.vstack([X, synthetic])
    y_aug = np.concatenate([y, np.full(n_synth, minority_class, dtype=y.dtype)])
    return X_aug, y_aug


def features_to_csv(X: np.ndarray, schema: FeatureSchema) -> str:
    """Debug dump of a feature matrix with schema column names."""
    buffer = io.StringIO()
    buffer.write(",".join(schema.names) + "\n")
    for row in np.asarray(X, dtype=np.float64):
        buffer.write(",".join(f"{v:.6f}" for v in row) + "\n")
    return buffer.getvalue()

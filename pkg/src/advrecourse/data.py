"""Dataset ingestion, min-max scaling, splitting and the synthetic generator.

CSV contract: UTF-8, comma separated, header row, all columns numeric, and
the final column must be named "target" with values in {0, 1}. Categorical
columns are rejected rather than encoded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import nn


@dataclass
class Scaler:
    """Per-feature min-max map onto [0, 1]. Constant features map to 0.5."""

    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.maxs - self.mins
        out = np.empty_like(X, dtype=np.float64)
        const = span == 0
        out[..., const] = 0.5
        out[..., ~const] = (X[..., ~const] - self.mins[~const]) / span[~const]
        return out

    def inverse(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.maxs - self.mins
        out = np.empty_like(X, dtype=np.float64)
        const = span == 0
        out[..., const] = self.mins[const]
        out[..., ~const] = X[..., ~const] * span[~const] + self.mins[~const]
        return out

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["min"], dtype=np.float64),
                   np.asarray(d["max"], dtype=np.float64))


@dataclass
class Dataset:
    features: np.ndarray            # (n, d) float64
    labels: np.ndarray              # (n,) int, values in {0, 1}
    feature_names: list[str] = field(default_factory=list)
    scaler: Scaler | None = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx],
                       list(self.feature_names), self.scaler)


@dataclass
class Split:
    train: Dataset
    test: Dataset
    seed: int


def _validate(ds: Dataset) -> Dataset:
    if not np.all(np.isfinite(ds.features)):
        raise ValueError("dataset contains non-finite feature values")
    labels = set(np.unique(ds.labels).tolist())
    if not labels <= {0, 1}:
        raise ValueError(f"labels must be in {{0, 1}}, found {sorted(labels)}")
    if ds.n < 2 or len(labels) < 2:
        raise ValueError("dataset needs at least two rows with both classes present")
    return ds


def load_csv(path: str) -> Dataset:
    """Read an unscaled dataset; the last column must be 'target' in {0, 1}."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 2 or header[-1].strip() != "target":
            raise ValueError(f"{path}: final column must be named 'target'")
        names = [h.strip() for h in header[:-1]]
        rows, labels = [], []
        for r, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise ValueError(f"{path}: row {r} has {len(rec)} cells, expected {len(header)}")
            vals = []
            for c, cell in enumerate(rec):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell at row {r}, column '{header[c]}'"
                    ) from None
            if vals[-1] not in (0.0, 1.0):
                raise ValueError(f"{path}: target at row {r} must be 0 or 1, got {vals[-1]}")
            rows.append(vals[:-1])
            labels.append(int(vals[-1]))
    ds = Dataset(np.asarray(rows, dtype=np.float64),
                 np.asarray(labels, dtype=np.int64), names)
    return _validate(ds)


def save_csv(ds: Dataset, path: str) -> None:
    names = ds.feature_names or [f"f{i}" for i in range(ds.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["target"])
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def fit_scale(ds: Dataset) -> Dataset:
    """Min-max scale every feature onto [0, 1], keeping the fitted scaler."""
    if ds.n < 1:
        raise ValueError("cannot scale an empty dataset")
    scaler = Scaler(ds.features.min(axis=0), ds.features.max(axis=0))
    return Dataset(scaler.transform(ds.features), ds.labels.copy(),
                   list(ds.feature_names), scaler)


def apply_scale(ds: Dataset, scaler: Scaler) -> Dataset:
    """Scale with an already-fitted scaler (e.g. the training split's)."""
    return Dataset(scaler.transform(ds.features), ds.labels.copy(),
                   list(ds.feature_names), scaler)


def split(ds: Dataset, test_fraction: float = 0.2, seed: int = 42) -> Split:
    """Deterministic shuffled split; same seed gives identical index sets."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(ds.n)
    n_test = min(max(int(round(ds.n * test_fraction)), 1), ds.n - 1)
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    return Split(ds.subset(train_idx), ds.subset(test_idx), seed)


def negatives(ds: Dataset, model) -> np.ndarray:
    """Ascending indices of rows the model classifies as the negative class."""
    probs = nn.predict_proba(model, ds.features)
    return np.flatnonzero(probs < 0.5)


def make_blobs(n_per_class: int, d: int, separation: float, noise: float,
               seed: int) -> Dataset:
    """Two Gaussian clusters split along the first axis, clipped to [0,1]^d.

    Class 0 is centered at 0.5 - separation/2 on the first coordinate and
    class 1 at 0.5 + separation/2; all remaining coordinates are centered
    at 0.5. `noise` is the per-coordinate standard deviation, so the Bayes
    boundary sits at x1 = 0.5 whenever separation dominates the noise.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = np.random.default_rng(seed)
    center0 = np.full(d, 0.5)
    center0[0] = 0.5 - separation / 2.0
    center1 = np.full(d, 0.5)
    center1[0] = 0.5 + separation / 2.0
    X0 = center0 + noise * rng.standard_normal((n_per_class, d))
    X1 = center1 + noise * rng.standard_normal((n_per_class, d))
    X = np.clip(np.vstack([X0, X1]), 0.0, 1.0)
    y = np.concatenate([np.zeros(n_per_class, dtype=np.int64),
                        np.ones(n_per_class, dtype=np.int64)])
    order = rng.permutation(2 * n_per_class)
    names = [f"f{i}" for i in range(d)]
    return _validate(Dataset(X[order], y[order], names))

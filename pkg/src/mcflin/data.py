"""Sparse dataset representation, svmlight parsing, and linear prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class SvmlightParseError(ValueError):
    """Malformed svmlight input; carries the 1-based line number."""

    def __init__(self, line_no, msg):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector: strictly increasing indices, finite values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and (np.any(idx[1:] <= idx[:-1]) or idx[0] < 0):
            raise ValueError("indices must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self):
        return self.indices.size

    def to_dense(self, dim):
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out

    @staticmethod
    def from_dense(x, tol=0.0):
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(np.abs(x) > tol)
        return SparseVector(idx, x[idx])


@dataclass(frozen=True)
class Dataset:
    """Binary classification corpus with labels in {-1, +1}."""

    dim: int
    examples: list
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.float64)
        if len(self.examples) != labels.size or labels.size < 1:
            raise ValueError("need at least one example and matching label count")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be exactly -1 or +1")
        for x in self.examples:
            if x.nnz and x.indices[-1] >= self.dim:
                raise ValueError("feature index exceeds declared dimension")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.examples)

    def to_csr(self):
        return _examples_to_csr(self.examples, self.dim)


@dataclass(frozen=True)
class MulticlassDataset:
    """Corpus with integer class labels 0..K-1."""

    dim: int
    examples: list
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.examples) != labels.size or labels.size < 1:
            raise ValueError("need at least one example and matching label count")
        if np.any(labels < 0):
            raise ValueError("class labels must be nonnegative integers")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.examples)

    def binarized(self, positive_class):
        """View with labels +1 for `positive_class`, -1 otherwise."""
        y = np.where(self.labels == positive_class, 1.0, -1.0)
        return Dataset(self.dim, self.examples, y)


@dataclass(frozen=True)
class AugmentedView:
    """Dataset with a constant offset feature appended at index base.dim.

    The offset feature is never corrupted and never regularized.
    """

    base: Dataset
    examples: list = field(init=False)

    def __post_init__(self):
        if isinstance(self.base, AugmentedView):
            raise ValueError("dataset is already offset-augmented")
        if self.base.dim == 0:
            raise ValueError("empty feature space")
        d = self.base.dim
        aug = [
            SparseVector(np.append(x.indices, d), np.append(x.values, 1.0))
            for x in self.base.examples
        ]
        object.__setattr__(self, "examples", aug)

    @property
    def dim(self):
        return self.base.dim + 1

    @property
    def offset_index(self):
        return self.base.dim

    @property
    def labels(self):
        return self.base.labels

    def __len__(self):
        return len(self.base)

    def to_csr(self):
        return _examples_to_csr(self.examples, self.dim)


def _examples_to_csr(examples, dim):
    indptr = np.zeros(len(examples) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([x.nnz for x in examples])
    if examples:
        indices = np.concatenate([x.indices for x in examples])
        data = np.concatenate([x.values for x in examples])
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(examples), dim))


def augment_with_offset(data):
    """Append a constant-1 feature at index D; rejects re-augmentation."""
    return AugmentedView(data)


def parse_svmlight(text, dim_hint=None, multiclass=False):
    """Parse svmlight-format text into a Dataset (or MulticlassDataset).

    File indices are 1-based; internal indices 0-based.  Binary labels 0 map
    to -1, 1 stays +1.  Duplicate indices within a line are rejected.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = text
    examples = []
    labels = []
    max_idx = -1
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise SvmlightParseError(line_no, f"bad label {tokens[0]!r}") from None
        if multiclass:
            if label != int(label) or label < 0:
                raise SvmlightParseError(line_no, f"bad class label {tokens[0]!r}")
            labels.append(int(label))
        else:
            if label not in (-1.0, 0.0, 1.0):
                raise SvmlightParseError(line_no, f"bad binary label {tokens[0]!r}")
            labels.append(-1.0 if label <= 0.0 else 1.0)
        idx_list = []
        val_list = []
        for tok in tokens[1:]:
            part = tok.split(":")
            if len(part) != 2:
                raise SvmlightParseError(line_no, f"bad feature token {tok!r}")
            try:
                idx = int(part[0])
                val = float(part[1])
            except ValueError:
                raise SvmlightParseError(line_no, f"bad feature token {tok!r}") from None
            if idx < 1:
                raise SvmlightParseError(line_no, f"feature index {idx} must be >= 1")
            if not np.isfinite(val):
                raise SvmlightParseError(line_no, f"non-finite value in {tok!r}")
            idx_list.append(idx - 1)
            val_list.append(val)
        order = np.argsort(idx_list, kind="stable")
        idx_arr = np.asarray(idx_list, dtype=np.int64)[order]
        val_arr = np.asarray(val_list, dtype=np.float64)[order]
        if idx_arr.size and np.any(idx_arr[1:] == idx_arr[:-1]):
            raise SvmlightParseError(line_no, "duplicate feature index")
        if idx_arr.size:
            max_idx = max(max_idx, int(idx_arr[-1]))
        examples.append(SparseVector(idx_arr, val_arr))
    if not examples:
        raise SvmlightParseError(0, "no examples found")
    dim = max_idx + 1
    if dim_hint is not None:
        dim = max(dim, dim_hint)
    cls = MulticlassDataset if multiclass else Dataset
    return cls(dim, examples, np.asarray(labels))


def serialize_svmlight(data):
    """Write a Dataset/MulticlassDataset back to svmlight text (1-based)."""
    lines = []
    for x, y in zip(data.examples, data.labels):
        if isinstance(data, MulticlassDataset):
            head = str(int(y))
        else:
            head = "+1" if y > 0 else "-1"
        feats = " ".join(f"{i + 1}:{v!r}" for i, v in zip(x.indices, x.values))
        lines.append(f"{head} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def decision_value(w, x):
    """w'x over the stored entries; w includes the offset as last coordinate."""
    if x.nnz and x.indices[-1] >= w.size:
        raise ValueError("feature index exceeds model dimension")
    return float(np.dot(w[x.indices], x.values))


def predict(model, x):
    """Sign of w'x + b; a tie at exactly zero predicts +1."""
    score = decision_value(model.w[: model.dim], x) + model.w[model.dim]
    return 1.0 if score >= 0.0 else -1.0

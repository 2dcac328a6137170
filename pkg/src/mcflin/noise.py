"""Corrupting distributions: analytic per-feature moments and sampling.

All supported corruption models are unbiased, so the mean of the corrupted
feature equals the clean value and only the variance enters the training
objectives.  Dropout and Poisson act on stored nonzeros only; Gaussian and
Laplace add noise on every coordinate of the ambient space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .data import SparseVector

KINDS = ("none", "dropout", "gaussian", "laplace", "poisson")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    q: float = 0.0        # dropout level, in [0, 1)
    sigma2: float = 0.0   # gaussian variance
    scale: float = 1.0    # laplace scale b

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "dropout" and not (0.0 <= self.q < 1.0):
            raise ValueError("dropout level must be in [0,1)")
        if self.kind == "gaussian" and self.sigma2 < 0.0:
            raise ValueError("gaussian variance must be >= 0")
        if self.kind == "laplace" and self.scale <= 0.0:
            raise ValueError("laplace scale must be > 0")

    @staticmethod
    def none():
        return NoiseSpec("none")

    @staticmethod
    def dropout(q):
        return NoiseSpec("dropout", q=q)

    @staticmethod
    def gaussian(sigma2):
        return NoiseSpec("gaussian", sigma2=sigma2)

    @staticmethod
    def laplace(scale):
        return NoiseSpec("laplace", scale=scale)

    @staticmethod
    def poisson():
        return NoiseSpec("poisson")

    def describe(self):
        if self.kind == "dropout":
            return f"dropout q={self.q:g}"
        if self.kind == "gaussian":
            return f"gaussian sigma2={self.sigma2:g}"
        if self.kind == "laplace":
            return f"laplace scale={self.scale:g}"
        return self.kind


@dataclass(frozen=True)
class CorruptionMoments:
    """Dense per-feature mean and variance of one corrupted example."""

    mean: np.ndarray
    variance: np.ndarray


def _check_poisson(values):
    if np.any(values < 0):
        raise ValueError("poisson corruption requires nonnegative features")


def moments(spec, x, dim, offset_index=None):
    """Analytic E[x~] and V[x~] for one example; offset coordinate exempt."""
    mean = x.to_dense(dim)
    var = np.zeros(dim)
    if spec.kind == "dropout":
        coef = spec.q / (1.0 - spec.q)
        var[x.indices] = coef * x.values**2
    elif spec.kind == "gaussian":
        var[:] = spec.sigma2
    elif spec.kind == "laplace":
        var[:] = 2.0 * spec.scale**2
    elif spec.kind == "poisson":
        _check_poisson(x.values)
        var[x.indices] = x.values
    if offset_index is not None:
        var[offset_index] = 0.0
    return CorruptionMoments(mean, var)


def sample(spec, x, dim, rng, offset_index=None):
    """One draw x~ ~ p(x~|x) as a SparseVector over the ambient space."""
    if spec.kind == "none":
        return x
    if spec.kind in ("dropout", "poisson"):
        values = x.values.copy()
        if spec.kind == "dropout":
            keep = rng.random(x.nnz) >= spec.q
            values = np.where(keep, values / (1.0 - spec.q), 0.0)
        else:
            _check_poisson(values)
            values = rng.poisson(values).astype(np.float64)
        if offset_index is not None:
            at_off = x.indices == offset_index
            values[at_off] = x.values[at_off]
        return SparseVector.from_dense(
            _scatter(x.indices, values, dim)
        )
    dense = x.to_dense(dim)
    if spec.kind == "gaussian":
        noise = rng.normal(0.0, np.sqrt(spec.sigma2), dim)
    else:
        noise = rng.laplace(0.0, spec.scale, dim)
    if offset_index is not None:
        noise[offset_index] = 0.0
    return SparseVector.from_dense(dense + noise)


def _scatter(indices, values, dim):
    out = np.zeros(dim)
    out[indices] = values
    return out


class MatrixMoments:
    """Vectorized variance access for a corpus stored as CSR means.

    `quad(w)` returns the per-example sum_d V_nd w_d^2; `weighted_colsum(a)`
    returns sum_n a_n V_nd per feature.  Both are the only variance
    reductions the IRLS objectives need.
    """

    def __init__(self, spec, X, offset_col=None):
        self.spec = spec
        self.X = X
        self.offset_col = offset_col
        self.n, self.d = X.shape
        self._vmat = None
        self._const = 0.0
        if spec.kind == "dropout" and spec.q > 0.0:
            self._vmat = X.multiply(X).tocsr() * (spec.q / (1.0 - spec.q))
        elif spec.kind == "poisson":
            _check_poisson(X.data)
            self._vmat = X.copy().tocsr()
        elif spec.kind == "gaussian":
            self._const = spec.sigma2
        elif spec.kind == "laplace":
            self._const = 2.0 * spec.scale**2
        if self._vmat is not None and offset_col is not None:
            v = self._vmat.tolil()
            v[:, offset_col] = 0.0
            self._vmat = v.tocsr()

    def quad(self, w):
        if self._vmat is not None:
            return np.asarray(self._vmat @ (w**2)).ravel()
        if self._const:
            w2 = w**2
            total = w2.sum()
            if self.offset_col is not None:
                total -= w2[self.offset_col]
            return np.full(self.n, self._const * total)
        return np.zeros(self.n)

    def weighted_colsum(self, a):
        if self._vmat is not None:
            return np.asarray(self._vmat.T @ a).ravel()
        if self._const:
            out = np.full(self.d, self._const * a.sum())
            if self.offset_col is not None:
                out[self.offset_col] = 0.0
            return out
        return np.zeros(self.d)

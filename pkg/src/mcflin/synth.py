"""Reproducible synthetic corpora for experiments and tests."""

from __future__ import annotations

import numpy as np

from .data import Dataset, MulticlassDataset, SparseVector


def make_blobs(n_train, n_test, dim, seed, separation=1.5):
    """Two Gaussian blobs: linearly separable with overlap."""
    if n_train < 2 or n_test < 1 or dim < 1:
        raise ValueError("invalid sizes")
    rng = np.random.default_rng(seed)
    center = np.full(dim, separation / np.sqrt(dim))

    def draw(n):
        labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        examples = []
        for y in labels:
            x = y * center + rng.normal(0.0, 1.0, dim)
            examples.append(SparseVector.from_dense(x))
        return Dataset(dim, examples, labels)

    return draw(n_train), draw(n_test)


def make_multiclass_blobs(n_train, n_test, dim, n_classes, seed, separation=4.0):
    """Well-separated Gaussian blobs with integer class labels."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, (n_classes, dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)

    def draw(n):
        labels = np.arange(n) % n_classes
        examples = []
        for y in labels:
            x = centers[y] + rng.normal(0.0, 1.0, dim)
            examples.append(SparseVector.from_dense(x))
        return MulticlassDataset(dim, examples, labels)

    return draw(n_train), draw(n_test)


def make_redundant_sparse(n_train, n_test, seed, n_groups=10, copies=20,
                          p_active=0.15, n_fragile=2, fragile_value=4.0,
                          signal=1.0, noise_sd=0.8, n_noise=40):
    """Sparse binary data whose signal is spread redundantly across features.

    Each of `n_groups` signal groups owns `copies` coordinates; per example
    each copy is active independently with probability `p_active` and carries
    a noisy label-aligned value.  A few `fragile` features are present in
    every example with a large clean value, so a model trained without
    corruption leans on them and suffers once test features are deleted.
    Extra pure-noise coordinates are occasionally active.
    """
    if n_train < 2 or n_test < 1:
        raise ValueError("invalid sizes")
    rng = np.random.default_rng(seed)
    dim = n_groups * copies + n_fragile + n_noise
    fragile_start = n_groups * copies
    noise_start = fragile_start + n_fragile

    def draw(n):
        labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        examples = []
        for y in labels:
            dense = np.zeros(dim)
            active = rng.random(n_groups * copies) < p_active
            vals = y * signal + rng.normal(0.0, noise_sd, n_groups * copies)
            dense[:fragile_start] = np.where(active, vals, 0.0)
            dense[fragile_start:noise_start] = y * fragile_value
            noise_active = rng.random(n_noise) < p_active
            noise_vals = rng.normal(0.0, 1.0, n_noise)
            dense[noise_start:] = np.where(noise_active, noise_vals, 0.0)
            examples.append(SparseVector.from_dense(dense))
        return Dataset(dim, examples, labels)

    return draw(n_train), draw(n_test)

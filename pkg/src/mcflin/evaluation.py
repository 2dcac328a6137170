"""Error measurement, test-time feature deletion, and cross-validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, MulticlassDataset, SparseVector, predict
from .trainers import OvaModel
from .wls import ModelParams


@dataclass(frozen=True)
class EvalResult:
    error_rate: float
    n_test: int
    per_class_errors: dict | None = None


@dataclass(frozen=True)
class DeletionSchedule:
    fractions: tuple
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if any(not (0.0 <= f <= 1.0) for f in fr):
            raise ValueError("deletion fractions must lie in [0,1]")
        if list(fr) != sorted(fr):
            raise ValueError("deletion fractions must be sorted")
        object.__setattr__(self, "fractions", fr)


@dataclass(frozen=True)
class GridSpec:
    c_grid: tuple
    q_grid: tuple
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.c_grid or not self.q_grid:
            raise ValueError("grids must be nonempty")
        if any(not (0.0 <= q < 1.0) for q in self.q_grid):
            raise ValueError("dropout levels must lie in [0,1)")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        object.__setattr__(self, "q_grid", tuple(float(q) for q in self.q_grid))


def evaluate(model, test):
    """Fraction of misclassified test examples."""
    if len(test) == 0:
        raise ValueError("empty test set")
    errors = 0
    per_class = {}
    for x, y in zip(test.examples, test.labels):
        if isinstance(model, OvaModel):
            wrong = model.predict(x) != int(y)
        else:
            wrong = predict(model, x) != y
        if wrong:
            errors += 1
            key = int(y) if isinstance(test, MulticlassDataset) else int(y)
            per_class[key] = per_class.get(key, 0) + 1
    return EvalResult(errors / len(test), len(test), per_class)


def delete_features(test, fraction, rng):
    """Independently zero each stored nonzero with probability `fraction`."""
    if not (0.0 <= fraction <= 1.0):
        raise ValueError("deletion fraction must lie in [0,1]")
    if fraction == 0.0:
        return test
    examples = []
    for x in test.examples:
        keep = rng.random(x.nnz) >= fraction
        examples.append(SparseVector(x.indices[keep], x.values[keep]))
    cls = type(test)
    return cls(test.dim, examples, test.labels.copy())


def stratified_folds(labels, folds, seed):
    """Per-class round-robin fold assignment after a seeded shuffle."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assignment = np.zeros(labels.size, dtype=np.int64)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return assignment


def _subset(data, mask):
    cls = type(data)
    examples = [x for x, m in zip(data.examples, mask) if m]
    return cls(data.dim, examples, data.labels[np.asarray(mask, dtype=bool)])


def cross_validate(fit, data, grid):
    """Stratified k-fold mean error over the (c, q) grid.

    `fit(train_data, c, q) -> model`.  Ties prefer smaller q, then smaller c.
    Returns (best (c, q), list of (c, q, mean_error) rows).
    """
    if grid.folds > len(data):
        raise ValueError("more folds than examples")
    assignment = stratified_folds(data.labels, grid.folds, grid.seed)
    for k in range(grid.folds):
        fold_labels = set(np.unique(data.labels[assignment == k]).tolist())
        if len(fold_labels) < len(set(np.unique(data.labels).tolist())):
            raise ValueError(f"fold {k} is missing a class; reduce fold count")
    table = []
    for c in grid.c_grid:
        for q in grid.q_grid:
            errs = []
            for k in range(grid.folds):
                train = _subset(data, assignment != k)
                held = _subset(data, assignment == k)
                model = fit(train, c, q)
                errs.append(evaluate(model, held).error_rate)
            table.append((c, q, float(np.mean(errs))))
    best = min(table, key=lambda row: (row[2], row[1], row[0]))
    return (best[0], best[1]), table


def validation_split(data, fraction, seed):
    """Stratified (fit, held-out) split with `fraction` held out."""
    labels = np.asarray(data.labels)
    rng = np.random.default_rng(seed)
    held = np.zeros(labels.size, dtype=bool)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_held = max(1, int(round(fraction * idx.size)))
        held[idx[:n_held]] = True
    return _subset(data, ~held), _subset(data, held)


def nightmare_curve(trainers, train, test, sched, grid, val_fraction=0.2):
    """Robustness-to-deletion protocol.

    For each deletion fraction: pick (c, q) per trainer on a held-out
    validation split deleted at the same fraction, retrain on the full
    training set, and evaluate on the test set deleted at that fraction.
    `trainers` maps name -> fit(train_data, c, q) -> model.  Returns rows
    (trainer, fraction, error, c, q).
    """
    rows = []
    fit_part, val_part = validation_split(train, val_fraction, sched.seed)
    for fraction in sched.fractions:
        rng = np.random.default_rng((sched.seed, int(round(fraction * 1e6))))
        val_deleted = delete_features(val_part, fraction,
                                      np.random.default_rng(rng.integers(2**63)))
        test_deleted = delete_features(test, fraction,
                                       np.random.default_rng(rng.integers(2**63)))
        for name in sorted(trainers):
            fit = trainers[name]
            best = None
            for c in grid.c_grid:
                for q in grid.q_grid:
                    model = fit(fit_part, c, q)
                    err = evaluate(model, val_deleted).error_rate
                    key = (err, q, c)
                    if best is None or key < best[0]:
                        best = (key, c, q)
            _, c_best, q_best = best
            final = fit(train, c_best, q_best)
            err = evaluate(final, test_deleted).error_rate
            rows.append((name, fraction, err, c_best, q_best))
    return rows

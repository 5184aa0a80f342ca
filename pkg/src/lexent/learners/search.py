"""Hyperparameter grids and exhaustive validation-based grid search."""

from __future__ import annotations

import hashlib
import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..errors import SearchError, TrainError
from ..evaluation import score
from .base import KSIM_SVM, LIN_SVM, LR, MLP, RBF_SVM, TrainedModel, canonical_family, predict
from .kernels import (
    KSIMKernel, LinearKernel, RBFKernel, gram_matrix, ksim_from_cosines, slot_cosines,
)
from .logistic import train_logistic_regression
from .mlp import train_mlp
from .svm import DEFAULT_GRAM_LIMIT, train_svm

log = logging.getLogger(__name__)


def _pow2(exps):
    return [float(2.0**e) for e in exps]


DEFAULT_AXES: dict[str, dict[str, list]] = {
    LR: {"C": _pow2([-1, 1, 3, 5])},
    LIN_SVM: {"C": _pow2([-5, -3, -1, 1])},
    RBF_SVM: {"C": _pow2([1, 3, 5, 7]), "gamma": _pow2([-7, -5, -3, -1])},
    MLP: {"hidden": [50, 100]},
    KSIM_SVM: {
        "C": _pow2(range(-7, 8, 2)),
        "alpha": [round(0.1 * i, 1) for i in range(11)],
    },
}

# the hyperparameter, if any, that changes the Gram matrix
KERNEL_AXIS = {LIN_SVM: None, RBF_SVM: "gamma", KSIM_SVM: "alpha"}


@dataclass
class HyperGrid:
    family: str
    axes: dict[str, list]

    def __post_init__(self):
        self.family = canonical_family(self.family)
        if not self.axes or any(len(v) == 0 for v in self.axes.values()):
            raise SearchError("grid needs at least one value on every axis")

    def points(self) -> list[dict[str, Any]]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]

    def to_dict(self):
        return {"family": self.family, "axes": {k: list(v) for k, v in self.axes.items()}}


def default_grid(family: str) -> HyperGrid:
    family = canonical_family(family)
    return HyperGrid(family, {k: list(v) for k, v in DEFAULT_AXES[family].items()})


def kernel_for(family: str, params: dict):
    if family == LIN_SVM:
        return LinearKernel()
    if family == RBF_SVM:
        return RBFKernel(float(params["gamma"]))
    if family == KSIM_SVM:
        return KSIMKernel(float(params["alpha"]))
    return None


def fit(family, params, X, y, seed=0, X_val=None, y_val=None, classes=None,
        gram=None, metric="weighted_f1") -> TrainedModel:
    """Train one model of ``family`` at one hyperparameter point."""
    family = canonical_family(family)
    if family == LR:
        return train_logistic_regression(X, y, params["C"], seed=seed, classes=classes)
    if family == MLP:
        return train_mlp(X, y, params["hidden"], seed=seed, val_features=X_val,
                         val_labels=y_val, classes=classes, metric=metric)
    return train_svm(X, y, params["C"], kernel=kernel_for(family, params), seed=seed,
                     classes=classes, gram=gram)


# above this many rows KSIM Gram matrices are rebuilt per alpha instead
COSINE_CACHE_LIMIT = 4000


class GramCache:
    """Training Gram matrices, optionally persisted as .npy under ``directory``.

    Keys combine a caller-supplied data key (hash of the training rows) with
    the kernel description, so C never enters the key.
    """

    def __init__(self, directory=None, limit: int = DEFAULT_GRAM_LIMIT):
        self.directory = directory
        self.limit = limit
        self._cosines: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def _path(self, key):
        return None if self.directory is None else os.path.join(self.directory, f"gram-{key}.npy")

    def get(self, data_key: str, kernel, X: np.ndarray):
        n = X.shape[0]
        if n > self.limit:
            return None
        key = hashlib.sha256(f"{data_key}|{sorted(kernel.to_dict().items())}".encode()).hexdigest()[:24]
        path = self._path(key)
        if path and os.path.exists(path):
            return np.load(path, mmap_mode=None)
        dtype = np.float32 if n > 4000 else np.float64
        if isinstance(kernel, KSIMKernel) and n <= COSINE_CACHE_LIMIT:
            # the slot cosines do not depend on alpha; reuse them across the alpha axis
            if data_key not in self._cosines:
                self._cosines = {data_key: slot_cosines(X)}
            cx, cy = self._cosines[data_key]
            gram = ksim_from_cosines(cx, cy, kernel.alpha).astype(dtype)
            np.fill_diagonal(gram, 1.0)
        else:
            gram = gram_matrix(kernel, X, dtype)
        if path:
            os.makedirs(self.directory, exist_ok=True)
            tmp = path + ".tmp.npy"
            np.save(tmp, gram)
            os.replace(tmp, path)
        return gram


def matrix_key(X: np.ndarray) -> str:
    X = np.ascontiguousarray(X, dtype=np.float64)
    h = hashlib.sha256()
    h.update(str(X.shape).encode())
    h.update(X.tobytes())
    return h.hexdigest()[:24]


@dataclass
class SearchResult:
    best_params: dict[str, Any]
    model: TrainedModel
    validation_score: float
    trials: list[dict[str, Any]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def grid_search(
    family,
    grid: HyperGrid | None,
    train: tuple[np.ndarray, list],
    validation: tuple[np.ndarray, list],
    metric: str = "weighted_f1",
    seed: int = 0,
    classes=None,
    workers: int = 1,
    gram_cache: GramCache | None = None,
    trainer: Callable | None = None,
) -> SearchResult:
    """Train every grid point, keep the best validation score.

    Ties go to the earliest point in enumeration order (axes in declared
    order, values in listed order). Points whose training raises
    ``TrainError`` are skipped with a warning.
    """
    family = canonical_family(family)
    grid = grid or default_grid(family)
    points = grid.points()
    if not points:
        raise SearchError("empty grid")
    X, y = np.asarray(train[0], dtype=np.float64), list(train[1])
    Xv, yv = np.asarray(validation[0], dtype=np.float64), list(validation[1])
    if not yv:
        raise SearchError("empty validation set")
    if classes is None:
        classes = sorted(set(y) | set(yv))
    classes = tuple(classes)
    trainer = trainer or fit
    gram_cache = gram_cache or GramCache()
    data_key = matrix_key(X) if family in KERNEL_AXIS else ""

    # kernel families: one Gram matrix per kernel setting, shared across C
    groups: dict[Any, list[int]] = {}
    axis = KERNEL_AXIS.get(family)
    for idx, p in enumerate(points):
        groups.setdefault(p.get(axis) if axis else None, []).append(idx)

    results: list[tuple[float, TrainedModel | None, str | None]] = [None] * len(points)

    def run(idx, gram):
        p = points[idx]
        try:
            model = trainer(family, p, X, y, seed=seed, X_val=Xv, y_val=yv,
                            classes=classes, gram=gram, metric=metric)
        except TrainError as exc:
            return idx, (-np.inf, None, f"{p}: {exc}")
        val = score(yv, predict(model, Xv), classes).metric(metric)
        return idx, (val, model, None)

    for _, members in groups.items():
        gram = None
        if family in KERNEL_AXIS and trainer is fit:
            gram = gram_cache.get(data_key, kernel_for(family, points[members[0]]), X)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for idx, res in pool.map(lambda i: run(i, gram), members):
                    results[idx] = res
        else:
            for i in members:
                idx, res = run(i, gram)
                results[idx] = res
        del gram

    warnings = [r[2] for r in results if r[2]]
    for w in warnings:
        log.warning("grid point skipped: %s", w)
    ok = [i for i, r in enumerate(results) if r[1] is not None]
    if not ok:
        raise SearchError(f"every grid point failed: {warnings}")
    best = max(ok, key=lambda i: (results[i][0], -i))
    trials = [
        {"params": points[i], "validation_score": None if results[i][1] is None else results[i][0],
         "error": results[i][2]}
        for i in range(len(points))
    ]
    return SearchResult(points[best], results[best][1], float(results[best][0]), trials, warnings)

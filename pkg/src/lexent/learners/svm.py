"""One-vs-rest soft-margin SVMs over linear, RBF, KSIM or precomputed kernels."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import TrainError
from .base import KSIM_SVM, LIN_SVM, RBF_SVM, TrainedModel, encode_labels
from .kernels import KSIMKernel, LinearKernel, RBFKernel, gram_matrix
from .smo import RowCache, solve_binary

log = logging.getLogger(__name__)

KKT_TOL = 1e-3

# above this many training rows the Gram matrix is served row by row
DEFAULT_GRAM_LIMIT = 20_000


def resolve_kernel(kernel):
    if kernel is None or kernel == "linear":
        return LinearKernel()
    if kernel == "precomputed":
        return "precomputed"
    if isinstance(kernel, (LinearKernel, RBFKernel, KSIMKernel)):
        return kernel
    if isinstance(kernel, tuple) and kernel[0] == "rbf":
        return RBFKernel(float(kernel[1]))
    if isinstance(kernel, tuple) and kernel[0] == "ksim":
        return KSIMKernel(float(kernel[1]))
    raise TrainError(f"unsupported kernel {kernel!r}")


def _family_for(kernel):
    if isinstance(kernel, RBFKernel):
        return RBF_SVM
    if isinstance(kernel, KSIMKernel):
        return KSIM_SVM
    return LIN_SVM


def train_svm(
    features,
    labels,
    C: float,
    kernel="linear",
    seed: int = 0,
    classes=None,
    gram: np.ndarray | None = None,
    gram_limit: int = DEFAULT_GRAM_LIMIT,
    tol: float = KKT_TOL,
    family: str | None = None,
) -> TrainedModel:
    """Fit one binary SVM per class (class vs rest).

    ``kernel`` is ``"linear"``, ``"precomputed"`` (then ``features`` is the
    n x n Gram matrix), an ``RBFKernel``/``KSIMKernel`` or ``("rbf", gamma)``.
    A ready Gram matrix can be passed as ``gram`` to skip recomputation.
    ``family`` labels precomputed-kernel models (default LIN_SVM).
    The solver is deterministic, so ``seed`` is only recorded.
    """
    if not C > 0:
        raise TrainError(f"C must be positive, got {C}")
    kernel = resolve_kernel(kernel)
    X = np.asarray(features, dtype=np.float64)
    classes, codes = encode_labels(labels, classes)
    if len(np.unique(codes)) < 2:
        raise TrainError("need at least two distinct labels")
    n = X.shape[0]

    if kernel == "precomputed":
        if X.shape != (n, n):
            raise TrainError("precomputed kernel must be a square matrix")
        gram = X
    elif gram is None and n <= gram_limit:
        gram = gram_matrix(kernel, X, np.float32 if n > 4000 else np.float64)

    if gram is not None:
        diag = np.diagonal(gram).astype(np.float64)
        row = RowCache(lambda i: gram[i], max_rows=256)
    else:
        diag = np.einsum("ij,ij->i", X, X) if isinstance(kernel, LinearKernel) else np.ones(n)
        row = RowCache(lambda i: kernel(X, X[i : i + 1])[:, 0])

    k = len(classes)
    alphas = np.zeros((k, n))
    intercept = np.zeros(k)
    info = {"iterations": [], "kkt_gap": [], "converged": [], "warnings": []}
    for c in range(k):
        y = np.where(codes == c, 1.0, -1.0)
        if np.all(y < 0):
            # class absent from this training set: it never wins
            intercept[c] = -1e30
            info["iterations"].append(0)
            info["kkt_gap"].append(0.0)
            info["converged"].append(True)
            continue
        sol = solve_binary(row, diag, y, C, tol=tol)
        alphas[c] = sol.alpha * y
        intercept[c] = -sol.rho
        info["iterations"].append(sol.iterations)
        info["kkt_gap"].append(sol.kkt_gap)
        info["converged"].append(bool(sol.converged))
        if sol.non_psd:
            msg = f"class {classes[c]!r}: kernel matrix is not positive semi-definite"
            info["warnings"].append(msg)
            log.warning(msg)
        if not sol.converged:
            info["warnings"].append(f"class {classes[c]!r}: iteration cap reached")

    hyper = {"C": float(C)}
    if kernel == "precomputed":
        sv = np.flatnonzero(np.any(alphas != 0, axis=0))
        params = {
            "support_indices": sv.astype(np.int64),
            "dual_coef": np.ascontiguousarray(alphas[:, sv]),
            "intercept": intercept,
        }
        return TrainedModel(family or LIN_SVM, hyper, classes, params, seed,
                            {"name": "precomputed"}, info)

    family = _family_for(kernel)
    if isinstance(kernel, LinearKernel):
        params = {"coef": alphas @ X, "intercept": intercept}
        return TrainedModel(family, hyper, classes, params, seed, None, info)
    if isinstance(kernel, RBFKernel):
        hyper["gamma"] = kernel.gamma
    else:
        hyper["alpha"] = kernel.alpha
    sv = np.flatnonzero(np.any(alphas != 0, axis=0))
    params = {
        "support": X[sv].copy(),
        "support_indices": sv.astype(np.int64),
        "dual_coef": np.ascontiguousarray(alphas[:, sv]),
        "intercept": intercept,
    }
    return TrainedModel(family, hyper, classes, params, seed, kernel.to_dict(), info)

"""One-vs-rest L2-regularized logistic regression.

Each binary problem minimizes
    1/2 ||w||^2 + C * sum_i log(1 + exp(-y_i (w.x_i + b)))
with a trust-region Newton-CG method; the bias is not regularized.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from ..errors import TrainError
from .base import LR, TrainedModel, encode_labels

GTOL = 1e-5
MAX_ITER = 1000


def logistic_objective(theta, X, y, C):
    """Objective and gradient for one binary problem; ``theta = [w, b]``."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    yz = y * z
    f = 0.5 * (w @ w) + C * np.sum(np.logaddexp(0.0, -yz))
    r = -C * y * expit(-yz)
    grad = np.empty_like(theta)
    grad[:-1] = w + X.T @ r
    grad[-1] = r.sum()
    return f, grad


def _hessp(theta, v, X, y, C):
    z = X @ theta[:-1] + theta[-1]
    s = expit(y * z)
    dw = C * s * (1.0 - s)
    u = X @ v[:-1] + v[-1]
    out = np.empty_like(v)
    out[:-1] = v[:-1] + X.T @ (dw * u)
    out[-1] = np.sum(dw * u)
    return out


def fit_binary(X, y, C, gtol=GTOL, max_iter=MAX_ITER):
    """Returns ``(theta, trace)``; trace holds the objective after every accepted step."""
    theta0 = np.zeros(X.shape[1] + 1)
    trace = [logistic_objective(theta0, X, y, C)[0]]

    def record(xk, *_):
        trace.append(logistic_objective(xk, X, y, C)[0])

    res = minimize(
        logistic_objective,
        theta0,
        args=(X, y, C),
        jac=True,
        hessp=_hessp,
        method="trust-ncg",
        callback=record,
        options={"gtol": gtol, "maxiter": max_iter},
    )
    gnorm = float(np.linalg.norm(logistic_objective(res.x, X, y, C)[1]))
    return res.x, {"objective": trace, "grad_norm": gnorm, "iterations": int(res.nit)}


def train_logistic_regression(features, labels, C: float, seed: int = 0, classes=None) -> TrainedModel:
    if not C > 0:
        raise TrainError(f"C must be positive, got {C}")
    X = np.asarray(features, dtype=np.float64)
    classes, codes = encode_labels(labels, classes)
    if len(np.unique(codes)) < 2:
        raise TrainError("need at least two distinct labels")
    k, D = len(classes), X.shape[1]
    coef = np.zeros((k, D))
    intercept = np.zeros(k)
    info = {"grad_norm": [], "iterations": []}
    for c in range(k):
        y = np.where(codes == c, 1.0, -1.0)
        if np.all(y < 0):
            intercept[c] = -1e30
            info["grad_norm"].append(0.0)
            info["iterations"].append(0)
            continue
        theta, stats = fit_binary(X, y, C)
        coef[c], intercept[c] = theta[:-1], theta[-1]
        info["grad_norm"].append(stats["grad_norm"])
        info["iterations"].append(stats["iterations"])
    return TrainedModel(LR, {"C": float(C)}, classes,
                        {"coef": coef, "intercept": intercept}, seed, None, info)

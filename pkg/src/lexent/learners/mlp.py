"""Single-hidden-layer perceptron: ReLU hidden layer, softmax output.

Trained with Adam on mini-batches of 32, learning rate 1e-3, at most 100
epochs, early stopping on a validation metric with patience 10. The
parameters of the best validation epoch are restored; at equal metric the
lower validation loss wins.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainError
from ..evaluation import f1_from_codes
from .base import MLP, TrainedModel, encode_labels

LEARNING_RATE = 1e-3
BATCH_SIZE = 32
MAX_EPOCHS = 100
PATIENCE = 10
BETA1, BETA2, EPS = 0.9, 0.999, 1e-8

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def init_params(n_in, hidden, n_out, rng):
    def glorot(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    return {
        "W1": glorot(n_in, hidden),
        "b1": np.zeros(hidden),
        "W2": glorot(hidden, n_out),
        "b2": np.zeros(n_out),
    }


def forward(params, X):
    pre = X @ params["W1"] + params["b1"]
    H = np.maximum(pre, 0.0)
    logits = H @ params["W2"] + params["b2"]
    return pre, H, logits


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grad(params, X, codes):
    """Mean cross-entropy and its gradient with respect to every parameter."""
    n = X.shape[0]
    pre, H, logits = forward(params, X)
    logp = _log_softmax(logits)
    loss = -logp[np.arange(n), codes].mean()
    delta = np.exp(logp)
    delta[np.arange(n), codes] -= 1.0
    delta /= n
    grads = {"W2": H.T @ delta, "b2": delta.sum(axis=0)}
    dH = delta @ params["W2"].T
    dH[pre <= 0] = 0.0
    grads["W1"] = X.T @ dH
    grads["b1"] = dH.sum(axis=0)
    return float(loss), grads


def train_mlp(
    features,
    labels,
    hidden: int,
    seed: int = 0,
    val_features=None,
    val_labels=None,
    classes=None,
    metric: str = "weighted_f1",
    max_epochs: int = MAX_EPOCHS,
    patience: int = PATIENCE,
    batch_size: int = BATCH_SIZE,
    learning_rate: float = LEARNING_RATE,
) -> TrainedModel:
    if val_features is None or val_labels is None or len(val_labels) == 0:
        raise TrainError("MLP training needs a nonempty validation set")
    if max_epochs > MAX_EPOCHS:
        raise TrainError(f"at most {MAX_EPOCHS} epochs")
    X = np.asarray(features, dtype=np.float64)
    Xv = np.asarray(val_features, dtype=np.float64)
    classes, codes = encode_labels(labels, classes)
    _, vcodes = encode_labels(val_labels, classes)
    if len(np.unique(codes)) < 2:
        raise TrainError("need at least two distinct labels")
    k = len(classes)

    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], int(hidden), k, rng)
    m = {name: np.zeros_like(p) for name, p in params.items()}
    v = {name: np.zeros_like(p) for name, p in params.items()}
    step = 0

    best_score = (-np.inf, -np.inf)
    best = {name: p.copy() for name, p in params.items()}
    best_epoch = 0
    history = []
    stale = 0
    epochs_run = 0
    n = X.shape[0]
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            _, grads = loss_and_grad(params, X[idx], codes[idx])
            step += 1
            for name in PARAM_NAMES:
                g = grads[name]
                m[name] = BETA1 * m[name] + (1 - BETA1) * g
                v[name] = BETA2 * v[name] + (1 - BETA2) * g * g
                mhat = m[name] / (1 - BETA1**step)
                vhat = v[name] / (1 - BETA2**step)
                params[name] -= learning_rate * mhat / (np.sqrt(vhat) + EPS)
        epochs_run = epoch
        logits = forward(params, Xv)[2]
        score = f1_from_codes(vcodes, np.argmax(logits, axis=1), k, metric)
        val_loss = -_log_softmax(logits)[np.arange(len(vcodes)), vcodes].mean()
        history.append(float(score))
        # equal metric with lower validation loss still counts as progress
        if (score, -val_loss) > best_score:
            best_score, best_epoch, stale = (score, -val_loss), epoch, 0
            best = {name: p.copy() for name, p in params.items()}
        else:
            stale += 1
            if stale >= patience:
                break

    info = {
        "epochs_run": epochs_run,
        "best_epoch": best_epoch,
        "validation_history": history,
        "optimizer": "adam",
        "batch_size": batch_size,
        "learning_rate": learning_rate,
        "patience": patience,
        "activation": "relu",
        "early_stopping_metric": metric,
    }
    return TrainedModel(MLP, {"hidden": int(hidden)}, classes, best, seed, None, info)

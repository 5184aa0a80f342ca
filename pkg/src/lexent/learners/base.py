"""Fitted-model container, decision rules and the JSON model format."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DimensionError
from .kernels import kernel_from_dict

LR = "LR"
LIN_SVM = "LIN_SVM"
RBF_SVM = "RBF_SVM"
MLP = "MLP"
KSIM_SVM = "KSIM_SVM"
FAMILIES = (LR, LIN_SVM, RBF_SVM, MLP, KSIM_SVM)

LINEAR_FAMILIES = (LR, LIN_SVM)
KERNEL_FAMILIES = (RBF_SVM, KSIM_SVM)

MODEL_FORMAT = "lexent-model"
MODEL_VERSION = 1

_FAMILY_ALIASES = {
    "lr": LR, "logreg": LR, "lin": LIN_SVM, "lin_svm": LIN_SVM, "linear": LIN_SVM,
    "rbf": RBF_SVM, "rbf_svm": RBF_SVM, "mlp": MLP, "ksim": KSIM_SVM, "ksim_svm": KSIM_SVM,
}


def canonical_family(name: str) -> str:
    key = name.strip().lower()
    if key not in _FAMILY_ALIASES:
        raise ValueError(f"unknown classifier family {name!r}")
    return _FAMILY_ALIASES[key]


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted one-vs-rest (or softmax, for MLP) multiclass predictor.

    ``parameters`` by family:
      linear families: ``coef`` (k, D), ``intercept`` (k,)
      kernel families: ``support`` (m, D) rows, ``support_indices`` (m,),
        ``dual_coef`` (k, m) signed, ``intercept`` (k,)
      MLP: ``W1``, ``b1``, ``W2``, ``b2``
    """

    family: str
    hyperparameters: dict[str, Any]
    classes: tuple[str, ...]
    parameters: dict[str, np.ndarray]
    training_seed: int = 0
    kernel: dict | None = None
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        p = self.parameters
        if "coef" in p:
            return p["coef"].shape[1]
        if "support" in p:
            return p["support"].shape[1]
        return p["W1"].shape[0]

    @property
    def parameter_count(self) -> int:
        return sum(int(np.asarray(v).size) for k, v in self.parameters.items()
                   if k not in ("support_indices",))


_BLOCK = 1024


def decision_function(model: TrainedModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(0 if X.size == 0 else 1, -1)
    p = model.parameters
    if X.shape[0] == 0:
        return np.zeros((0, len(model.classes)))
    if model.kernel is not None and model.kernel.get("name") == "precomputed":
        # rows are kernel values against the full training set
        idx = p["support_indices"]
        if X.shape[1] <= int(idx.max(initial=-1)):
            raise DimensionError("precomputed kernel matrix has too few columns")
        return X[:, idx] @ p["dual_coef"].T + p["intercept"]
    if X.shape[1] != model.feature_dim:
        raise DimensionError(
            f"model expects {model.feature_dim} features, got {X.shape[1]}"
        )
    if "coef" in p:
        return X @ p["coef"].T + p["intercept"]
    if "support" in p:
        kernel = kernel_from_dict(model.kernel)
        # row blocks bound the size of the test-by-support kernel matrix
        out = np.empty((X.shape[0], len(model.classes)))
        for start in range(0, X.shape[0], _BLOCK):
            K = kernel(X[start : start + _BLOCK], p["support"])
            out[start : start + _BLOCK] = K @ p["dual_coef"].T + p["intercept"]
        return out
    H = np.maximum(X @ p["W1"] + p["b1"], 0.0)
    return H @ p["W2"] + p["b2"]


def predict(model: TrainedModel, features) -> list[str]:
    """One label per row; argmax of decision values, ties to the earlier class."""
    scores = decision_function(model, features)
    if scores.shape[0] == 0:
        return []
    return [model.classes[i] for i in np.argmax(scores, axis=1)]


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a)
    dtype = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
    return {
        "dtype": dtype.str,
        "shape": list(a.shape),
        "data": base64.b64encode(a.astype(dtype).tobytes()).decode("ascii"),
    }


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "family": model.family,
        "hyperparameters": model.hyperparameters,
        "classes": list(model.classes),
        "training_seed": model.training_seed,
        "kernel": model.kernel,
        "info": model.info,
        "parameters": {k: _encode_array(v) for k, v in sorted(model.parameters.items())},
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a serialized lexent model")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    return TrainedModel(
        family=d["family"],
        hyperparameters=d["hyperparameters"],
        classes=tuple(d["classes"]),
        parameters={k: _decode_array(v) for k, v in d["parameters"].items()},
        training_seed=d["training_seed"],
        kernel=d["kernel"],
        info=d.get("info", {}),
    )


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def encode_labels(labels, classes=None):
    """Map labels to integer codes over ``classes`` (default: sorted unique labels)."""
    labels = list(labels)
    if classes is None:
        classes = sorted(set(labels))
    classes = tuple(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        codes = np.array([lookup[l] for l in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not among classes {classes}") from None
    return classes, codes

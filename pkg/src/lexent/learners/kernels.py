"""Kernel functions: linear, Gaussian (RBF) and the KSIM pair kernel.

KSIM compares two word pairs slot by slot. Pair rows are stored as the raw
concatenation ``[v_x | v_y]``; the kernel splits each row in half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KernelError


def _sq_dists(A, B, same=False):
    an = np.einsum("ij,ij->i", A, A)
    bn = an if same else np.einsum("ij,ij->i", B, B)
    D = an[:, None] + bn[None, :] - 2.0 * (A @ B.T)
    np.maximum(D, 0.0, out=D)
    if same:
        np.fill_diagonal(D, 0.0)
    return D


@dataclass(frozen=True)
class LinearKernel:
    name = "linear"

    def __call__(self, A, B=None):
        A = np.asarray(A, dtype=np.float64)
        B = A if B is None else np.asarray(B, dtype=np.float64)
        return A @ B.T

    def to_dict(self):
        return {"name": "linear"}


@dataclass(frozen=True)
class RBFKernel:
    gamma: float
    name = "rbf"

    def __post_init__(self):
        if not self.gamma > 0:
            raise KernelError("rbf gamma must be positive")

    def __call__(self, A, B=None):
        A = np.asarray(A, dtype=np.float64)
        same = B is None
        B = A if same else np.asarray(B, dtype=np.float64)
        D = _sq_dists(A, B, same=same)
        D *= -self.gamma
        return np.exp(D, out=D)

    def to_dict(self):
        return {"name": "rbf", "gamma": self.gamma}


def _unit_rows(M):
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        raise KernelError("zero vector: cosine similarity undefined")
    return M / norms[:, None]


def slot_cosines(A, B=None):
    """Cosine matrices between x-slots and between y-slots of pair rows."""
    A = np.asarray(A, dtype=np.float64)
    d = A.shape[1] // 2
    if A.shape[1] != 2 * d:
        raise KernelError("pair rows must have even length [v_x | v_y]")
    Ax, Ay = _unit_rows(A[:, :d]), _unit_rows(A[:, d:])
    if B is None:
        Bx, By = Ax, Ay
    else:
        B = np.asarray(B, dtype=np.float64)
        if B.shape[1] != A.shape[1]:
            raise KernelError("pair rows of different dimension")
        Bx, By = _unit_rows(B[:, :d]), _unit_rows(B[:, d:])
    return Ax @ Bx.T, Ay @ By.T


def ksim_from_cosines(cos_x, cos_y, alpha):
    sx = np.clip((1.0 + cos_x) / 2.0, 0.0, 1.0)
    sy = np.clip((1.0 + cos_y) / 2.0, 0.0, 1.0)
    # 0**0 == 1 keeps the boundary exponents well defined
    return np.power(sx, alpha) * np.power(sy, 1.0 - alpha)


@dataclass(frozen=True)
class KSIMKernel:
    alpha: float
    name = "ksim"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise KernelError("ksim alpha must lie in [0, 1]")

    def __call__(self, A, B=None):
        cx, cy = slot_cosines(A, B)
        K = ksim_from_cosines(cx, cy, self.alpha)
        if B is None:
            np.fill_diagonal(K, 1.0)
        return K

    def to_dict(self):
        return {"name": "ksim", "alpha": self.alpha}


def ksim_kernel(x1, y1, x2, y2, alpha: float) -> float:
    """KSIM value for pairs (x1, y1) and (x2, y2)."""
    vecs = [np.asarray(v, dtype=np.float64) for v in (x1, y1, x2, y2)]
    d = vecs[0].shape
    if any(v.shape != d for v in vecs):
        raise KernelError("all four vectors must have the same length")
    if not 0.0 <= alpha <= 1.0:
        raise KernelError("alpha must lie in [0, 1]")
    norms = [float(np.linalg.norm(v)) for v in vecs]
    if min(norms) == 0.0:
        raise KernelError("zero vector: cosine similarity undefined")
    cx = float(vecs[0] @ vecs[2]) / (norms[0] * norms[2])
    cy = float(vecs[1] @ vecs[3]) / (norms[1] * norms[3])
    return float(ksim_from_cosines(np.float64(cx), np.float64(cy), alpha))


def gram_matrix(kernel, X, dtype=np.float64, block: int = 1024) -> np.ndarray:
    """Training Gram matrix built in row blocks, so only ``block`` rows of
    float64 temporaries exist at once."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n <= block:
        return kernel(X).astype(dtype, copy=False)
    out = np.empty((n, n), dtype=dtype)
    for start in range(0, n, block):
        out[start : start + block] = kernel(X[start : start + block], X)
    if not isinstance(kernel, LinearKernel):
        # self-similarity is exactly 1 for both normalized kernels
        np.fill_diagonal(out, 1.0)
    return out


def kernel_from_dict(d):
    name = d["name"]
    if name == "linear":
        return LinearKernel()
    if name == "rbf":
        return RBFKernel(float(d["gamma"]))
    if name == "ksim":
        return KSIMKernel(float(d["alpha"]))
    raise KernelError(f"cannot rebuild kernel {name!r}")

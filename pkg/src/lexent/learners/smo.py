"""Binary soft-margin SVM dual solver (SMO with second-order working-set selection).

Solves  min_a  1/2 a'Qa - e'a   s.t.  0 <= a <= C,  y'a = 0,
with Q_ij = y_i y_j K_ij. Stops when the maximal KKT violation
m(a) - M(a) drops to ``tol``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

TAU = 1e-12


@dataclass
class BinarySolution:
    alpha: np.ndarray
    rho: float
    iterations: int
    kkt_gap: float
    converged: bool
    non_psd: bool


class RowCache:
    """LRU cache of kernel rows, shareable across the one-vs-rest subproblems."""

    def __init__(self, compute_row: Callable[[int], np.ndarray], max_rows: int = 2048):
        self._compute = compute_row
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self.max_rows = max_rows

    def __call__(self, i: int) -> np.ndarray:
        row = self._rows.get(i)
        if row is not None:
            self._rows.move_to_end(i)
            return row
        row = np.asarray(self._compute(i), dtype=np.float64)
        self._rows[i] = row
        if len(self._rows) > self.max_rows:
            self._rows.popitem(last=False)
        return row


def kkt_gap(alpha, grad, y, C):
    """m(a) - M(a): the largest violating-pair gap (0 or negative at optimality)."""
    yg = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return 0.0
    return float(yg[up].max() - yg[low].min())


def solve_binary(
    kernel_row: Callable[[int], np.ndarray],
    diag: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> BinarySolution:
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    diag = np.asarray(diag, dtype=np.float64)
    if max_iter is None:
        max_iter = max(10_000_000, 100 * n)
    alpha = np.zeros(n)
    G = -np.ones(n)
    non_psd = False
    it = 0
    gap = np.inf
    pos = y > 0
    neg = ~pos
    while it < max_iter:
        yg = -y * G
        at_upper = alpha >= C
        at_lower = alpha <= 0
        up = (pos & ~at_upper) | (neg & ~at_lower)
        low = (pos & ~at_lower) | (neg & ~at_upper)
        if not up.any() or not low.any():
            gap = 0.0
            break
        yg_up = np.where(up, yg, -np.inf)
        i = int(np.argmax(yg_up))
        g_max = yg_up[i]
        g_min = float(np.min(np.where(low, yg, np.inf)))
        gap = g_max - g_min
        if gap <= tol:
            break

        Ki = kernel_row(i)
        cand = low & (yg < g_max)
        b = g_max - yg
        a = diag[i] + diag - 2.0 * Ki
        if np.any(a[cand] < -1e-10):
            non_psd = True
        a = np.where(a > 0, a, TAU)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        Kj = kernel_row(j)

        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = TAU
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        dai, daj = ai - ai_old, aj - aj_old
        G += y * (yi * dai * Ki + yj * daj * Kj)
        it += 1

    converged = gap <= tol
    rho = _rho(alpha, G, y, C)
    return BinarySolution(alpha, rho, it, float(max(gap, 0.0)) if np.isfinite(gap) else 0.0,
                          converged, non_psd)


def _rho(alpha, G, y, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper = alpha >= C
    at_lower = alpha <= 0
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    if np.isfinite(ub) and np.isfinite(lb):
        return float((ub + lb) / 2)
    return float(ub if np.isfinite(ub) else lb)

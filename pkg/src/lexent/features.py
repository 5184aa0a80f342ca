"""Word-pair feature composition.

A composer is an ordered list of base operations applied to ``(vx, vy)``;
the outputs are concatenated in order. Names use ``+`` as separator, so
``"concat+mult"`` is ``[CONCAT, MULT]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError

ONLY_X = "only_x"
ONLY_Y = "only_y"
DIFF = "diff"
SUM = "sum"
CONCAT = "concat"
MULT = "mult"
SQDIFF = "sqdiff"

BASE_NAMES = (ONLY_X, ONLY_Y, DIFF, SUM, CONCAT, MULT, SQDIFF)

_ALIASES = {
    "onlyx": ONLY_X, "only_x": ONLY_X, "x": ONLY_X,
    "onlyy": ONLY_Y, "only_y": ONLY_Y, "y": ONLY_Y,
    "diff": DIFF, "sum": SUM, "concat": CONCAT, "mult": MULT,
    "sqdiff": SQDIFF, "sq_diff": SQDIFF,
}


def _apply(part: str, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    # works on single vectors and on row-stacked matrices alike
    if part == ONLY_X:
        return vx
    if part == ONLY_Y:
        return vy
    if part == DIFF:
        return vy - vx
    if part == SUM:
        return vx + vy
    if part == CONCAT:
        return np.concatenate([vx, vy], axis=-1)
    if part == MULT:
        return vx * vy
    if part == SQDIFF:
        d = vy - vx
        return d * d
    raise ConfigError(f"unknown base composer {part!r}")


@dataclass(frozen=True)
class Composer:
    parts: tuple[str, ...]
    normalize_inputs: bool = False

    def __post_init__(self):
        if not self.parts:
            raise ConfigError("composer needs at least one part")
        for p in self.parts:
            if p not in BASE_NAMES:
                raise ConfigError(f"unknown base composer {p!r}")

    @property
    def name(self) -> str:
        return "+".join(self.parts)

    def output_dim(self, d: int) -> int:
        return sum(2 * d if p == CONCAT else d for p in self.parts)

    def __str__(self):
        return self.name


def composer_from_name(name: str, normalize_inputs: bool = False) -> Composer:
    parts = []
    for raw in name.strip().lower().split("+"):
        key = raw.strip()
        if key not in _ALIASES:
            raise ConfigError(f"unknown base composer {raw!r} in {name!r}")
        parts.append(_ALIASES[key])
    return Composer(tuple(parts), normalize_inputs)


def _l2(v):
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def compose(vx, vy, c: Composer | str) -> np.ndarray:
    if isinstance(c, str):
        c = composer_from_name(c)
    vx = np.asarray(vx, dtype=np.float64)
    vy = np.asarray(vy, dtype=np.float64)
    if vx.shape != vy.shape:
        raise DimensionError(f"vector shapes differ: {vx.shape} vs {vy.shape}")
    if c.normalize_inputs:
        vx, vy = _l2(vx), _l2(vy)
    return np.concatenate([_apply(p, vx, vy) for p in c.parts], axis=-1)


def compose_matrix(X: np.ndarray, Y: np.ndarray, c: Composer | str) -> np.ndarray:
    """Row-wise compose for (n, d) matrices of x and y vectors."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    return compose(X, Y, c)


def composers_from_names(names: Sequence[str]) -> list[Composer]:
    return [composer_from_name(n) for n in names]

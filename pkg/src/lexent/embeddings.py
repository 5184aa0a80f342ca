"""Pretrained embedding readers (GloVe text, word2vec binary) and vector lookup.

Vectors are held as a float32 matrix with a token index; lookups return
float64 copies so downstream arithmetic runs in double precision.
"""

from __future__ import annotations

import hashlib
import math
import mmap
import os
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DuplicateTokenError, OOVError, ParseError

GLOVE_TEXT = "glove_text"
WORD2VEC_BINARY = "word2vec_binary"
FORMATS = (GLOVE_TEXT, WORD2VEC_BINARY)

OOV_LOW, OOV_HIGH = -0.25, 0.25

_POS_SUFFIX = re.compile(r"-[nvj]$")
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LookupPolicy:
    strip_pos_suffix: bool = True
    lowercase: bool = False
    oov_mode: str = "deterministic_random"

    def __post_init__(self):
        if self.oov_mode not in ("deterministic_random", "error"):
            raise ValueError(f"unknown oov_mode {self.oov_mode!r}")

    def normalize(self, token: str) -> str:
        if self.strip_pos_suffix:
            token = _POS_SUFFIX.sub("", token)
        if self.lowercase:
            token = token.lower()
        return token


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Immutable token -> vector map.

    ``vectors`` is read-only; row ``index[token]`` holds the vector of ``token``.
    """

    dim: int
    tokens: tuple[str, ...]
    vectors: np.ndarray
    source: str
    oov_seed: int = 0
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.source not in FORMATS:
            raise ValueError(f"unknown source {self.source!r}")
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.shape != (len(self.tokens), self.dim):
            raise ValueError(
                f"vector matrix shape {vectors.shape} does not match "
                f"({len(self.tokens)}, {self.dim})"
            )
        vectors = vectors.copy() if vectors.flags.writeable else vectors
        vectors.flags.writeable = False
        index = {}
        for i, tok in enumerate(self.tokens):
            if tok in index:
                raise DuplicateTokenError(f"duplicate token {tok!r}", line=i + 1)
            index[tok] = i
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "oov_seed", int(self.oov_seed) & _MASK64)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index


def _check_finite(values, line=None, offset=None):
    if not np.all(np.isfinite(values)):
        raise ParseError("non-finite value in vector", line=line, offset=offset)


def load_glove_text(
    path, oov_seed: int = 0, restrict_to: Iterable[str] | None = None
) -> EmbeddingTable:
    """Read a GloVe-style text file: ``token v1 ... vd`` per line, no header.

    ``restrict_to`` keeps only the listed tokens in memory; every line is still
    parsed and checked, so format errors and duplicates surface either way.
    """
    keep = None if restrict_to is None else set(restrict_to)
    seen: set[str] = set()
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    dim = None
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.rstrip(" ").split(" ")
            if dim is None:
                dim = len(parts) - 1
                if dim <= 0:
                    raise ParseError("line has no vector components", line=lineno)
            elif len(parts) - 1 != dim:
                raise ParseError(
                    f"expected {dim + 1} columns, found {len(parts)}", line=lineno
                )
            token = parts[0]
            if token in seen:
                raise DuplicateTokenError(f"duplicate token {token!r}", line=lineno)
            seen.add(token)
            if keep is not None and token not in keep:
                continue
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad float: {exc}", line=lineno) from None
            _check_finite(vec, line=lineno)
            tokens.append(token)
            rows.append(vec.astype(np.float32))
    if dim is None:
        raise ParseError("empty embedding file")
    matrix = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return EmbeddingTable(dim, tuple(tokens), matrix, GLOVE_TEXT, oov_seed)


def load_word2vec_binary(
    path, oov_seed: int = 0, restrict_to: Iterable[str] | None = None
) -> EmbeddingTable:
    """Read the original word2vec binary format.

    Header ``<count> <dim>\\n``; each record is the token, one space, then
    ``dim`` little-endian float32 values and an optional newline.
    """
    keep = None if restrict_to is None else set(restrict_to)
    size = os.path.getsize(path)
    if size == 0:
        raise ParseError("empty file", offset=0)
    with open(path, "rb") as fh, mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ) as buf:
        nl = buf.find(b"\n")
        if nl < 0:
            raise ParseError("missing header line", offset=0)
        header = buf[:nl].split()
        try:
            count, dim = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise ParseError(f"bad header {bytes(buf[:nl])!r}", offset=0) from None
        if count < 0 or dim <= 0 or len(header) != 2:
            raise ParseError(f"bad header {bytes(buf[:nl])!r}", offset=0)
        nbytes = 4 * dim
        pos = nl + 1
        seen: set[str] = set()
        tokens: list[str] = []
        rows: list[np.ndarray] = []
        for rec in range(count):
            # tolerate the newline some writers put after each vector
            while pos < size and buf[pos : pos + 1] in (b"\n", b"\r"):
                pos += 1
            if pos >= size:
                raise ParseError(
                    f"file truncated: header declares {count} records, found {rec}",
                    offset=pos,
                )
            sp = buf.find(b" ", pos)
            if sp < 0:
                raise ParseError("file truncated inside a token", offset=pos)
            try:
                token = buf[pos:sp].decode("utf-8")
            except UnicodeDecodeError:
                token = buf[pos:sp].decode("latin-1")
            if not token:
                raise ParseError("empty token", offset=pos)
            start = sp + 1
            if start + nbytes > size:
                raise ParseError(
                    f"file truncated inside the vector of {token!r}", offset=size
                )
            if token in seen:
                raise DuplicateTokenError(f"duplicate token {token!r}", offset=pos)
            seen.add(token)
            pos = start + nbytes
            if keep is not None and token not in keep:
                continue
            vec = np.frombuffer(buf[start:pos], dtype="<f4").copy()
            _check_finite(vec, offset=start)
            tokens.append(token)
            rows.append(vec)
        rest = buf[pos:].strip()
        if rest:
            raise ParseError(
                f"header declares {count} records but more data follows", offset=pos
            )
    matrix = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return EmbeddingTable(dim, tuple(tokens), matrix, WORD2VEC_BINARY, oov_seed)


def detect_format(path) -> str:
    """Guess the format from the first bytes: a ``<int> <int>`` header means word2vec."""
    with open(path, "rb") as fh:
        first = fh.readline(256)
    parts = first.split()
    if len(parts) == 2 and all(p.isdigit() for p in parts):
        return WORD2VEC_BINARY
    return GLOVE_TEXT


def load_embeddings(path, fmt: str | None = None, oov_seed: int = 0, restrict_to=None):
    fmt = fmt or detect_format(path)
    if fmt == GLOVE_TEXT:
        return load_glove_text(path, oov_seed=oov_seed, restrict_to=restrict_to)
    if fmt == WORD2VEC_BINARY:
        return load_word2vec_binary(path, oov_seed=oov_seed, restrict_to=restrict_to)
    raise ValueError(f"unknown embedding format {fmt!r}")


def save_glove_text(table: EmbeddingTable, path) -> None:
    # 9 significant digits round-trip any float32 exactly
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tok, vec in zip(table.tokens, table.vectors):
            fh.write(tok + " " + " ".join(format(float(v), ".9g") for v in vec) + "\n")


def save_word2vec_binary(table: EmbeddingTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{len(table)} {table.dim}\n".encode("ascii"))
        for tok, vec in zip(table.tokens, table.vectors):
            fh.write(tok.encode("utf-8") + b" ")
            fh.write(np.asarray(vec, dtype="<f4").tobytes())
            fh.write(b"\n")


def hash64(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def oov_vector(token: str, dim: int, oov_seed: int) -> np.ndarray:
    """Uniform[-0.25, 0.25] vector seeded by hash64(token) XOR oov_seed."""
    rng = np.random.default_rng((hash64(token) ^ (oov_seed & _MASK64)) & _MASK64)
    vec = rng.uniform(OOV_LOW, OOV_HIGH, size=dim).astype(np.float32)
    return vec.astype(np.float64)


def lookup(table: EmbeddingTable, token: str, policy: LookupPolicy = LookupPolicy()) -> np.ndarray:
    key = policy.normalize(token)
    row = table.index.get(key)
    if row is not None:
        return table.vectors[row].astype(np.float64)
    if policy.oov_mode == "error":
        raise OOVError(f"out-of-vocabulary token {token!r} (normalized {key!r})")
    return oov_vector(key, table.dim, table.oov_seed)


def lookup_many(table, tokens, policy: LookupPolicy = LookupPolicy()):
    """Stack lookups into an (n, dim) float64 matrix plus an in-vocabulary mask."""
    out = np.empty((len(tokens), table.dim), dtype=np.float64)
    known = np.zeros(len(tokens), dtype=bool)
    cache: dict[str, np.ndarray] = {}
    for i, tok in enumerate(tokens):
        if tok not in cache:
            cache[tok] = lookup(table, tok, policy)
        out[i] = cache[tok]
        known[i] = policy.normalize(tok) in table.index
    return out, known


def table_info(table: EmbeddingTable) -> dict:
    return {"dim": table.dim, "vocab_size": len(table), "format": table.source}


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return math.nan
    return float(np.dot(u, v) / (nu * nv))

"""Train/validation/test partitioning: random, lexical (disjoint vocabulary), out-of-domain."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datasets import RelationInstance
from .errors import SplitError

RAND, LEX, OOD = "RAND", "LEX", "OOD"
PROTOCOLS = (RAND, LEX, OOD)
DEFAULT_RATIOS = (0.70, 0.05, 0.25)

_BUCKETS = ("train", "validation", "test")


@dataclass(frozen=True)
class SplitSpec:
    protocol: str = RAND
    seed: int = 0
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    def __post_init__(self):
        proto = self.protocol.upper()
        if proto not in PROTOCOLS:
            raise SplitError(f"unknown protocol {self.protocol!r}")
        object.__setattr__(self, "protocol", proto)
        ratios = tuple(float(r) for r in self.ratios)
        if len(ratios) != 3 or any(r < 0 for r in ratios):
            raise SplitError("ratios must be three nonnegative numbers")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise SplitError(f"ratios sum to {sum(ratios)}, expected 1")
        object.__setattr__(self, "ratios", ratios)

    def to_dict(self):
        return {"protocol": self.protocol, "seed": self.seed, "ratios": list(self.ratios)}


@dataclass
class Fold:
    train: list[int]
    validation: list[int]
    test: list[int]
    held_out_domain: str | None = None
    validation_domain: str | None = None
    discarded: list[int] = field(default_factory=list)

    def sizes(self):
        return {
            "train": len(self.train),
            "validation": len(self.validation),
            "test": len(self.test),
            "discarded": len(self.discarded),
        }

    def to_dict(self):
        return {
            "train": list(self.train),
            "validation": list(self.validation),
            "test": list(self.test),
            "held_out_domain": self.held_out_domain,
            "validation_domain": self.validation_domain,
            "discarded": list(self.discarded),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            train=[int(i) for i in d["train"]],
            validation=[int(i) for i in d["validation"]],
            test=[int(i) for i in d["test"]],
            held_out_domain=d.get("held_out_domain"),
            validation_domain=d.get("validation_domain"),
            discarded=[int(i) for i in d.get("discarded", [])],
        )


def _rng(seed):
    return np.random.default_rng(int(seed) & ((1 << 64) - 1))


def split_random(dataset: Sequence[RelationInstance], spec: SplitSpec) -> Fold:
    if spec.protocol != RAND:
        raise SplitError(f"split_random needs protocol RAND, got {spec.protocol}")
    n = len(dataset)
    if n < 3:
        raise SplitError(f"need at least 3 instances, got {n}")
    perm = _rng(spec.seed).permutation(n).tolist()
    n_test = math.floor(spec.ratios[2] * n)
    n_val = math.floor(spec.ratios[1] * n)
    return Fold(
        train=perm[n_test + n_val :],
        validation=perm[n_test : n_test + n_val],
        test=perm[:n_test],
    )


def split_lexical(dataset: Sequence[RelationInstance], spec: SplitSpec) -> Fold:
    """Assign every token to one vocabulary bucket, keep only same-bucket pairs.

    Tokens are visited in a seeded random order. A bucket's load counts the
    pairs that can still end up in it: pairs whose placed token sits there
    and whose partner is unplaced or in the same bucket. For each bucket the
    score is the number of the token's pairs it would complete there plus
    the load deficit ``ratio * total_load - load``. The token goes to the
    highest score; ties go to the earlier bucket. Pairs whose tokens land in
    different buckets are discarded.
    """
    if spec.protocol != LEX:
        raise SplitError(f"split_lexical needs protocol LEX, got {spec.protocol}")
    partners: dict[str, list[str]] = {}
    for inst in dataset:
        partners.setdefault(inst.x, []).append(inst.y)
        if inst.y != inst.x:
            partners.setdefault(inst.y, []).append(inst.x)
    tokens = sorted(partners)
    order = _rng(spec.seed).permutation(len(tokens))

    ratios = np.asarray(spec.ratios, dtype=np.float64)
    load = np.zeros(3)
    bucket_of: dict[str, int] = {}
    for k in order:
        tok = tokens[k]
        gain = np.zeros(3)
        pending = 0
        for other in partners[tok]:
            if other == tok or other not in bucket_of:
                pending += 1
            else:
                gain[bucket_of[other]] += 1
        score = gain + ratios * load.sum() - load
        # zero-ratio buckets never receive tokens
        score[ratios == 0] = -np.inf
        b = int(np.argmax(score))
        bucket_of[tok] = b
        # pairs with a partner elsewhere are lost from that partner's bucket
        load -= gain
        load[b] += gain[b] + pending

    parts: list[list[int]] = [[], [], []]
    discarded = []
    for i, inst in enumerate(dataset):
        bx, by = bucket_of[inst.x], bucket_of[inst.y]
        if bx == by:
            parts[bx].append(i)
        else:
            discarded.append(i)
    for name, part, ratio in zip(_BUCKETS, parts, spec.ratios):
        if ratio > 0 and not part:
            raise SplitError(
                f"lexical split left the {name} part empty; try a different seed"
            )
    return Fold(train=parts[0], validation=parts[1], test=parts[2], discarded=discarded)


def split_out_of_domain(dataset: Sequence[RelationInstance], spec: SplitSpec) -> list[Fold]:
    if spec.protocol != OOD:
        raise SplitError(f"split_out_of_domain needs protocol OOD, got {spec.protocol}")
    if any(inst.domain is None for inst in dataset):
        raise SplitError("out-of-domain split needs a domain label on every instance")
    domains = sorted({inst.domain for inst in dataset})
    if len(domains) < 3:
        raise SplitError(f"need at least 3 domains, got {len(domains)}")
    members: dict[str, list[int]] = {d: [] for d in domains}
    for i, inst in enumerate(dataset):
        members[inst.domain].append(i)
    rng = _rng(spec.seed)
    folds = []
    for held in domains:
        rest = [d for d in domains if d != held]
        val_dom = rest[int(rng.integers(len(rest)))]
        train = [i for d in rest if d != val_dom for i in members[d]]
        folds.append(
            Fold(
                train=sorted(train),
                validation=list(members[val_dom]),
                test=list(members[held]),
                held_out_domain=held,
                validation_domain=val_dom,
            )
        )
    return folds


def make_folds(dataset, spec: SplitSpec) -> list[Fold]:
    if spec.protocol == RAND:
        return [split_random(dataset, spec)]
    if spec.protocol == LEX:
        return [split_lexical(dataset, spec)]
    return split_out_of_domain(dataset, spec)


def part_vocabulary(dataset, indices) -> set[str]:
    return {t for i in indices for t in (dataset[i].x, dataset[i].y)}


def dump_folds(spec: SplitSpec, folds: list[Fold], path) -> None:
    doc = {"spec": spec.to_dict(), "folds": [f.to_dict() for f in folds]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_folds(path) -> tuple[SplitSpec, list[Fold]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    spec = SplitSpec(doc["spec"]["protocol"], doc["spec"]["seed"], tuple(doc["spec"]["ratios"]))
    return spec, [Fold.from_dict(f) for f in doc["folds"]]

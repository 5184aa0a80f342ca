"""Adapters for the four relation datasets plus the normalized 4-column TSV.

Normalized TSV: UTF-8, tab separated, LF endings, no header, columns
``x, y, relation, domain`` with an empty last column when there is no domain.
"""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from .errors import IngestError, ParseError

BLESS, KHN, ROOT09, EVALUTION = "BLESS", "KHN", "ROOT09", "EVALution"
DATASET_NAMES = (BLESS, KHN, ROOT09, EVALUTION)

RELATIONS = {
    BLESS: ("attri", "coord", "event", "hyper", "mero", "random"),
    KHN: ("hypo", "mero", "sibl", "false"),
    ROOT09: ("hyper", "coord", "random"),
    EVALUTION: ("HasProperty", "synonym", "HasA", "MadeOf", "IsA", "antonym", "PartOf"),
}

HAS_DOMAINS = {BLESS: True, KHN: True, ROOT09: False, EVALUTION: False}

# Published label spellings -> canonical label. Keys are lowercased.
_ALIASES = {
    BLESS: {
        "attri": "attri", "coord": "coord", "event": "event", "hyper": "hyper",
        "mero": "mero", "random": "random", "random-n": "random",
        "random-v": "random", "random-j": "random",
    },
    KHN: {"hypo": "hypo", "mero": "mero", "sibl": "sibl", "false": "false"},
    ROOT09: {
        "hyper": "hyper", "hypernym": "hyper", "coord": "coord",
        "cohypo": "coord", "random": "random",
    },
    EVALUTION: {
        "hasproperty": "HasProperty", "synonym": "synonym", "hasa": "HasA",
        "madeof": "MadeOf", "isa": "IsA", "antonym": "antonym", "partof": "PartOf",
        # the two sparse relations removed after ingest
        "entails": "Entails", "entailment": "Entails", "memberof": "MemberOf",
    },
}

# published instance counts; EVALution has no measured value here
PUBLISHED_COUNTS = {BLESS: 26554, KHN: 63718, ROOT09: 12762}
PUBLISHED_DOMAINS = {BLESS: 17, KHN: 3}

EVALUTION_DISCARD_COUNT = 2


class RelationInstance(NamedTuple):
    x: str
    y: str
    relation: str
    domain: str | None = None


@dataclass
class DatasetMeta:
    name: str | None
    relation_set: tuple[str, ...]
    instance_count: int
    domain_count: int | None = None
    raw_instance_count: int | None = None
    discarded_relations: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self):
        return {
            "name": self.name,
            "relation_set": list(self.relation_set),
            "instance_count": self.instance_count,
            "domain_count": self.domain_count,
            "raw_instance_count": self.raw_instance_count,
            "discarded_relations": list(self.discarded_relations),
        }


def canonical_name(name: str) -> str:
    key = name.strip().lower().replace("&", "").replace("+", "").replace("-", "")
    table = {"bless": BLESS, "khn": KHN, "root09": ROOT09, "root9": ROOT09,
             "evalution": EVALUTION}
    if key not in table:
        raise IngestError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    return table[key]


def _split_row(line: str) -> list[str]:
    line = line.rstrip("\r\n")
    if "\t" in line:
        return [c.strip() for c in line.split("\t")]
    if "," in line and " " not in line.strip():
        return [c.strip() for c in line.split(",")]
    return line.split()


def _rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        for rowno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield rowno, _split_row(line)


def _label(name, raw, rowno):
    canon = _ALIASES[name].get(raw.strip().lower())
    if canon is None:
        raise IngestError(f"unknown {name} relation label {raw!r}", row=rowno)
    return canon


def _ingest_bless(path):
    # concept, class (domain), relation, relatum
    out = []
    for rowno, cols in _rows(path):
        if len(cols) != 4 or not all(cols):
            raise IngestError(f"expected 4 columns, found {len(cols)}", row=rowno)
        x, domain, rel, y = cols
        out.append(RelationInstance(x, y, _label(BLESS, rel, rowno), domain))
    return out


def _ingest_khn(path):
    # either a directory with one file per domain or one file with a domain column
    out = []
    p = Path(path)
    files = sorted(f for f in p.iterdir() if f.is_file()) if p.is_dir() else [p]
    for f in files:
        for rowno, cols in _rows(f):
            if len(cols) == 3 and p.is_dir():
                x, y, rel = cols
                domain = f.stem
            elif len(cols) == 4:
                x, y, rel, domain = cols
            else:
                raise IngestError(f"{f.name}: malformed row with {len(cols)} columns", row=rowno)
            if not (x and y and domain):
                raise IngestError(f"{f.name}: empty field", row=rowno)
            out.append(RelationInstance(x, y, _label(KHN, rel, rowno), domain))
    return out


def _ingest_triples(name, path):
    labels = _ALIASES[name]
    out = []
    for rowno, cols in _rows(path):
        if len(cols) < 3 or not all(cols[:3]):
            raise IngestError(f"expected at least 3 columns, found {len(cols)}", row=rowno)
        # x, y, relation; EVALution dumps sometimes lead with the relation
        if cols[2].strip().lower() in labels:
            x, y, rel = cols[0], cols[1], cols[2]
        elif cols[0].strip().lower() in labels:
            rel, x, y = cols[0], cols[1], cols[2]
        else:
            raise IngestError(f"unknown {name} relation label in {cols[:3]!r}", row=rowno)
        out.append(RelationInstance(x, y, _label(name, rel, rowno), None))
    return out


def ingest(name: str, path) -> tuple[DatasetMeta, list[RelationInstance]]:
    """Read one published distribution into normalized instances."""
    name = canonical_name(name)
    if name == BLESS:
        instances = _ingest_bless(path)
    elif name == KHN:
        instances = _ingest_khn(path)
    else:
        instances = _ingest_triples(name, path)

    raw_count = len(instances)
    discarded: tuple[str, ...] = ()
    if name == EVALUTION:
        counts = Counter(inst.relation for inst in instances)
        # the known sparse pair; fall back to the two rarest labels if absent
        extra = [r for r in counts if r not in RELATIONS[EVALUTION]]
        if not extra:
            ranked = sorted(counts, key=lambda r: (counts[r], r))
            extra = ranked[:EVALUTION_DISCARD_COUNT]
        discarded = tuple(sorted(extra))
        instances = [
            RelationInstance(i.x, i.y, i.relation, None)
            for i in instances
            if i.relation not in discarded
        ]

    relation_set = RELATIONS[name]
    domains = {i.domain for i in instances} if HAS_DOMAINS[name] else None
    meta = DatasetMeta(
        name=name,
        relation_set=relation_set,
        instance_count=len(instances),
        domain_count=len(domains) if domains is not None else None,
        raw_instance_count=raw_count,
        discarded_relations=discarded,
    )
    return meta, instances


def write_normalized(instances: Sequence[RelationInstance], path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write("\t".join((inst.x, inst.y, inst.relation, inst.domain or "")) + "\n")
    os.replace(tmp, path)


def meta_from_instances(instances, name=None) -> DatasetMeta:
    seen = []
    for inst in instances:
        if inst.relation not in seen:
            seen.append(inst.relation)
    if name in RELATIONS and set(seen) <= set(RELATIONS[name]):
        relation_set = RELATIONS[name]
    else:
        relation_set = tuple(sorted(seen))
    domains = {i.domain for i in instances if i.domain is not None}
    return DatasetMeta(
        name=name,
        relation_set=relation_set,
        instance_count=len(instances),
        domain_count=len(domains) if domains else None,
    )


def parse_normalized(text: str, name: str | None = None):
    instances = []
    for rowno, line in enumerate(io.StringIO(text, newline="\n"), start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ParseError(f"expected 4 columns, found {len(cols)}", line=rowno)
        x, y, rel, dom = cols
        if not x or not y or not rel:
            raise ParseError("empty x, y or relation", line=rowno)
        instances.append(RelationInstance(x, y, rel, dom or None))
    return meta_from_instances(instances, name), instances


def load_normalized(path, name: str | None = None):
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        return parse_normalized(fh.read(), name)


def dataset_stats(instances: Sequence[RelationInstance]) -> dict:
    by_rel = Counter(i.relation for i in instances)
    by_dom = Counter(i.domain for i in instances if i.domain is not None)
    vocab = {t for i in instances for t in (i.x, i.y)}
    return {
        "instance_count": len(instances),
        "relations": dict(sorted(by_rel.items())),
        "domains": dict(sorted(by_dom.items())),
        "domain_count": len(by_dom) or None,
        "vocab_size": len(vocab),
    }


def vocabulary(instances: Sequence[RelationInstance]) -> list[str]:
    return sorted({t for i in instances for t in (i.x, i.y)})


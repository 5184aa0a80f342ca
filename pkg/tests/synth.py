"""Small synthetic BLESS-like data with embeddings that carry relational signal."""

import numpy as np

from lexent.datasets import RelationInstance
from lexent.embeddings import EmbeddingTable, GLOVE_TEXT

RELATIONS = ("attri", "coord", "event", "hyper", "mero", "random")


def make_world(n_domains=4, concepts_per_domain=3, dim=12, seed=0, per_relation=3):
    """Build (instances, table) with POS-tagged tokens and raw, untagged vocabulary.

    Related pairs share direction with the concept (higher cosine), random pairs do not.
    """
    rng = np.random.default_rng(seed)
    vocab: dict[str, np.ndarray] = {}
    instances = []
    rel_dirs = {r: rng.normal(size=dim) for r in RELATIONS}
    for d in range(n_domains):
        dom = f"dom{d}"
        dom_vec = rng.normal(size=dim)
        for c in range(concepts_per_domain):
            concept = f"c{d}_{c}"
            cvec = dom_vec + 0.5 * rng.normal(size=dim)
            vocab[concept] = cvec
            for rel in RELATIONS:
                for k in range(per_relation):
                    tok = f"{rel}{d}_{c}_{k}"
                    if rel == "random":
                        v = rng.normal(size=dim) * 1.5
                    else:
                        v = 0.6 * cvec + rel_dirs[rel] + 0.3 * rng.normal(size=dim)
                    vocab[tok] = v
                    suffix = {"attri": "-j", "event": "-v"}.get(rel, "-n")
                    instances.append(RelationInstance(concept + "-n", tok + suffix, rel, dom))
    tokens = tuple(sorted(vocab))
    table = EmbeddingTable(dim, tokens, np.array([vocab[t] for t in tokens]), GLOVE_TEXT, 7)
    return instances, table


def write_bless(instances, path):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            rel = inst.relation
            if rel == "random":
                rel = "random-" + inst.y[-1]
            fh.write(f"{inst.x}\t{inst.domain}\t{rel}\t{inst.y}\n")

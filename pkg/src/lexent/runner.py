"""End-to-end experiments: config -> folds -> (composer x family) grid searches -> RunRecord."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .datasets import ingest, load_normalized, meta_from_instances
from .embeddings import LookupPolicy, load_embeddings, lookup_many
from .errors import ConfigError, LexentError, ReportError
from .evaluation import EvalReport, aggregate_ood, report_rows, score
from .features import composer_from_name, compose_matrix
from .learners import KSIM_SVM, canonical_family, model_to_dict, predict
from .learners.search import GramCache, HyperGrid, default_grid, grid_search, matrix_key
from .splits import Fold, SplitSpec, make_folds

log = logging.getLogger(__name__)

RAW_PAIR = "raw"
RECORD_VERSION = 1


@dataclass
class EmbeddingConfig:
    path: str
    format: str | None = None
    oov_seed: int = 0
    strip_pos_suffix: bool = True
    lowercase: bool = False
    oov_mode: str = "deterministic_random"

    def policy(self) -> LookupPolicy:
        return LookupPolicy(self.strip_pos_suffix, self.lowercase, self.oov_mode)


@dataclass
class DatasetConfig:
    path: str
    name: str | None = None
    # "normalized" TSV or the dataset's published distribution ("raw")
    format: str = "normalized"


@dataclass
class FamilyConfig:
    family: str
    grid: dict[str, list] | None = None

    def hyper_grid(self) -> HyperGrid:
        if self.grid:
            return HyperGrid(self.family, {k: list(v) for k, v in self.grid.items()})
        return default_grid(self.family)


@dataclass
class ExperimentConfig:
    embedding: EmbeddingConfig
    dataset: DatasetConfig
    protocol: SplitSpec = field(default_factory=SplitSpec)
    composers: list[str] = field(default_factory=lambda: ["concat"])
    families: list[FamilyConfig] = field(default_factory=lambda: [FamilyConfig("LR")])
    metric: str = "weighted_f1"
    seed: int = 0
    output_dir: str = "out"
    cache_dir: str | None = None
    repeats: int = 1
    workers: int = 1
    normalize_inputs: bool = False

    def __post_init__(self):
        if self.metric not in ("macro_f1", "weighted_f1"):
            raise ConfigError(f"metric must be macro_f1 or weighted_f1, got {self.metric!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        for name in self.composers:
            composer_from_name(name)
        for fam in self.families:
            fam.family = canonical_family(fam.family)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["protocol"] = self.protocol.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            emb = EmbeddingConfig(**d.pop("embedding"))
            data = DatasetConfig(**d.pop("dataset"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad config: {exc}") from None
        proto = d.pop("protocol", {}) or {}
        if isinstance(proto, str):
            proto = {"protocol": proto}
        spec = SplitSpec(proto.get("protocol", "RAND"), int(proto.get("seed", d.get("seed", 0))),
                         tuple(proto.get("ratios", (0.70, 0.05, 0.25))))
        fams = []
        for f in d.pop("families", [{"family": "LR"}]):
            fams.append(FamilyConfig(f) if isinstance(f, str) else FamilyConfig(**f))
        try:
            return cls(embedding=emb, dataset=data, protocol=spec, families=fams, **d)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None

    def result_hash(self) -> str:
        """Hash of everything that can change results (not paths to outputs or worker count)."""
        d = self.to_dict()
        for k in ("output_dir", "cache_dir", "workers"):
            d.pop(k)
        return _hash_json(d)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def _hash_json(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def derive_seed(*parts) -> int:
    h = hashlib.blake2b("|".join(str(p) for p in parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


def cell_key(composer: str, family: str) -> str:
    return f"{composer}:{family.lower()}"


def parse_cell(spec: str) -> tuple[str, str]:
    if ":" not in spec:
        raise ReportError(f"cell must look like composer:family, got {spec!r}")
    comp, fam = spec.rsplit(":", 1)
    fam = canonical_family(fam)
    comp = RAW_PAIR if fam == KSIM_SVM else composer_from_name(comp).name
    return comp, fam


def _write_atomic(path, text: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load_dataset(cfg: DatasetConfig):
    if cfg.format == "raw":
        if not cfg.name:
            raise ConfigError("raw dataset input needs a dataset name")
        return ingest(cfg.name, cfg.path)
    return load_normalized(cfg.path, cfg.name)


def _folds(config: ExperimentConfig, instances) -> list[tuple[int, Fold]]:
    out = []
    for r in range(config.repeats):
        spec = dataclasses.replace(config.protocol, seed=config.protocol.seed + r)
        out.extend((r, f) for f in make_folds(instances, spec))
    return out


def run(config: ExperimentConfig, embeddings=None, instances=None) -> dict:
    """Run every (composer, family) cell over every fold; returns the RunRecord dict.

    ``embeddings``/``instances`` may be passed in to skip loading.
    """
    t_start = time.perf_counter()
    if instances is None:
        meta, instances = _load_dataset(config.dataset)
    else:
        meta = meta_from_instances(instances, config.dataset.name)
    instances = list(instances)
    policy = config.embedding.policy()
    if embeddings is None:
        vocab = {policy.normalize(t) for i in instances for t in (i.x, i.y)}
        embeddings = load_embeddings(config.embedding.path, config.embedding.format,
                                     config.embedding.oov_seed, restrict_to=vocab)
    VX, known_x = lookup_many(embeddings, [i.x for i in instances], policy)
    VY, known_y = lookup_many(embeddings, [i.y for i in instances], policy)
    labels = [i.relation for i in instances]
    classes = tuple(meta.relation_set)
    folds = _folds(config, instances)
    input_key = _hash_json({
        "vectors": matrix_key(np.hstack([VX, VY])),
        "labels": hashlib.sha256("\n".join(labels).encode()).hexdigest(),
    })

    cells: list[tuple[str, str, HyperGrid]] = []
    for fam in config.families:
        grid = fam.hyper_grid()
        if fam.family == KSIM_SVM:
            cells.append((RAW_PAIR, fam.family, grid))
        else:
            cells.extend((composer_from_name(c).name, fam.family, grid) for c in config.composers)

    feature_cache: dict[str, np.ndarray] = {}

    def features_for(composer: str) -> np.ndarray:
        if composer not in feature_cache:
            if composer == RAW_PAIR:
                feature_cache[composer] = np.hstack([VX, VY])
            else:
                comp = composer_from_name(composer, config.normalize_inputs)
                feature_cache[composer] = _cached_features(config.cache_dir, input_key, comp, VX, VY)
        return feature_cache[composer]

    gram_dir = os.path.join(config.cache_dir, "gram") if config.cache_dir else None
    result_dir = os.path.join(config.cache_dir, "results") if config.cache_dir else None

    def unit(ci: int, fi: int):
        composer, family, grid = cells[ci]
        repeat, fold = folds[fi]
        unit_key = _hash_json({
            "input": input_key, "fold": _hash_json(fold.to_dict()), "composer": composer,
            "normalize": config.normalize_inputs, "family": family, "grid": grid.to_dict(),
            "metric": config.metric, "seed": config.seed, "classes": list(classes),
        })
        cached = _read_cached(result_dir, unit_key)
        if cached is not None:
            return cached
        t0 = time.perf_counter()
        X = features_for(composer)
        tr, va, te = fold.train, fold.validation, fold.test
        seed = derive_seed(config.seed, composer, family, fi)
        try:
            res = grid_search(
                family, grid, (X[tr], [labels[i] for i in tr]),
                (X[va], [labels[i] for i in va]), metric=config.metric, seed=seed,
                classes=classes, gram_cache=GramCache(gram_dir),
            )
            gold = [labels[i] for i in te]
            pred = predict(res.model, X[te])
            report = score(gold, pred, classes)
            out = {
                "status": "ok",
                "fold": fi,
                "repeat": repeat,
                "held_out_domain": fold.held_out_domain,
                "hyperparameters": res.best_params,
                "validation_score": res.validation_score,
                "test": report.to_dict(),
                "trials": res.trials,
                "warnings": res.warnings + list(res.model.info.get("warnings", [])),
                "training_seed": seed,
                "predictions": pred,
                "model": model_to_dict(res.model),
            }
        except LexentError as exc:
            out = {"status": "failed", "fold": fi, "repeat": repeat,
                   "error": f"{type(exc).__name__}: {exc}",
                   "context": {"composer": composer, "family": family, "fold": fi}}
        out["seconds"] = time.perf_counter() - t0
        if out["status"] == "ok":
            _write_cached(result_dir, unit_key, out)
        return out

    jobs = [(ci, fi) for ci in range(len(cells)) for fi in range(len(folds))]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(lambda j: unit(*j), jobs))
    else:
        outputs = [unit(ci, fi) for ci, fi in jobs]
    by_job = dict(zip(jobs, outputs))

    record_cells = []
    timings = {}
    models_dir = os.path.join(config.output_dir, "models")
    for ci, (composer, family, grid) in enumerate(cells):
        key = cell_key(composer, family)
        fold_outs = [by_job[(ci, fi)] for fi in range(len(folds))]
        timings[key] = [o.pop("seconds", 0.0) for o in fold_outs]
        failed = [o for o in fold_outs if o["status"] != "ok"]
        for o in fold_outs:
            model = o.pop("model", None)
            if model is not None:
                _write_atomic(os.path.join(models_dir, f"{_safe(key)}-fold{o['fold']}.json"),
                              json.dumps(model, sort_keys=True))
        cell = {
            "key": key,
            "composer": composer,
            "family": family,
            "composer_ignored": family == KSIM_SVM,
            "grid": grid.to_dict(),
            "folds": fold_outs,
            "status": "failed" if failed else "ok",
        }
        if not failed:
            reports = [EvalReport.from_dict(o["test"]) for o in fold_outs]
            cell["aggregate"] = aggregate_ood(reports).to_dict()
            cell["validation_score_mean"] = float(np.mean([o["validation_score"] for o in fold_outs]))
        record_cells.append(cell)

    record = {
        "version": RECORD_VERSION,
        "software_version": __version__,
        "config_hash": config.result_hash(),
        "config": config.to_dict(),
        "dataset": meta.to_dict(),
        "input_key": input_key,
        "protocol": config.protocol.protocol,
        "tuning": "per_fold",
        "oov": {
            "x_in_vocab": int(known_x.sum()),
            "y_in_vocab": int(known_y.sum()),
            "instances": len(instances),
        },
        "folds": [
            {"index": fi, "repeat": r, "held_out_domain": f.held_out_domain,
             "validation_domain": f.validation_domain, "sizes": f.sizes(),
             "fold_hash": _hash_json(f.to_dict())}
            for fi, (r, f) in enumerate(folds)
        ],
        "cells": record_cells,
        "failures": [c["key"] for c in record_cells if c["status"] != "ok"],
        "timings": {"cells": timings, "total_seconds": time.perf_counter() - t_start},
    }
    write_outputs(record, config.output_dir)
    return record


def _safe(key: str) -> str:
    return key.replace(":", "__").replace("+", "-")


def _cached_features(cache_dir, input_key, composer, VX, VY):
    X = None
    path = None
    if cache_dir:
        fkey = _hash_json({"input": input_key, "composer": composer.name,
                           "normalize": composer.normalize_inputs})
        path = os.path.join(cache_dir, "features", f"{fkey}.npy")
        if os.path.exists(path):
            X = np.load(path)
    if X is None:
        X = compose_matrix(VX, VY, composer)
        if path:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            np.save(path + ".tmp.npy", X)
            os.replace(path + ".tmp.npy", path)
    return X


def _read_cached(result_dir, key):
    if not result_dir:
        return None
    path = os.path.join(result_dir, f"{key}.json")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_cached(result_dir, key, out):
    if result_dir:
        _write_atomic(os.path.join(result_dir, f"{key}.json"), json.dumps(out, sort_keys=True))


def record_payload(record: dict) -> dict:
    """The record without wall-clock fields; identical configs give identical payloads."""
    d = {k: v for k, v in record.items() if k != "timings"}
    return json.loads(json.dumps(d, sort_keys=True))


def write_outputs(record: dict, output_dir: str) -> None:
    _write_atomic(os.path.join(output_dir, "run.json"), json.dumps(record, sort_keys=True, indent=1))
    for cell in record["cells"]:
        if "aggregate" in cell:
            _write_atomic(os.path.join(output_dir, "cells", f"{_safe(cell['key'])}.csv"),
                          _cell_csv(cell))


def _cell_csv(cell) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["composer", "family", "fold", "held_out_domain", "relation",
                "precision", "recall", "f1", "support"])
    for o in cell["folds"]:
        rep = EvalReport.from_dict(o["test"])
        for row in report_rows(rep):
            w.writerow([cell["composer"], cell["family"], o["fold"], o.get("held_out_domain") or "",
                        row["relation"], row["precision"], row["recall"], row["f1"], row["support"]])
    agg = EvalReport.from_dict(cell["aggregate"])
    for row in report_rows(agg):
        w.writerow([cell["composer"], cell["family"], "aggregate", "", row["relation"],
                    row["precision"], row["recall"], row["f1"], row["support"]])
    return buf.getvalue()


def load_record(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def find_cell(record: dict, composer: str, family: str) -> dict:
    key = cell_key(composer, family)
    for c in record["cells"]:
        if c["key"] == key:
            if "aggregate" not in c:
                raise ReportError(f"cell {key} failed and has no scores")
            return c
    raise ReportError(f"cell {key} not in record")


def format_gain(a: float, b: float) -> str:
    """Difference b - a in the bracketed style: ``+5.7``, ``-0.2``, ``0.0``."""
    g = round(b - a, 1)
    if g == 0:
        return "0.0"
    return f"{g:+.1f}"


def compare(record: dict, cell_a: tuple[str, str], cell_b: tuple[str, str]) -> dict:
    """Per-metric and per-relation gains of cell b over cell a, in F1 points (x100)."""
    a = find_cell(record, *cell_a)
    b = find_cell(record, *cell_b)
    ra, rb = EvalReport.from_dict(a["aggregate"]), EvalReport.from_dict(b["aggregate"])
    rows = []
    for metric in ("macro_f1", "weighted_f1", "accuracy"):
        va, vb = 100 * ra.metric(metric), 100 * rb.metric(metric)
        rows.append({"metric": metric, "a": round(va, 1), "b": round(vb, 1),
                     "gain": round(vb - va, 1), "formatted": format_gain(round(va, 1), round(vb, 1))})
    for rel in ra.classes:
        va, vb = 100 * ra.per_relation[rel].f1, 100 * rb.per_relation[rel].f1
        rows.append({"metric": f"f1[{rel}]", "a": round(va, 1), "b": round(vb, 1),
                     "gain": round(vb - va, 1), "formatted": format_gain(round(va, 1), round(vb, 1))})
    return {"a": a["key"], "b": b["key"], "rows": rows}


def render_report(record: dict, fmt: str = "md", metric: str | None = None) -> str:
    metric = metric or record["config"].get("metric", "weighted_f1")
    if fmt == "json":
        return json.dumps(record, sort_keys=True, indent=1)
    if fmt == "csv":
        return "".join(_cell_csv(c) if i == 0 else _cell_csv(c).split("\n", 1)[1]
                       for i, c in enumerate(c for c in record["cells"] if "aggregate" in c))
    if fmt != "md":
        raise ReportError(f"unknown report format {fmt!r}")
    return _markdown(record, metric)


def _markdown(record, metric):
    ok = {c["key"]: c for c in record["cells"] if "aggregate" in c}
    composers, families = [], []
    for c in record["cells"]:
        if c["composer"] not in composers:
            composers.append(c["composer"])
        if c["family"] not in families:
            families.append(c["family"])

    def val(comp, fam):
        c = ok.get(cell_key(comp, fam))
        return None if c is None else 100 * EvalReport.from_dict(c["aggregate"]).metric(metric)

    header = "| Classifier | " + " | ".join(composers) + " |"
    lines = [
        f"{record['protocol']} {record['dataset'].get('name') or ''} ({metric}, x100)".strip(),
        "",
        header,
        "|" + "---|" * (len(composers) + 1),
    ]
    for fam in families:
        cells = []
        for comp in composers:
            v = val(comp, fam)
            if v is None:
                cells.append("")
                continue
            text = f"{v:.1f}"
            # bracketed gain for X+mult / X+sqdiff over its base X
            if "+" in comp:
                base = comp.split("+")[0]
                bv = val(base, fam)
                if bv is not None:
                    text += f" ({format_gain(round(bv, 1), round(v, 1))})"
            cells.append(text)
        lines.append(f"| {fam} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def config_from_json_text(text: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def summary(record: dict) -> list[dict[str, Any]]:
    out = []
    for c in record["cells"]:
        row = {"key": c["key"], "status": c["status"]}
        if "aggregate" in c:
            rep = EvalReport.from_dict(c["aggregate"])
            row.update(macro_f1=rep.macro_f1, weighted_f1=rep.weighted_f1,
                       validation_score=c["validation_score_mean"],
                       hyperparameters=[o["hyperparameters"] for o in c["folds"]])
        out.append(row)
    return out

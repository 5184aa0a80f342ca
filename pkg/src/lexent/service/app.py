"""HTTP API over the core package. Experiments run as jobs; everything else is synchronous."""

from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..datasets import dataset_stats, ingest, load_normalized, write_normalized
from ..embeddings import LookupPolicy, load_embeddings, table_info
from ..errors import (
    ConfigError, DimensionError, IngestError, LexentError, OOVError, ParseError,
    ReportError, SplitError,
)
from ..evaluation import similarity_profile
from ..features import compose, composer_from_name
from ..runner import (
    ExperimentConfig, compare, load_record, parse_cell, render_report, run, summary,
)
from ..splits import SplitSpec, dump_folds, make_folds
from . import schemas

log = logging.getLogger(__name__)

app = FastAPI(title="lexent", version=__version__)

_jobs: dict[str, dict] = {}
_jobs_lock = threading.Lock()
_executor = ThreadPoolExecutor(max_workers=1)


def _fail(exc: Exception):
    if isinstance(exc, FileNotFoundError):
        raise HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (ParseError, IngestError, SplitError, ConfigError, DimensionError,
                        ReportError, OOVError, ValueError)):
        raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}")
    raise HTTPException(status_code=500, detail=f"{type(exc).__name__}: {exc}")


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/embeddings/info", response_model=schemas.EmbeddingInfoResponse)
def embeddings_info(req: schemas.EmbeddingInfoRequest):
    try:
        return table_info(load_embeddings(req.path, req.format))
    except (LexentError, OSError, ValueError) as exc:
        _fail(exc)


@app.post("/datasets/ingest", response_model=schemas.DatasetMetaModel)
def datasets_ingest(req: schemas.IngestRequest):
    try:
        meta, instances = ingest(req.dataset, req.in_path)
        write_normalized(instances, req.out_path)
    except (LexentError, OSError) as exc:
        _fail(exc)
    return meta.to_dict()


@app.post("/datasets/stats", response_model=schemas.StatsResponse)
def datasets_stats(req: schemas.StatsRequest):
    try:
        _, instances = load_normalized(req.path)
    except (LexentError, OSError) as exc:
        _fail(exc)
    return dataset_stats(instances)


@app.post("/splits", response_model=schemas.SplitResponse)
def splits(req: schemas.SplitRequest):
    try:
        spec = SplitSpec(req.protocol, req.seed, tuple(req.ratios))
        _, instances = load_normalized(req.in_path)
        folds = make_folds(instances, spec)
        dump_folds(spec, folds, req.out_path)
    except (LexentError, OSError) as exc:
        _fail(exc)
    return {
        "protocol": spec.protocol,
        "seed": spec.seed,
        "out_path": req.out_path,
        "folds": [
            {"held_out_domain": f.held_out_domain, "validation_domain": f.validation_domain,
             **f.sizes()}
            for f in folds
        ],
    }


@app.post("/features/compose", response_model=schemas.ComposeResponse)
def features_compose(req: schemas.ComposeRequest):
    try:
        comp = composer_from_name(req.composer, req.normalize_inputs)
        vec = compose(req.vx, req.vy, comp)
    except LexentError as exc:
        _fail(exc)
    return {"composer": comp.name, "vector": vec.tolist()}


@app.post("/analysis/similarity", response_model=schemas.SimilarityResponse)
def analysis_similarity(req: schemas.SimilarityRequest):
    policy = LookupPolicy(req.strip_pos_suffix, req.lowercase)
    try:
        _, instances = load_normalized(req.dataset_path)
        vocab = {policy.normalize(t) for i in instances for t in (i.x, i.y)}
        table = load_embeddings(req.embedding_path, req.embedding_format, req.oov_seed,
                                restrict_to=vocab)
        return similarity_profile(instances, table, policy, req.exclude_oov).to_dict()
    except (LexentError, OSError) as exc:
        _fail(exc)


def _run_job(job_id: str, config: ExperimentConfig):
    with _jobs_lock:
        _jobs[job_id]["state"] = "running"
    try:
        record = run(config)
    except Exception as exc:  # job failures are reported through the status endpoint
        log.exception("run %s failed", job_id)
        with _jobs_lock:
            _jobs[job_id].update(state="failed", error=f"{type(exc).__name__}: {exc}")
        return
    with _jobs_lock:
        _jobs[job_id].update(state="done", summary=summary(record))


@app.post("/runs", response_model=schemas.JobStatus)
def runs_create(req: schemas.RunRequest):
    try:
        config = ExperimentConfig.from_dict(req.config)
    except (LexentError, ValueError) as exc:
        _fail(exc)
    job_id = uuid.uuid4().hex[:12]
    with _jobs_lock:
        _jobs[job_id] = {"job_id": job_id, "state": "queued", "output_dir": config.output_dir}
    future = _executor.submit(_run_job, job_id, config)
    if req.wait:
        future.result()
    with _jobs_lock:
        return dict(_jobs[job_id])


@app.get("/runs/{job_id}", response_model=schemas.JobStatus)
def runs_status(job_id: str):
    with _jobs_lock:
        if job_id not in _jobs:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return dict(_jobs[job_id])


@app.post("/compare", response_model=schemas.CompareResponse)
def compare_cells(req: schemas.CompareRequest):
    try:
        return compare(load_record(req.record_path), parse_cell(req.a), parse_cell(req.b))
    except (LexentError, OSError, ValueError) as exc:
        _fail(exc)


@app.post("/report", response_model=schemas.ReportResponse)
def report(req: schemas.ReportRequest):
    try:
        text = render_report(load_record(req.record_path), req.format, req.metric)
    except (LexentError, OSError) as exc:
        _fail(exc)
    return {"format": req.format, "text": text}

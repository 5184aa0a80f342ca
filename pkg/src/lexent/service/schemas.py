from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field


class EmbeddingInfoRequest(BaseModel):
    path: str
    format: Optional[Literal["glove_text", "word2vec_binary"]] = None


class EmbeddingInfoResponse(BaseModel):
    dim: int
    vocab_size: int
    format: str


class IngestRequest(BaseModel):
    dataset: str
    in_path: str
    out_path: str


class DatasetMetaModel(BaseModel):
    name: Optional[str] = None
    relation_set: List[str]
    instance_count: int
    domain_count: Optional[int] = None
    raw_instance_count: Optional[int] = None
    discarded_relations: List[str] = Field(default_factory=list)


class StatsRequest(BaseModel):
    path: str


class StatsResponse(BaseModel):
    instance_count: int
    relations: Dict[str, int]
    domains: Dict[str, int]
    domain_count: Optional[int] = None
    vocab_size: int


class SplitRequest(BaseModel):
    protocol: Literal["rand", "lex", "ood", "RAND", "LEX", "OOD"]
    seed: int = 0
    in_path: str
    out_path: str
    ratios: List[float] = Field(default_factory=lambda: [0.70, 0.05, 0.25])


class FoldSummary(BaseModel):
    held_out_domain: Optional[str] = None
    validation_domain: Optional[str] = None
    train: int
    validation: int
    test: int
    discarded: int


class SplitResponse(BaseModel):
    protocol: str
    seed: int
    out_path: str
    folds: List[FoldSummary]


class ComposeRequest(BaseModel):
    vx: List[float]
    vy: List[float]
    composer: str = "concat"
    normalize_inputs: bool = False


class ComposeResponse(BaseModel):
    composer: str
    vector: List[float]


class RunRequest(BaseModel):
    config: Dict[str, Any]
    wait: bool = True


class JobStatus(BaseModel):
    job_id: str
    state: Literal["queued", "running", "done", "failed"]
    error: Optional[str] = None
    output_dir: Optional[str] = None
    summary: Optional[List[Dict[str, Any]]] = None


class CompareRequest(BaseModel):
    record_path: str
    a: str
    b: str


class GainRow(BaseModel):
    metric: str
    a: float
    b: float
    gain: float
    formatted: str


class CompareResponse(BaseModel):
    a: str
    b: str
    rows: List[GainRow]


class ReportRequest(BaseModel):
    record_path: str
    format: Literal["json", "csv", "md"] = "md"
    metric: Optional[Literal["macro_f1", "weighted_f1"]] = None


class ReportResponse(BaseModel):
    format: str
    text: str


class SimilarityRequest(BaseModel):
    dataset_path: str
    embedding_path: str
    embedding_format: Optional[Literal["glove_text", "word2vec_binary"]] = None
    strip_pos_suffix: bool = True
    lowercase: bool = False
    exclude_oov: bool = False
    oov_seed: int = 0


class SimilarityResponse(BaseModel):
    per_relation_mean_cosine: Dict[str, float]
    counts: Dict[str, int]
    in_vocab_counts: Dict[str, int]
    skipped: int

"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class CodePayload(BaseModel):
    """Wire form of a code: one symbol-id list per rank, each ending in eos (0)."""

    messages: list[list[int]]
    alphabet_size: int
    max_len: int


class OptimalCodeRequest(BaseModel):
    n: int = Field(ge=1)
    alphabet_size: int = Field(ge=2)
    max_len: int = Field(ge=1)


class MonkeyTypingRequest(BaseModel):
    n: int = Field(ge=1)
    alphabet_size: int = Field(ge=2)
    max_len: int = Field(ge=1)
    seed: int = 0
    unique: bool = True
    order: str = "rank"


class ControlCodeRequest(BaseModel):
    code: CodePayload
    seed: int = 0


class CodeResponse(BaseModel):
    code: CodePayload
    lengths: list[int]
    is_unique: bool
    power_law_mean_length: float
    tsv: str


class LengthPmfRequest(BaseModel):
    alphabet_size: int = Field(ge=2)
    max_len: int = Field(ge=1)


class LengthPmfResponse(BaseModel):
    pmf: list[float]


class DistributionSpec(BaseModel):
    kind: str = "power_law"  # power_law | uniform


class AnalyzeRequest(BaseModel):
    code: CodePayload
    dist: DistributionSpec = DistributionSpec()
    permutations: int = Field(default=100_000, ge=1)
    seed: int = 0
    smoothing_window: int = Field(default=10, ge=1)


class AnalyzeResponse(BaseModel):
    analysis: dict


class SpeakerProbeRequest(BaseModel):
    n: int = Field(ge=1)
    alphabet_size: int = Field(ge=2)
    max_len: int = Field(ge=1)
    hidden_sizes: list[int] = [100, 250, 500]
    speakers_per_dim: int = Field(default=30, ge=1)
    unique: bool = False
    seed: int = 0


class SpeakerProbeResponse(BaseModel):
    mean_lengths: list[float]
    speakers: int
    expected_mean_length: float  # analytic mean of the random-typing pmf


class ListenerProbeRequest(BaseModel):
    code: CodePayload
    listeners: int = Field(default=50, ge=1)
    hidden: int = Field(default=100, ge=1)
    seed: int = 0
    probability_weighted: bool = False


class ListenerProbeResponse(BaseModel):
    mean: float
    std: float
    per_listener: list[float]


class TrainRequest(BaseModel):
    config: dict
    out_dir: str | None = None
    permutations: int = Field(default=100_000, ge=1)


class TrainResponse(BaseModel):
    status: str
    reason: str
    eval_accuracy: float
    eval_mean_length: float
    episodes_run: int
    code_is_unique: bool
    run_dir: str | None = None


class SweepRequest(BaseModel):
    spec: dict
    out_dir: str
    jobs: int = Field(default=1, ge=1)


class CellSummary(BaseModel):
    max_len: int
    alphabet_size: int
    feasible: bool
    skip_reason: str | None = None
    successes: int = 0
    runs: int = 0


class SweepResponse(BaseModel):
    out_dir: str
    cells: list[CellSummary]


class TableRequest(BaseModel):
    out_dir: str
    lexicons: dict[str, str] = {}  # label -> path of a frequency list


class TableResponse(BaseModel):
    csv: str


class PlotsRequest(BaseModel):
    out_dir: str
    plots_dir: str | None = None
    lexicons: dict[str, str] = {}


class PlotsResponse(BaseModel):
    files: list[str]


class LexiconRequest(BaseModel):
    path: str


class LexiconResponse(BaseModel):
    words: int
    alphabet_size: int
    lengths: list[int]
    top: list[tuple[str, float]]

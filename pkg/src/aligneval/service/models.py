"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..backends import BackendDescriptor
from ..corpus import EvaluationReport
from ..dovescore import DoveScoreResult
from ..harness import Exclusion
from ..permutations import Difficulty


class BackendConfig(BaseModel):
    """Where the service gets completions for a request."""

    kind: Literal["remote", "scripted", "echo", "oracle"]
    model: str = "gpt-4o-mini"
    endpoint: str = ""
    fixture_path: str = ""
    request_timeout: float = 60.0
    max_retries: int = Field(default=3, ge=0)
    max_in_flight: int = Field(default=4, ge=1)

    def to_descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(
            kind=self.kind,
            model=self.model,
            endpoint=self.endpoint,
            fixture_path=self.fixture_path,
            request_timeout=self.request_timeout,
            max_retries=self.max_retries,
            max_in_flight=self.max_in_flight,
        )

    @classmethod
    def from_descriptor(cls, descriptor: BackendDescriptor) -> "BackendConfig":
        return cls(
            kind=descriptor.kind,
            model=descriptor.model,
            endpoint=descriptor.endpoint,
            fixture_path=descriptor.fixture_path,
            request_timeout=descriptor.request_timeout,
            max_retries=descriptor.max_retries,
            max_in_flight=descriptor.max_in_flight,
        )


class HealthResponse(BaseModel):
    status: str
    version: str


class ScoreRequest(BaseModel):
    source: str
    target: str
    backend: BackendConfig
    two_call_sorter: bool = False
    include_audit: bool = False


class ScoreResponse(BaseModel):
    result: DoveScoreResult


class BuildDatasetRequest(BaseModel):
    seeds_path: str
    out_path: str
    failures_path: str = ""
    backend: BackendConfig
    master_seed: int = 0


class BuildDatasetResponse(BaseModel):
    num_seeds: int
    num_instances: int
    num_failures: int
    lie_counts: dict[Difficulty, int]
    event_count_histogram: dict[int, int]
    out_path: str
    failures_path: str


class EvaluateRequest(BaseModel):
    dataset_path: str
    evaluator: str
    include_paraphrases: bool = False
    two_call_sorter: bool = False
    backend: BackendConfig | None = None
    out_path: str = ""
    scores_path: str = ""


class EvaluateResponse(BaseModel):
    report: EvaluationReport
    num_excluded_instances: int
    exclusions: list[Exclusion]
    out_path: str
    scores_path: str


class ReportRequest(BaseModel):
    scores_path: str
    evaluator_name: str = "reaggregated"
    out_path: str = ""


class ReportResponse(BaseModel):
    report: EvaluationReport
    out_path: str

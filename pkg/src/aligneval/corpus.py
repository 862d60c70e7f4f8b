"""Canonical data model and JSONL on-disk format for seed pairs, benchmark
instances, fact sets, and evaluation reports.

Every record type validates its own invariants, so schema violations are
rejected both when reading and when writing.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Iterable, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import AlignEvalError, IoFailure, MalformedLine, MissingField
from .permutations import DIFFICULTIES, Difficulty, max_inversions

PARAPHRASE_KEYS: tuple[str, ...] = ("correct",) + tuple(d.value for d in DIFFICULTIES)


class InvariantViolation(AlignEvalError):
    """A record is structurally parseable but violates a type invariant."""

    def __init__(self, detail: str, line_no: int | None = None):
        self.line_no = line_no
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"{detail}{where}")


class Verdict(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNVERIFIABLE = "unverifiable"


class SeedPair(BaseModel):
    """A source document and its trusted summary, the raw material for one
    benchmark instance."""

    model_config = ConfigDict(extra="forbid")

    id: str
    source: str = Field(min_length=1)
    summary: str = Field(min_length=1)
    origin: str = ""


class InstanceMeta(BaseModel):
    """Provenance recorded with each instance so a build is reproducible."""

    model_config = ConfigDict(extra="forbid")

    origin: str = ""
    num_events: int = Field(gt=0)
    target_inversions: dict[Difficulty, int]
    achieved_shuffle_degree: dict[Difficulty, float]
    generator_model: str = ""
    seed: int = 0

    @model_validator(mode="after")
    def _check_degrees(self) -> "InstanceMeta":
        for field_name in ("target_inversions", "achieved_shuffle_degree"):
            keys = set(getattr(self, field_name))
            if keys != set(DIFFICULTIES):
                raise ValueError(f"{field_name} must cover exactly the four difficulties")
        total = max_inversions(self.num_events)
        for level in DIFFICULTIES:
            target = self.target_inversions[level]
            if target < 0:
                raise ValueError(f"target_inversions[{level.value}] must be >= 0")
            achieved = self.achieved_shuffle_degree[level]
            if not 0.0 <= achieved <= 1.0:
                raise ValueError(f"achieved_shuffle_degree[{level.value}] outside [0, 1]")
            expected = target / total if total else 0.0
            if not math.isclose(achieved, expected, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(
                    f"achieved_shuffle_degree[{level.value}]={achieved} does not equal "
                    f"target_inversions/max_inversions={expected}"
                )
        return self


class DataInstance(BaseModel):
    """One benchmark tuple: a source, its correct target, four montage lies
    (one per difficulty), and five paraphrases.  The correct target and its
    paraphrase carry label 1; all lies and lie paraphrases carry label 0."""

    model_config = ConfigDict(extra="forbid")

    id: str
    source: str = Field(min_length=1)
    correct: str = Field(min_length=1)
    lies: dict[Difficulty, str]
    paraphrases: dict[Literal["correct", "easy", "medium", "hard", "extreme"], str]
    meta: InstanceMeta

    @model_validator(mode="after")
    def _check_texts(self) -> "DataInstance":
        for level in DIFFICULTIES:
            if level not in self.lies:
                raise ValueError(f"missing field: lies.{level.value}")
        for key in PARAPHRASE_KEYS:
            if key not in self.paraphrases:
                raise ValueError(f"missing field: paraphrases.{key}")
        for name, text in list(self.lies.items()) + list(self.paraphrases.items()):
            if not text:
                raise ValueError(f"empty target text: {name}")
        return self


class FactSet(BaseModel):
    """Facts decomposed from a target text: event facts in the order the
    target narrates them, descriptive facts in any order, and one verdict per
    fact."""

    model_config = ConfigDict(extra="forbid")

    event_facts: list[str] = Field(default_factory=list)
    descriptive_facts: list[str] = Field(default_factory=list)
    event_verdicts: dict[int, Verdict] = Field(default_factory=dict)
    descriptive_verdicts: dict[int, Verdict] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_coverage(self) -> "FactSet":
        if set(self.event_verdicts) != set(range(len(self.event_facts))):
            raise ValueError("event_verdicts must cover exactly the event fact indices")
        if set(self.descriptive_verdicts) != set(range(len(self.descriptive_facts))):
            raise ValueError(
                "descriptive_verdicts must cover exactly the descriptive fact indices"
            )
        return self

    @classmethod
    def fresh(cls, event_facts: list[str], descriptive_facts: list[str]) -> "FactSet":
        """A fact set with every verdict initialized to unverifiable."""
        return cls(
            event_facts=event_facts,
            descriptive_facts=descriptive_facts,
            event_verdicts={i: Verdict.UNVERIFIABLE for i in range(len(event_facts))},
            descriptive_verdicts={
                i: Verdict.UNVERIFIABLE for i in range(len(descriptive_facts))
            },
        )

    def correct_event_indices(self) -> list[int]:
        return [i for i in range(len(self.event_facts)) if self.event_verdicts[i] == Verdict.CORRECT]

    def correct_descriptive_count(self) -> int:
        return sum(
            1 for v in self.descriptive_verdicts.values() if v == Verdict.CORRECT
        )


class EvaluationReport(BaseModel):
    """Per-difficulty AUC-ROC values and their average for one evaluator."""

    model_config = ConfigDict(extra="forbid")

    evaluator_name: str
    per_difficulty_auc: dict[Difficulty, float]
    average_auc: float
    num_instances: int = Field(gt=0)
    include_paraphrases: bool

    @model_validator(mode="after")
    def _check_average(self) -> "EvaluationReport":
        if set(self.per_difficulty_auc) != set(DIFFICULTIES):
            raise ValueError("per_difficulty_auc must cover exactly the four difficulties")
        for level, value in self.per_difficulty_auc.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"per_difficulty_auc[{level.value}] outside [0, 1]")
        mean = sum(self.per_difficulty_auc.values()) / len(DIFFICULTIES)
        if not math.isclose(self.average_auc, mean, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError("average_auc is not the mean of the per-difficulty values")
        return self


class BuildFailure(BaseModel):
    """One seed pair that could not be turned into an instance."""

    seed_id: str
    stage: str
    error: str


def _convert_validation_error(exc: ValidationError, line_no: int) -> AlignEvalError:
    for error in exc.errors():
        if error["type"] == "missing":
            name = ".".join(str(part) for part in error["loc"])
            return MissingField(name, line_no=line_no)
        marker = "missing field: "
        message = error.get("msg", "")
        if marker in message:
            return MissingField(message.split(marker, 1)[1].strip(), line_no=line_no)
    first = exc.errors()[0]
    loc = ".".join(str(part) for part in first["loc"])
    detail = f"{loc}: {first['msg']}" if loc else first["msg"]
    return InvariantViolation(detail, line_no=line_no)


def _read_jsonl(path: str | Path, model: type[BaseModel]) -> list:
    records = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
        try:
            records.append(model.model_validate(payload))
        except ValidationError as exc:
            raise _convert_validation_error(exc, line_no) from exc
    return records


def _write_jsonl(path: str | Path, records: Iterable[BaseModel]) -> None:
    lines = []
    for index, record in enumerate(records, start=1):
        # revalidate so post-construction mutation cannot leak invalid rows
        try:
            checked = type(record).model_validate(record.model_dump())
        except ValidationError as exc:
            raise _convert_validation_error(exc, index) from exc
        lines.append(checked.model_dump_json())
    try:
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_seed_file(path: str | Path) -> list[SeedPair]:
    """Parse a JSONL seed file of {id, source, summary, origin} records."""
    return _read_jsonl(path, SeedPair)


def read_instances(path: str | Path) -> list[DataInstance]:
    return _read_jsonl(path, DataInstance)


def write_instances(path: str | Path, instances: Iterable[DataInstance]) -> None:
    _write_jsonl(path, instances)


def write_failures(path: str | Path, failures: Iterable[BuildFailure]) -> None:
    _write_jsonl(path, failures)

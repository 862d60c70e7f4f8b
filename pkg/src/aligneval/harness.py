"""Difficulty-stratified AUC-ROC evaluation of alignment evaluators.

An evaluator maps (source, target) to a real score, higher meaning better
aligned.  For each difficulty the positives (correct targets) are compared
against that difficulty's lies; ties get half credit (Mann-Whitney), which
matters because coarse 1-5 judgments tie constantly.
"""

from __future__ import annotations

import abc

from pydantic import BaseModel, Field, model_validator

from . import dovescore, prompts
from .backends import Backend, CompletionRequest, complete
from .corpus import DataInstance, EvaluationReport
from .errors import AlignEvalError
from .parsing import parse_consistency_score
from .permutations import DIFFICULTIES, canonical_key


class EmptySide(AlignEvalError):
    """AUC-ROC is undefined when either score list is empty."""


class UnknownEvaluator(AlignEvalError):
    def __init__(self, name: str):
        valid = ", ".join(EVALUATOR_NAMES)
        super().__init__(f"unknown evaluator {name!r}; valid evaluators: {valid}")


def auc_roc(positive_scores: list[float], negative_scores: list[float]) -> float:
    """Probability that a random positive outscores a random negative, ties
    counted half.

    Computed from average ranks in O((P+N) log (P+N)); the quadratic
    pair-counting definition is kept as an oracle in the test suite.
    """
    if not positive_scores or not negative_scores:
        raise EmptySide("both score lists must be non-empty")
    labeled = sorted(
        [(s, 1) for s in positive_scores] + [(s, 0) for s in negative_scores]
    )
    rank_sum = 0.0
    start = 0
    while start < len(labeled):
        stop = start
        while stop < len(labeled) and labeled[stop][0] == labeled[start][0]:
            stop += 1
        average_rank = (start + 1 + stop) / 2  # ranks are 1-based start+1..stop
        rank_sum += average_rank * sum(label for _, label in labeled[start:stop])
        start = stop
    p, n = len(positive_scores), len(negative_scores)
    return (rank_sum - p * (p + 1) / 2) / (p * n)


class ScoredPair(BaseModel):
    instance_id: str
    variant: str
    score: float
    label: int = Field(ge=0, le=1)

    @model_validator(mode="after")
    def _check_label(self) -> "ScoredPair":
        expected = 1 if self.variant in ("correct", "correct_paraphrase") else 0
        if self.label != expected:
            raise ValueError(f"variant {self.variant!r} must carry label {expected}")
        return self


class Exclusion(BaseModel):
    instance_id: str
    variant: str
    error: str


class BenchmarkRun(BaseModel):
    report: EvaluationReport
    pairs: list[ScoredPair]
    exclusions: list[Exclusion]


class AlignmentEvaluator(abc.ABC):
    """Scores how well a target aligns with a source; higher is better."""

    name: str

    @abc.abstractmethod
    def score(self, source: str, target: str) -> float: ...


def coarse_llm_evaluator(source: str, target: str, backend: Backend) -> float:
    """One holistic consistency judgment on the 1-5 scale."""
    if not source or not target:
        raise ValueError("source and target must both be non-empty")
    prompt = prompts.COARSE_CONSISTENCY.render(source=source, target=target)
    request = CompletionRequest(prompt=prompt, model=backend.descriptor.model)
    return float(parse_consistency_score(complete(request, backend)))


class CoarseLlmEvaluator(AlignmentEvaluator):
    name = "coarse-llm"

    def __init__(self, backend: Backend):
        self._backend = backend

    def score(self, source: str, target: str) -> float:
        return coarse_llm_evaluator(source, target, self._backend)


class DoveScoreEvaluator(AlignmentEvaluator):
    name = "dovescore"

    def __init__(
        self,
        backend: Backend,
        two_call_sorter: bool = False,
        order_blind: bool = False,
    ):
        self._backend = backend
        self._two_call_sorter = two_call_sorter
        self._order_blind = order_blind
        if order_blind:
            self.name = "dovescore-order-blind"

    def score(self, source: str, target: str) -> float:
        result = dovescore.evaluate(
            source,
            target,
            self._backend,
            two_call_sorter=self._two_call_sorter,
            order_blind=self._order_blind,
        )
        return result.score


class OracleEvaluator(AlignmentEvaluator):
    """Ground-truth oracle: 1 for texts known to be correct targets, else 0.
    Useful only as a harness smoke test."""

    name = "oracle"

    def __init__(self, dataset: list[DataInstance]):
        self._positives = set()
        for instance in dataset:
            self._positives.add(canonical_key(instance.correct))
            self._positives.add(canonical_key(instance.paraphrases["correct"]))

    def score(self, source: str, target: str) -> float:
        return 1.0 if canonical_key(target) in self._positives else 0.0


class ConstantEvaluator(AlignmentEvaluator):
    name = "constant"

    def __init__(self, value: float = 0.5):
        self._value = value

    def score(self, source: str, target: str) -> float:
        return self._value


EVALUATOR_NAMES = ("dovescore", "dovescore-order-blind", "coarse-llm", "oracle", "constant")


def make_evaluator(
    name: str,
    dataset: list[DataInstance],
    backend: Backend | None = None,
    two_call_sorter: bool = False,
) -> AlignmentEvaluator:
    if name in ("dovescore", "dovescore-order-blind", "coarse-llm") and backend is None:
        raise ValueError(f"evaluator {name!r} requires a backend")
    if name == "dovescore":
        return DoveScoreEvaluator(backend, two_call_sorter=two_call_sorter)
    if name == "dovescore-order-blind":
        return DoveScoreEvaluator(backend, two_call_sorter=two_call_sorter, order_blind=True)
    if name == "coarse-llm":
        return CoarseLlmEvaluator(backend)
    if name == "oracle":
        return OracleEvaluator(dataset)
    if name == "constant":
        return ConstantEvaluator()
    raise UnknownEvaluator(name)


def _variants(instance: DataInstance, include_paraphrases: bool) -> list[tuple[str, str, int]]:
    rows = [("correct", instance.correct, 1)]
    rows += [(f"lie_{d.value}", instance.lies[d], 0) for d in DIFFICULTIES]
    if include_paraphrases:
        rows.append(("correct_paraphrase", instance.paraphrases["correct"], 1))
        rows += [
            (f"lie_paraphrase_{d.value}", instance.paraphrases[d.value], 0)
            for d in DIFFICULTIES
        ]
    return rows


def evaluate_benchmark(
    dataset: list[DataInstance],
    evaluator: AlignmentEvaluator,
    include_paraphrases: bool = False,
) -> BenchmarkRun:
    """Score every relevant variant once, then compute one AUC per difficulty
    from a shared positive set and that difficulty's negatives.

    An instance with any failed score is excluded from all four AUCs, keeping
    the positive set identical across difficulties; every exclusion is
    reported.
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    pairs: list[ScoredPair] = []
    exclusions: list[Exclusion] = []
    kept_instances = 0
    for instance in dataset:
        scored: list[ScoredPair] = []
        failed = False
        for variant, text, label in _variants(instance, include_paraphrases):
            try:
                value = evaluator.score(instance.source, text)
            except (AlignEvalError, ValueError) as exc:
                failed = True
                exclusions.append(
                    Exclusion(instance_id=instance.id, variant=variant, error=str(exc))
                )
                continue
            scored.append(
                ScoredPair(
                    instance_id=instance.id, variant=variant, score=value, label=label
                )
            )
        if not failed:
            pairs.extend(scored)
            kept_instances += 1

    pairs.sort(key=lambda pair: (pair.instance_id, pair.variant))
    exclusions.sort(key=lambda row: (row.instance_id, row.variant))

    positives = [
        p.score for p in pairs if p.variant in ("correct", "correct_paraphrase")
    ]
    per_difficulty: dict = {}
    for level in DIFFICULTIES:
        negative_variants = {f"lie_{level.value}", f"lie_paraphrase_{level.value}"}
        negatives = [p.score for p in pairs if p.variant in negative_variants]
        per_difficulty[level] = auc_roc(positives, negatives)

    report = EvaluationReport(
        evaluator_name=evaluator.name,
        per_difficulty_auc=per_difficulty,
        average_auc=sum(per_difficulty.values()) / len(DIFFICULTIES),
        num_instances=kept_instances,
        include_paraphrases=include_paraphrases,
    )
    return BenchmarkRun(report=report, pairs=pairs, exclusions=exclusions)


def reaggregate_pairs(
    pairs: list[ScoredPair], evaluator_name: str = "reaggregated"
) -> EvaluationReport:
    """Rebuild a report from persisted raw scores.  Paraphrase inclusion is
    inferred from the variants present."""
    if not pairs:
        raise ValueError("no scored pairs to aggregate")
    include_paraphrases = any("paraphrase" in p.variant for p in pairs)
    positives = [p.score for p in pairs if p.variant in ("correct", "correct_paraphrase")]
    per_difficulty: dict = {}
    for level in DIFFICULTIES:
        negative_variants = {f"lie_{level.value}", f"lie_paraphrase_{level.value}"}
        negatives = [p.score for p in pairs if p.variant in negative_variants]
        per_difficulty[level] = auc_roc(positives, negatives)
    return EvaluationReport(
        evaluator_name=evaluator_name,
        per_difficulty_auc=per_difficulty,
        average_auc=sum(per_difficulty.values()) / len(DIFFICULTIES),
        num_instances=len({p.instance_id for p in pairs}),
        include_paraphrases=include_paraphrases,
    )

"""The joint fact-and-order alignment evaluator.

A target text is decomposed into event facts (time-ordered) and descriptive
facts (order-free); each fact is verified against the source; the verified
event facts are then ordered as the source narrates them and compared with
the order the target narrates them.  The final score weights fact precision
by an order-consistency factor:

    score = alpha * S_E * S_EO + (1 - alpha) * S_D

with alpha the fraction of facts that are events, S_E / S_D the verified
precision of each list, and S_EO one minus the shuffle degree between the
source-side and target-side orderings of the verified event facts.
"""

from __future__ import annotations

from fractions import Fraction

from pydantic import BaseModel, ConfigDict, model_validator

from . import prompts
from .backends import Backend, CompletionRequest, RecordingBackend, complete
from .corpus import FactSet, Verdict
from .errors import AlignEvalError
from .parsing import (
    parse_fact_lists,
    parse_sorted_events,
    parse_verdict,
    render_event_list,
)
from .permutations import canonical_key, shuffle_degree

# minimum token-set overlap for matching a sorter output line to an input fact
JACCARD_THRESHOLD = 0.5


class EmptyDecomposition(AlignEvalError):
    """Decomposition produced no facts at all, so no score is defined."""


class MatchFailure(AlignEvalError):
    """More than half of the sorter's output lines matched no input fact."""


class StageError(AlignEvalError):
    """A pipeline stage failed; carries the stage label."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class AuditEntry(BaseModel):
    stage: str
    prompt: str
    response: str


class DoveScoreResult(BaseModel):
    """Sub-scores, weight, final score, and the full audit trail of one
    evaluation."""

    model_config = ConfigDict(extra="forbid")

    s_event: float
    s_order: float
    s_desc: float
    alpha: float
    score: float
    facts: FactSet
    source_order: list[int]
    target_order: list[int]
    audit: list[AuditEntry] = []

    @model_validator(mode="after")
    def _check_consistency(self) -> "DoveScoreResult":
        for name in ("s_event", "s_order", "s_desc", "alpha", "score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        reconstructed = self.alpha * self.s_event * self.s_order + (1 - self.alpha) * self.s_desc
        if abs(self.score - reconstructed) > 1e-12:
            raise ValueError("score does not reconstruct from its sub-scores")
        if sorted(self.source_order) != sorted(self.target_order):
            raise ValueError("source_order and target_order index different fact sets")
        return self


def _ask(backend: Backend, prompt: str) -> str:
    request = CompletionRequest(prompt=prompt, model=backend.descriptor.model)
    return complete(request, backend)


def decompose(target: str, backend: Backend) -> FactSet:
    """Split the target into event facts (kept in narrated order) and
    descriptive facts, all verdicts initialized to unverifiable."""
    if not target:
        raise ValueError("target must be non-empty")
    raw = _ask(backend, prompts.FACT_DECOMPOSER.render(paragraph=target))
    event_facts, descriptive_facts = parse_fact_lists(raw)
    if not event_facts and not descriptive_facts:
        raise EmptyDecomposition("decomposer returned two empty lists")
    return FactSet.fresh(event_facts, descriptive_facts)


def check_facts(facts: FactSet, source: str, backend: Backend) -> FactSet:
    """Verify every fact against the source, one completion per fact."""
    if not facts.event_facts and not facts.descriptive_facts:
        raise EmptyDecomposition("no facts to check")
    event_verdicts: dict[int, Verdict] = {}
    descriptive_verdicts: dict[int, Verdict] = {}
    for kind, fact_list, verdicts in (
        ("event", facts.event_facts, event_verdicts),
        ("descriptive", facts.descriptive_facts, descriptive_verdicts),
    ):
        for index, fact in enumerate(fact_list):
            try:
                raw = _ask(
                    backend, prompts.FACT_CHECKER.render(source=source, fact=fact)
                )
            except AlignEvalError as exc:
                raise StageError(f"check_facts:{kind}[{index}]", exc) from exc
            verdicts[index] = parse_verdict(raw)
    return FactSet(
        event_facts=facts.event_facts,
        descriptive_facts=facts.descriptive_facts,
        event_verdicts=event_verdicts,
        descriptive_verdicts=descriptive_verdicts,
    )


def _token_set(text: str) -> frozenset[str]:
    return frozenset(
        token.strip(".,:;!?\"'`()[]").lower() for token in text.split()
    ) - {""}


def order_events(
    paragraph: str, verified_events: list[str], backend: Backend
) -> list[int]:
    """Ask the sorter for the chronological order of the given events in the
    paragraph, then reconcile its output back onto the inputs.

    Each returned line is matched to an input fact by normalized-exact
    comparison first, then by best token-set overlap at Jaccard >= 0.5.
    Returned duplicates keep their first match; input facts the sorter
    dropped are appended at the tail in input order, so the result is always
    a permutation of range(len(verified_events)).
    """
    if len(verified_events) < 2:
        raise ValueError("order_events needs at least two events")
    raw = _ask(
        backend,
        prompts.SORTER.render(
            paragraph=paragraph, events=render_event_list(verified_events)
        ),
    )
    returned = parse_sorted_events(raw)

    exact = {}
    for index, event in enumerate(verified_events):
        exact.setdefault(canonical_key(event), index)
    tokens = [_token_set(event) for event in verified_events]

    order: list[int] = []
    used: set[int] = set()
    unmatched_returned = 0
    for item in returned:
        index = exact.get(canonical_key(item))
        if index is None:
            item_tokens = _token_set(item)
            best_index, best_overlap = None, 0.0
            for candidate, candidate_tokens in enumerate(tokens):
                union = item_tokens | candidate_tokens
                overlap = len(item_tokens & candidate_tokens) / len(union) if union else 0.0
                if overlap > best_overlap:
                    best_index, best_overlap = candidate, overlap
            if best_overlap >= JACCARD_THRESHOLD:
                index = best_index
        if index is None:
            unmatched_returned += 1
            continue
        if index in used:
            continue  # duplicate match: first occurrence wins
        used.add(index)
        order.append(index)

    if returned and unmatched_returned / len(returned) > 0.5:
        raise MatchFailure(
            f"{unmatched_returned} of {len(returned)} sorter lines matched no input fact"
        )
    order.extend(i for i in range(len(verified_events)) if i not in used)
    return order


def event_order_score(source_order: list[int], target_order: list[int]) -> float:
    """1 - ShuffleD between the two orderings of the same fact indices; 1.0
    when fewer than two facts exist (one event cannot be out of order)."""
    if len(source_order) <= 1 and sorted(source_order) == sorted(target_order):
        return 1.0
    return 1.0 - shuffle_degree(source_order, target_order)


def compute_dovescore(
    n_event: int,
    n_event_correct: int,
    n_desc: int,
    n_desc_correct: int,
    s_order: float,
) -> tuple[float, float, float, float]:
    """Combine verified-fact counts and the order score into
    (alpha, s_event, s_desc, score).

    Arithmetic is exact rational internally; a list with no facts on one side
    gets sub-score 1 there, which is harmless because its weight is 0.
    """
    if not 0 <= n_event_correct <= n_event or not 0 <= n_desc_correct <= n_desc:
        raise ValueError("correct counts must lie in [0, total] for each list")
    if not 0.0 <= s_order <= 1.0:
        raise ValueError(f"s_order={s_order} outside [0, 1]")
    if n_event == 0 and n_desc == 0:
        raise EmptyDecomposition("cannot score an empty decomposition")
    alpha = Fraction(n_event, n_event + n_desc)
    s_event = Fraction(n_event_correct, n_event) if n_event else Fraction(1)
    s_desc = Fraction(n_desc_correct, n_desc) if n_desc else Fraction(1)
    score = alpha * s_event * Fraction(s_order) + (1 - alpha) * s_desc
    return float(alpha), float(s_event), float(s_desc), float(score)


def evaluate(
    source: str,
    target: str,
    backend: Backend,
    two_call_sorter: bool = False,
    order_blind: bool = False,
) -> DoveScoreResult:
    """Run the full pipeline on one (source, target) pair.

    By default the sorter runs once, against the source; the target-side
    order is the decomposer's emission order restricted to verified facts
    (the decomposer already lists events as the target narrates them).
    `two_call_sorter` runs the sorter against the target as well.
    `order_blind` forces the order factor to 1, which reduces the score to
    plain fact precision.
    """
    if not source or not target:
        raise ValueError("source and target must both be non-empty")
    audit: list[AuditEntry] = []

    def staged(stage: str, thunk):
        recorder = RecordingBackend(backend)
        try:
            result = thunk(recorder)
        except StageError:
            raise
        except AlignEvalError as exc:
            raise StageError(stage, exc) from exc
        finally:
            audit.extend(
                AuditEntry(stage=stage, prompt=p, response=r)
                for p, r in recorder.exchanges
            )
        return result

    facts = staged("decompose", lambda b: decompose(target, b))
    facts = staged("check_facts", lambda b: check_facts(facts, source, b))

    verified = facts.correct_event_indices()
    verified_texts = [facts.event_facts[i] for i in verified]
    if len(verified) >= 2 and not order_blind:
        positions = staged(
            "sort:source", lambda b: order_events(source, verified_texts, b)
        )
        source_order = [verified[p] for p in positions]
        if two_call_sorter:
            positions = staged(
                "sort:target", lambda b: order_events(target, verified_texts, b)
            )
            target_order = [verified[p] for p in positions]
        else:
            target_order = list(verified)
    else:
        source_order = list(verified)
        target_order = list(verified)

    s_order = 1.0 if order_blind else event_order_score(source_order, target_order)
    alpha, s_event, s_desc, score = compute_dovescore(
        len(facts.event_facts),
        len(verified),
        len(facts.descriptive_facts),
        facts.correct_descriptive_count(),
        s_order,
    )
    return DoveScoreResult(
        s_event=s_event,
        s_order=s_order,
        s_desc=s_desc,
        alpha=alpha,
        score=score,
        facts=facts,
        source_order=source_order,
        target_order=target_order,
        audit=audit,
    )

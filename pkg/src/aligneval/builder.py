"""Constructs benchmark instances from seed pairs: event decomposition,
difficulty-controlled shuffling, incremental lie generation, and
narrative-technique paraphrasing.

The incremental protocol is what keeps event order under exact control: the
draft starts as the first shuffled event verbatim, and every later event is
appended through one completion that instructs the model to continue the
paragraph with a fact that happened after everything so far.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import prompts
from .backends import Backend, CompletionRequest, complete
from .corpus import DataInstance, InstanceMeta, SeedPair
from .errors import AlignEvalError
from .parsing import parse_event_list, parse_rephrase
from .permutations import (
    DIFFICULTIES,
    Difficulty,
    canonical_key,
    max_inversions,
    random_shuffle_with_inversions,
    sample_inversion_target,
)

MIN_EVENTS = 5  # smallest n for which every difficulty band holds an integer


class TooFewEvents(AlignEvalError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"decomposition produced {count} events, need >= {MIN_EVENTS}")


class DuplicateEvents(AlignEvalError):
    """Two decomposed events are identical under the item-identity rules, so
    shuffle-degree bookkeeping would be ill-defined."""


class SameTechnique(AlignEvalError):
    """The paraphrase reused the original narrative technique after a retry."""


class BuildStageError(AlignEvalError):
    """Wraps any failure inside build_instance with the stage it came from,
    so a batch run can record structured per-seed failures."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass(frozen=True)
class EventSequence:
    """Chronologically ordered, pronoun-resolved events decomposed from one
    summary."""

    events: tuple[str, ...]
    source_summary_id: str = ""


@dataclass(frozen=True)
class LieDraft:
    difficulty: Difficulty
    shuffled_events: tuple[str, ...]
    target_inversions: int
    text: str


def _ask(backend: Backend, prompt: str) -> str:
    request = CompletionRequest(prompt=prompt, model=backend.descriptor.model)
    return complete(request, backend)


def decompose_events(
    summary: str, backend: Backend, summary_id: str = ""
) -> EventSequence:
    """Decompose a summary into its chronological event list."""
    if not summary:
        raise ValueError("summary must be non-empty")
    raw = _ask(backend, prompts.DECOMPOSE_EVENTS.render(paragraph=summary))
    events = parse_event_list(raw)
    if len(events) < MIN_EVENTS:
        raise TooFewEvents(len(events))
    if len({canonical_key(e) for e in events}) != len(events):
        raise DuplicateEvents(f"duplicate events in decomposition of {summary_id!r}")
    return EventSequence(events=tuple(events), source_summary_id=summary_id)


def narrate_events(events: list[str], backend: Backend) -> str:
    """The incremental protocol: the draft starts as the first event verbatim
    and each later event is appended through one completion."""
    paragraph = events[0]
    for event in events[1:]:
        paragraph = _ask(
            backend,
            prompts.INCREMENTAL_LIE.render(current_paragraph=paragraph, event=event),
        ).strip()
    return paragraph


def generate_lie(
    seq: EventSequence,
    level: Difficulty,
    backend: Backend,
    rng: random.Random,
) -> LieDraft:
    """Shuffle the events to an inversion count sampled from the level's band,
    then narrate them in shuffled order via the incremental protocol."""
    n = len(seq.events)
    target = sample_inversion_target(n, level, rng)
    shuffled = random_shuffle_with_inversions(seq.events, target, rng)

    low, high = level.band
    degree = Fraction(target, max_inversions(n))
    if not low <= degree <= high:
        raise AssertionError(
            f"sampled inversion count {target} falls outside the {level.value} band"
        )

    return LieDraft(
        difficulty=level,
        shuffled_events=tuple(shuffled),
        target_inversions=target,
        text=narrate_events(shuffled, backend),
    )


def paraphrase(text: str, backend: Backend) -> tuple[tuple[str, str], str]:
    """Rephrase with a different narrative technique.  Retries once when the
    model reuses the original technique, then fails."""
    if not text:
        raise ValueError("text must be non-empty")
    prompt = prompts.REPHRASE.render(paragraph=text)
    for attempt in range(2):
        result = parse_rephrase(_ask(backend, prompt))
        if result.chosen_technique != result.original_technique:
            return (result.original_technique, result.chosen_technique), result.rephrased
    raise SameTechnique(
        f"paraphrase kept technique {result.chosen_technique!r} after retry"
    )


def build_instance(
    seed: SeedPair,
    backend: Backend,
    rng: random.Random,
    master_seed: int = 0,
) -> DataInstance:
    """Build one complete instance: four lies plus five paraphrases, with
    full provenance.  Any step failure aborts the instance as a
    BuildStageError; nothing partial escapes."""

    def stage(name: str, thunk):
        try:
            return thunk()
        except AlignEvalError as exc:
            raise BuildStageError(name, exc) from exc

    seq = stage("decompose", lambda: decompose_events(seed.summary, backend, seed.id))
    n = len(seq.events)

    lies: dict[Difficulty, str] = {}
    targets: dict[Difficulty, int] = {}
    for level in DIFFICULTIES:
        draft = stage(f"lie:{level.value}", lambda: generate_lie(seq, level, backend, rng))
        lies[level] = draft.text
        targets[level] = draft.target_inversions

    paraphrases: dict[str, str] = {}
    _, paraphrases["correct"] = stage(
        "paraphrase:correct", lambda: paraphrase(seed.summary, backend)
    )
    for level in DIFFICULTIES:
        _, paraphrases[level.value] = stage(
            f"paraphrase:{level.value}", lambda: paraphrase(lies[level], backend)
        )

    total = max_inversions(n)
    meta = InstanceMeta(
        origin=seed.origin,
        num_events=n,
        target_inversions=targets,
        achieved_shuffle_degree={d: targets[d] / total for d in DIFFICULTIES},
        generator_model=backend.descriptor.model,
        seed=master_seed,
    )
    return DataInstance(
        id=seed.id,
        source=seed.source,
        correct=seed.summary,
        lies=lies,
        paraphrases=paraphrases,
        meta=meta,
    )


def instance_rng(master_seed: int, seed_id: str) -> random.Random:
    """Per-instance generator keyed off the master seed, so instances can be
    built in any order or concurrently without perturbing outputs."""
    return random.Random(f"{master_seed}:{seed_id}")

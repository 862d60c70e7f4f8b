"""Deterministic rule backends and ground-truth event worlds.

The echo backend answers the builder's prompts by pure text manipulation, so
a generated lie is exactly the shuffled events concatenated in order.  The
oracle backend answers the scoring prompts by resolving facts and ordering
against the source text itself.  Together they let every pipeline run
end-to-end offline, which is how the separation experiment and the test
suite exercise the system.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from . import parsing, prompts
from .backends import Backend, BackendDescriptor, NoScriptedResponse, RuleBackend
from .corpus import SeedPair
from .permutations import canonical_key


def split_sentences(text: str) -> list[str]:
    """Period-delimited sentence split; only reliable for synthetic-world
    prose, which never contains interior periods."""
    return [part.strip() + "." for part in text.split(".") if part.strip()]


@lru_cache(maxsize=None)
def _extractor(template: prompts.PromptTemplate) -> re.Pattern[str]:
    """A fullmatch regex recovering a template's placeholder values."""
    pieces = re.split(r"\{(\w+)\}", template.body)
    pattern = ""
    for index, piece in enumerate(pieces):
        if index % 2:
            pattern += f"(?P<{piece}>.*?)"
        else:
            pattern += re.escape(piece)
    return re.compile(pattern, flags=re.DOTALL)


def _match(template: prompts.PromptTemplate, prompt: str) -> dict[str, str] | None:
    found = _extractor(template).fullmatch(prompt)
    return found.groupdict() if found else None


def _echo_rule(prompt: str) -> str:
    fields = _match(prompts.DECOMPOSE_EVENTS, prompt)
    if fields is not None:
        return parsing.render_event_list(split_sentences(fields["paragraph"]))
    fields = _match(prompts.INCREMENTAL_LIE, prompt)
    if fields is not None:
        return fields["current_paragraph"].strip() + " " + fields["event"].strip()
    fields = _match(prompts.REPHRASE, prompt)
    if fields is not None:
        return (
            "- Original_Narrative_Technique: Chronological Order\n"
            "- Choosed_Narrative_Technique: Flashback\n"
            f"- Rephrased: {fields['paragraph'].strip()}"
        )
    raise NoScriptedResponse(f"echo backend: unrecognized prompt: {prompt[:80]!r}")


def _source_positions(paragraph: str) -> dict:
    return {
        canonical_key(sentence): index
        for index, sentence in enumerate(split_sentences(paragraph))
    }


def _oracle_rule(prompt: str) -> str:
    fields = _match(prompts.FACT_DECOMPOSER, prompt)
    if fields is not None:
        return parsing.render_fact_lists(split_sentences(fields["paragraph"]), [])
    fields = _match(prompts.FACT_CHECKER, prompt)
    if fields is not None:
        positions = _source_positions(fields["source"])
        return "True" if canonical_key(fields["fact"].strip()) in positions else "False"
    fields = _match(prompts.SORTER, prompt)
    if fields is not None:
        events = parsing.parse_event_list(fields["events"])
        positions = _source_positions(fields["paragraph"])
        in_source = [e for e in events if canonical_key(e) in positions]
        missing = [e for e in events if canonical_key(e) not in positions]
        in_source.sort(key=lambda e: positions[canonical_key(e)])
        return parsing.render_sorted_events(in_source + missing)
    fields = _match(prompts.COARSE_CONSISTENCY, prompt)
    if fields is not None:
        positions = _source_positions(fields["source"])
        target_keys = [canonical_key(s) for s in split_sentences(fields["target"])]
        if not target_keys or any(key not in positions for key in target_keys):
            return "- Consistency: 1"
        ranks = [positions[key] for key in target_keys]
        ordered = all(a <= b for a, b in zip(ranks, ranks[1:]))
        return "- Consistency: 5" if ordered else "- Consistency: 2"
    raise NoScriptedResponse(f"oracle backend: unrecognized prompt: {prompt[:80]!r}")


def echo_backend(descriptor: BackendDescriptor | None = None) -> Backend:
    return RuleBackend(_echo_rule, descriptor or BackendDescriptor(kind="echo"))


def oracle_backend(descriptor: BackendDescriptor | None = None) -> Backend:
    return RuleBackend(
        _oracle_rule, descriptor or BackendDescriptor(kind="oracle")
    )


_ACTORS = ("Crew", "Team", "Unit", "Squad", "Patrol", "Detail")
_VERBS = (
    "mapped",
    "logged",
    "repaired",
    "inspected",
    "archived",
    "cleared",
    "sampled",
    "calibrated",
)
_OBJECTS = (
    "beacon",
    "relay",
    "channel",
    "outpost",
    "reservoir",
    "junction",
    "antenna",
    "vault",
)


@dataclass(frozen=True)
class EventWorld:
    """A ground-truth chronology: distinct single-sentence events in their
    true order.  The narration is simply the events joined in order."""

    id: str
    events: tuple[str, ...]

    @property
    def narration(self) -> str:
        return " ".join(self.events)


def make_worlds(
    count: int,
    rng: random.Random,
    min_events: int = 6,
    max_events: int = 12,
) -> list[EventWorld]:
    """Generate ground-truth worlds with distinct, comma-free, one-period
    event sentences (the splitting and matching rules above rely on that)."""
    worlds = []
    for w in range(count):
        n = rng.randint(min_events, max_events)
        events = tuple(
            f"{_ACTORS[w % len(_ACTORS)]} {w + 1:02d} "
            f"{_VERBS[(w + k) % len(_VERBS)]} "
            f"{_OBJECTS[(3 * w + k) % len(_OBJECTS)]} {k + 1:02d}."
            for k in range(n)
        )
        worlds.append(EventWorld(id=f"world-{w + 1:03d}", events=events))
    return worlds


def seed_pairs_from_worlds(worlds: list[EventWorld]) -> list[SeedPair]:
    return [
        SeedPair(
            id=world.id,
            source=world.narration,
            summary=world.narration,
            origin="synthetic",
        )
        for world in worlds
    ]

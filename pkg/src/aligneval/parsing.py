"""Strict parsers for model responses.

Each parser accepts the canonical format its prompt requests plus one lenient
fallback; anything else raises a declared error.  Silent misparsing would
corrupt scores downstream, so there is no best-effort mode beyond that.
Renderers emit the canonical format, and render-then-parse is the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import Verdict
from .errors import AlignEvalError, MissingField


class EmptyEventList(AlignEvalError):
    """A response contained no parseable list items."""


class MissingSection(AlignEvalError):
    """A required headed section was not found in a response."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing section: {name}")


class UnparseableOrder(AlignEvalError):
    """A sorter response was neither a bracketed list nor a line list."""


class NoScoreFound(AlignEvalError):
    """A consistency response contained no integer in 1..5."""


class UnknownTechnique(AlignEvalError):
    """A rephrase response named a narrative technique outside the known set."""


NARRATIVE_TECHNIQUES = frozenset(
    {"chronological", "flashback", "interjection", "supplementary narration"}
)

# longer aliases first so "chronological order" is not left half-matched
_TECHNIQUE_ALIASES = {
    "chronological order": "chronological",
    "chronological": "chronological",
    "flashback": "flashback",
    "interjection": "interjection",
    "supplementary narration": "supplementary narration",
    "supplementary": "supplementary narration",
}

_LIST_MARKER = re.compile(r"^\s*(?:[-*•·]|\d+[.)])\s*")


def strip_list_marker(line: str) -> str:
    return _LIST_MARKER.sub("", line).strip()


def parse_event_list(raw: str) -> list[str]:
    """Split an enumerated or bulleted response into trimmed event strings,
    preserving order.  Bare non-empty lines are accepted as a fallback."""
    events = [strip_list_marker(line) for line in raw.splitlines()]
    events = [event for event in events if event]
    if not events:
        raise EmptyEventList("no events found in response")
    return events


def render_event_list(events: list[str]) -> str:
    return "\n".join(f"- {event}" for event in events)


def parse_fact_lists(raw: str) -> tuple[list[str], list[str]]:
    """Locate the event-facts and descriptive-facts sections (headings matched
    case-insensitively) and parse each as a list.  The descriptive section may
    be empty; both headings must be present."""
    lines = raw.splitlines()
    event_at = descriptive_at = None
    for index, line in enumerate(lines):
        lowered = line.lower()
        if event_at is None and "event facts" in lowered:
            event_at = index
        elif descriptive_at is None and "descriptive facts" in lowered:
            descriptive_at = index
    if event_at is None:
        raise MissingSection("event")
    if descriptive_at is None:
        raise MissingSection("descriptive")

    def section(start: int, end: int) -> list[str]:
        items = [strip_list_marker(line) for line in lines[start + 1 : end]]
        return [item for item in items if item]

    if event_at < descriptive_at:
        return section(event_at, descriptive_at), section(descriptive_at, len(lines))
    return section(event_at, len(lines)), section(descriptive_at, event_at)


def render_fact_lists(event_facts: list[str], descriptive_facts: list[str]) -> str:
    parts = ["Event Facts List:"]
    parts += [f"- {fact}" for fact in event_facts]
    parts.append("Descriptive Facts List:")
    parts += [f"- {fact}" for fact in descriptive_facts]
    return "\n".join(parts)


def parse_verdict(raw: str) -> Verdict:
    """Map the first token of a fact-checker response: true -> correct,
    false -> incorrect, anything else -> unverifiable (the catch-all; callers
    decide how to count it)."""
    token = ""
    stripped = raw.strip()
    if stripped:
        token = stripped.split()[0].strip(".,:;!?\"'`*()[]").lower()
    if token == "true":
        return Verdict.CORRECT
    if token == "false":
        return Verdict.INCORRECT
    return Verdict.UNVERIFIABLE


def parse_sorted_events(raw: str) -> list[str]:
    """Parse a sorter response: canonically a bracketed comma-separated list,
    with a marker line list as the fallback."""
    match = re.search(r"\[(.*)\]", raw, flags=re.DOTALL)
    if match:
        items = [item.strip() for item in match.group(1).split(",")]
        items = [item for item in items if item]
        if items:
            return items
    items = []
    for line in raw.splitlines():
        if _LIST_MARKER.match(line):
            item = strip_list_marker(line)
            if item:
                items.append(item)
    if not items:
        raise UnparseableOrder(f"no ordered event list found in: {raw[:200]!r}")
    return items


def render_sorted_events(events: list[str]) -> str:
    return "[" + ", ".join(events) + "]"


@dataclass(frozen=True)
class RephraseResult:
    original_technique: str
    chosen_technique: str
    rephrased: str


def _normalize_technique(value: str) -> str:
    key = " ".join(value.lower().replace("_", " ").strip(" .:*-").split())
    technique = _TECHNIQUE_ALIASES.get(key)
    if technique is None:
        raise UnknownTechnique(f"unknown narrative technique: {value!r}")
    return technique


def parse_rephrase(raw: str) -> RephraseResult:
    """Extract the three labeled fields of a rephrase response.  Accepts both
    the Choosed_ and Chosen_ spellings of the second label."""
    original = re.search(
        r"original[_ ]?narrative[_ ]?technique\s*:\s*(.+)", raw, flags=re.IGNORECASE
    )
    chosen = re.search(
        r"(?:choosed|choosen|chosen)[_ ]?narrative[_ ]?technique\s*:\s*(.+)",
        raw,
        flags=re.IGNORECASE,
    )
    rephrased = re.search(r"rephrased\s*:\s*(.+)", raw, flags=re.IGNORECASE | re.DOTALL)
    if original is None:
        raise MissingField("original_technique")
    if chosen is None:
        raise MissingField("chosen_technique")
    if rephrased is None or not rephrased.group(1).strip():
        raise MissingField("rephrased")
    return RephraseResult(
        original_technique=_normalize_technique(original.group(1)),
        chosen_technique=_normalize_technique(chosen.group(1)),
        rephrased=rephrased.group(1).strip(),
    )


def parse_consistency_score(raw: str) -> int:
    """Extract the first integer 1..5, preferring one after a 'Consistency:'
    label."""
    labeled = re.search(r"consistency\s*:\s*([1-5])\b", raw, flags=re.IGNORECASE)
    if labeled:
        return int(labeled.group(1))
    bare = re.search(r"(?<![\d.])([1-5])(?![\d.])", raw)
    if bare:
        return int(bare.group(1))
    raise NoScoreFound(f"no consistency score in: {raw[:200]!r}")

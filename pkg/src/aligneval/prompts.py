"""Prompt templates for every model-backed step.

Templates render with str.format-style named placeholders and refuse to
render while any placeholder is unfilled.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AlignEvalError


class UnfilledPlaceholder(AlignEvalError):
    """A template was rendered without a value for one of its placeholders."""


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    def render(self, **fields: str) -> str:
        try:
            return self.body.format(**fields)
        except (KeyError, IndexError) as exc:
            raise UnfilledPlaceholder(
                f"template {self.name!r} is missing a value for {exc}"
            ) from exc


DECOMPOSE_EVENTS = PromptTemplate(
    name="decompose_events",
    body=(
        "Break down the following paragraph into a list of independent events, "
        "listed in chronological order. Resolve all pronouns and referring "
        "expressions to their corresponding specific entities. Output only the "
        "event list and nothing else.\n"
        "\n"
        "{paragraph}"
    ),
)

INCREMENTAL_LIE = PromptTemplate(
    name="incremental_lie",
    body=(
        "Here is what has happened so far:\n"
        "{current_paragraph}\n"
        "The following new fact occurred after the events described above:\n"
        "{event}\n"
        "Please append this new fact directly to the current paragraph. If the "
        "addition feels awkward, make only minimal word adjustments to ensure the "
        "paragraph flows smoothly—without adding extra narrative details or "
        'transitional phrases such as "next" or "following that." Output only the '
        "updated paragraph."
    ),
)

REPHRASE = PromptTemplate(
    name="rephrase",
    body=(
        "# Task: Rephrase\n"
        "Rephrase a given paragraph by applying a different narrative sequencing "
        "technique. Follow the steps below carefully:\n"
        "\n"
        "## Step 1: Identify the Original Narrative Technique\n"
        "Read the original paragraph and determine which of the following "
        "sequencing techniques it uses:\n"
        "\n"
        "- Chronological Order — Events are presented strictly in the order "
        "they occurred.\n"
        "- Flashback — The paragraph begins with a later or climactic moment, "
        "then shifts back to earlier events.\n"
        "- Interjection — The main narrative is interrupted by a relevant "
        "insert such as a memory, reflection, or side story.\n"
        "- Supplementary Narration — Contextual background is added to support "
        "understanding, even if the details weren't part of the original sequence.\n"
        "\n"
        "## Step 2: Rephrase Using a Different Technique\n"
        "Choose a different narrative sequencing method from the list above and "
        "rephrase the paragraph accordingly.\n"
        "\n"
        "Guidelines for Rephrasing:\n"
        "- Use as much of the original wording as possible.\n"
        "- Do not add any new events or fabricate details not present in the "
        "original.\n"
        "- Avoid ambiguous expression.\n"
        "\n"
        "Please output the result in the following format:\n"
        "- Original_Narrative_Technique: <original_narrative_technique>\n"
        "- Choosed_Narrative_Technique: <choosed_narrative_technique>\n"
        "- Rephrased: <rephrased_paragraph>\n"
        "\n"
        "{paragraph}"
    ),
)

COARSE_CONSISTENCY = PromptTemplate(
    name="coarse_consistency",
    body=(
        "You will be given a source text. You will then be given one target text "
        "to be evaluated. Your task is to rate the information alignment of target "
        "text against the source text. Please make sure you read and understand "
        "these instructions carefully. Please keep this source text open while "
        "reviewing, and refer to it as needed.\n"
        "\n"
        "Evaluation Criteria:\n"
        "Consistency (1-5) - the information alignment between the target text and "
        "the source text. A consistent target text contains only statements that "
        "are entailed by the source source text. Annotators were also asked to "
        "penalize target texts that contained hallucinated facts. 1 - worst, 5 - "
        "best.\n"
        "\n"
        "Evaluation Steps:\n"
        "1. Read the source text carefully and identify the main facts and details "
        "it presents.\n"
        "2. Read the target text and compare it to the source text. Check if the "
        "target text contains any factual errors that are not supported by the "
        "source text.\n"
        "4. Assign a score for consistency based on the Evaluation Criteria.\n"
        "\n"
        "Note: only output the score for consistency, no other text.\n"
        "\n"
        "Source Text:\n"
        "{source}\n"
        "\n"
        "Target Text:\n"
        "{target}\n"
        "\n"
        "Evaluation Form (scores ONLY):\n"
        "- Consistency:"
    ),
)

FACT_DECOMPOSER = PromptTemplate(
    name="fact_decomposer",
    body=(
        "Please analyze the following paragraph and extract all independent "
        "factual statements, categorized into two types: Event Facts and "
        "Descriptive Facts.\n"
        "\n"
        "## Definitions:\n"
        "- Event Facts:\n"
        "Time-dependent facts that describe specific actions, changes, "
        "occurrences, or emotional/mental states. These involve entities doing "
        "something or experiencing something dynamically at a particular point in "
        "time, and can be situated along a timeline.\n"
        "Examples:\n"
        "The spacecraft entered Mars' orbit after a six-month journey.\n"
        "Dr. Lin submitted her resignation.\n"
        "Mary felt happy about her promotion.\n"
        "\n"
        "- Descriptive Facts:\n"
        "Time-independent facts that define, classify, or describe static "
        "attributes or relationships of entities. These do not occur at a "
        "specific time, and are considered stable or inherent properties.\n"
        "Examples:\n"
        "Helianthus is a genus in the daisy family Asteraceae.\n"
        "Octopuses have three hearts.\n"
        "\n"
        "## Instructions:\n"
        "1. Break down the paragraph into individual, self-contained factual "
        "statements.\n"
        "2. Resolve all pronouns and referring expressions to their full entity "
        "names for clarity.\n"
        "3. Categorize each fact as either an Event Fact or a Descriptive Fact, "
        "according to the definitions above.\n"
        "3. Output two separate lists:\n"
        "- Event Facts List: List in chronological order.\n"
        "- Descriptive Facts List: Order does not matter.\n"
        "\n"
        "Paragraph: {paragraph}\n"
        "\n"
        "Event Facts List and Descriptive Facts List:"
    ),
)

FACT_CHECKER = PromptTemplate(
    name="fact_checker",
    body=(
        "Check if the fact is true based on the given context. Return True or "
        "False.\n"
        "\n"
        "Context: {source}\n"
        "\n"
        "Fact: {fact} True or False?\n"
        "\n"
        "Output:"
    ),
)

SORTER = PromptTemplate(
    name="sorter",
    body=(
        "You are a helpful assistant that determines the correct chronological "
        "order of events in a paragraph. Do NOT add, remove, or change any "
        "events. Only reorder the exact events from the input list.\n"
        "\n"
        "Example 1:\n"
        "Paragraph:\n"
        "Tom woke up early. He brushed his teeth and then had breakfast. After "
        "that, he went for a run.\n"
        "Events:\n"
        "- Tom had breakfast\n"
        "- Tom woke up\n"
        "- Tom went for a run\n"
        "- Tom brushed his teeth\n"
        "Ordered Events:\n"
        "[Tom woke up, Tom brushed his teeth, Tom had breakfast, Tom went for a run]\n"
        "\n"
        "Example 2:\n"
        "Paragraph:\n"
        "After she went out for lunch, Sarah called her friend. Earlier in the "
        "morning, she had replied to a message right after checking her email.\n"
        "Events:\n"
        "- Sarah checked her email\n"
        "- Sarah went out for lunch\n"
        "- Sarah called her friend\n"
        "- Sarah replied to a message\n"
        "Ordered Events:\n"
        "[Sarah checked her email, Sarah replied to a message, Sarah went out for "
        "lunch, Sarah called her friend]\n"
        "\n"
        "Now sort the following events based on the paragraph below, and return "
        "as a list of events:\n"
        "\n"
        "Paragraph: {paragraph}\n"
        "\n"
        "Events:\n"
        "{events}\n"
        "\n"
        "Ordered Events:"
    ),
)

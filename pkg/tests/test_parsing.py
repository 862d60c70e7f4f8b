import pytest
from hypothesis import given
from hypothesis import strategies as st

from aligneval.corpus import Verdict
from aligneval.errors import MissingField
from aligneval.parsing import (
    EmptyEventList,
    MissingSection,
    NoScoreFound,
    UnknownTechnique,
    UnparseableOrder,
    parse_consistency_score,
    parse_event_list,
    parse_fact_lists,
    parse_rephrase,
    parse_sorted_events,
    parse_verdict,
    render_event_list,
    render_fact_lists,
    render_sorted_events,
)

clean_text = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" "),
    min_size=1,
    max_size=40,
).map(lambda s: " ".join(s.split())).filter(bool)


class TestEventList:
    def test_bullets(self):
        assert parse_event_list("- A woke\n- A ran") == ["A woke", "A ran"]

    def test_numbered(self):
        assert parse_event_list("1. X happened\n2. Y happened") == ["X happened", "Y happened"]

    def test_unicode_bullets_and_blank_lines(self):
        assert parse_event_list("• one\n\n• two\n") == ["one", "two"]

    def test_bare_lines_fallback(self):
        assert parse_event_list("first\nsecond") == ["first", "second"]

    def test_empty(self):
        with pytest.raises(EmptyEventList):
            parse_event_list("")
        with pytest.raises(EmptyEventList):
            parse_event_list("  \n \n")

    @given(st.lists(clean_text, min_size=1, max_size=8))
    def test_render_parse_round_trip(self, events):
        assert parse_event_list(render_event_list(events)) == events


class TestFactLists:
    def test_canonical_two_sections(self):
        raw = "Event Facts List:\n- e1\nDescriptive Facts List:\n- d1"
        assert parse_fact_lists(raw) == (["e1"], ["d1"])

    def test_empty_descriptive_section(self):
        raw = "Event Facts List:\n- e1\nDescriptive Facts List:\n"
        assert parse_fact_lists(raw) == (["e1"], [])

    def test_case_insensitive_headings(self):
        raw = "EVENT FACTS list\n- e1\ndescriptive facts LIST\n- d1\n- d2"
        assert parse_fact_lists(raw) == (["e1"], ["d1", "d2"])

    def test_sections_in_reverse_order(self):
        raw = "Descriptive Facts List:\n- d1\nEvent Facts List:\n- e1"
        assert parse_fact_lists(raw) == (["e1"], ["d1"])

    def test_missing_event_section(self):
        with pytest.raises(MissingSection) as excinfo:
            parse_fact_lists("Descriptive Facts List:\n- d1")
        assert excinfo.value.name == "event"

    def test_missing_descriptive_section(self):
        with pytest.raises(MissingSection) as excinfo:
            parse_fact_lists("Event Facts List:\n- e1")
        assert excinfo.value.name == "descriptive"

    @given(
        st.lists(clean_text, max_size=6),
        st.lists(clean_text, max_size=6),
    )
    def test_render_parse_round_trip(self, events, descriptives):
        raw = render_fact_lists(events, descriptives)
        assert parse_fact_lists(raw) == (events, descriptives)


class TestVerdict:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("True", Verdict.CORRECT),
            ("true", Verdict.CORRECT),
            ("TRUE.", Verdict.CORRECT),
            ("false.", Verdict.INCORRECT),
            ("False, because...", Verdict.INCORRECT),
            ("I cannot determine", Verdict.UNVERIFIABLE),
            ("", Verdict.UNVERIFIABLE),
            ("maybe true", Verdict.UNVERIFIABLE),
        ],
    )
    def test_first_token_rules(self, raw, expected):
        assert parse_verdict(raw) == expected


class TestSortedEvents:
    def test_bracketed(self):
        assert parse_sorted_events("[Tom woke up, Tom ran]") == ["Tom woke up", "Tom ran"]

    def test_line_list_fallback(self):
        assert parse_sorted_events("- e2\n- e1") == ["e2", "e1"]

    def test_prose_is_unparseable(self):
        with pytest.raises(UnparseableOrder):
            parse_sorted_events("no events here")

    def test_multiline_brackets(self):
        assert parse_sorted_events("[a,\n b,\n c]") == ["a", "b", "c"]

    @given(st.lists(clean_text.filter(lambda s: "," not in s), min_size=1, max_size=6))
    def test_render_parse_round_trip(self, events):
        assert parse_sorted_events(render_sorted_events(events)) == events


class TestRephrase:
    WELL_FORMED = (
        "- Original_Narrative_Technique: Chronological Order\n"
        "- Choosed_Narrative_Technique: Flashback\n"
        "- Rephrased: It had already ended when it began."
    )

    def test_well_formed(self):
        result = parse_rephrase(self.WELL_FORMED)
        assert result.original_technique == "chronological"
        assert result.chosen_technique == "flashback"
        assert result.rephrased == "It had already ended when it began."

    def test_chosen_spelling_accepted(self):
        raw = self.WELL_FORMED.replace("Choosed", "Chosen")
        assert parse_rephrase(raw).chosen_technique == "flashback"

    def test_same_technique_is_accepted_by_parser(self):
        raw = self.WELL_FORMED.replace("Flashback", "Chronological Order")
        result = parse_rephrase(raw)
        assert result.chosen_technique == result.original_technique

    def test_missing_rephrased_label(self):
        raw = "\n".join(self.WELL_FORMED.splitlines()[:2])
        with pytest.raises(MissingField) as excinfo:
            parse_rephrase(raw)
        assert excinfo.value.name == "rephrased"

    def test_unknown_technique(self):
        raw = self.WELL_FORMED.replace("Flashback", "Haiku")
        with pytest.raises(UnknownTechnique):
            parse_rephrase(raw)

    def test_supplementary_narration(self):
        raw = self.WELL_FORMED.replace("Flashback", "Supplementary Narration")
        assert parse_rephrase(raw).chosen_technique == "supplementary narration"

    def test_multiline_rephrased_body(self):
        raw = self.WELL_FORMED + "\nIt kept going on the next line."
        assert parse_rephrase(raw).rephrased.endswith("next line.")


@given(st.text(max_size=300))
def test_parsers_are_total_over_their_error_contract(raw):
    # every parser either returns a value or raises its declared error
    parse_verdict(raw)
    for parser, declared in [
        (parse_event_list, EmptyEventList),
        (parse_fact_lists, MissingSection),
        (parse_sorted_events, UnparseableOrder),
        (parse_rephrase, (MissingField, UnknownTechnique)),
        (parse_consistency_score, NoScoreFound),
    ]:
        try:
            parser(raw)
        except declared:
            pass


class TestConsistencyScore:
    def test_labeled(self):
        assert parse_consistency_score("- Consistency: 4") == 4

    def test_bare_integer(self):
        assert parse_consistency_score("3") == 3

    def test_no_score(self):
        with pytest.raises(NoScoreFound):
            parse_consistency_score("great summary")

    def test_out_of_range_digits_ignored(self):
        with pytest.raises(NoScoreFound):
            parse_consistency_score("scored 10 out of 10")

    def test_label_preferred_over_earlier_digit(self):
        assert parse_consistency_score("2 criteria considered. Consistency: 5") == 5

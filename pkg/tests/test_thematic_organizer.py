import json

import pytest

from knav.cluster_reader import SubtopicReport, Verdict
from knav.errors import OrganizerOutputError, ValidationError
from knav.llm_gateway import Gateway, Mode, Transcript
from knav.thematic_organizer import (
    PROMPT_CHAR_BUDGET,
    Theme,
    ThemeOutline,
    build_organizer_prompt,
    organize,
    validate_outline,
)

from .conftest import FakeChatProvider


def report(cid, title, description="about this subtopic"):
    return SubtopicReport(
        cluster_id=cid,
        description=description,
        subtopic_title=title,
        relatedness=5,
        is_related=Verdict.RELATED,
        doc_ids={f"d{cid}"},
    )


def organizer_reply(themes, assignment):
    return json.dumps(
        {
            "clusters": [
                {"cluster_id": str(tid), "cluster_title": title, "description": f"theme {tid}"}
                for tid, title in themes
            ],
            "subtopics": {str(sid): str(tid) for sid, tid in assignment.items()},
        }
    )


def live_gateway(replies):
    return Gateway(mode=Mode.LIVE, provider=FakeChatProvider(replies=replies))


class TestBuildOrganizerPrompt:
    def test_embeds_dictionary_and_schema(self):
        reports = [report(i, f"Subtopic {i}") for i in range(3)]
        prompt = build_organizer_prompt("dinosaur evolution", reports)
        assert "Do not leave any subtopic without a cluster" in prompt
        assert "Output a json object" in prompt
        embedded = prompt.split("Subtopic dictionary: ", 1)[1]
        parsed = json.loads(embedded)
        assert set(parsed) == {"0", "1", "2"}
        assert parsed["1"]["title"] == "Subtopic 1"

    def test_quotes_in_titles_escape_cleanly(self):
        reports = [report(0, 'The "quoted" subtopic'), report(1, "Back\\slash topic")]
        prompt = build_organizer_prompt("t", reports)
        embedded = prompt.split("Subtopic dictionary: ", 1)[1]
        parsed = json.loads(embedded)
        assert parsed["0"]["title"] == 'The "quoted" subtopic'
        assert parsed["1"]["title"] == "Back\\slash topic"

    def test_eighty_reports_fit_single_prompt(self):
        reports = [
            report(i, f"Subtopic title number {i}", description="A realistic description " * 12)
            for i in range(80)
        ]
        prompt = build_organizer_prompt("t", reports)
        assert len(prompt) < PROMPT_CHAR_BUDGET

    def test_empty_reports_rejected(self):
        with pytest.raises(ValidationError):
            build_organizer_prompt("t", [])


class TestOrganize:
    def test_groups_per_reply(self):
        reports = [
            report(0, "Dinosaur Thermoregulation and Metabolism"),
            report(1, "Dinosaur Musculature and Biomechanics"),
            report(2, "Origins and Ascent of Dinosaurs"),
        ]
        reply = organizer_reply(
            [(1, "Physiology and Functional Morphology"), (2, "Evolution and Phylogeny")],
            {0: 1, 1: 1, 2: 2},
        )
        outline = organize("dinosaur research", reports, live_gateway([reply]))
        assert outline.assignment == {0: 1, 1: 1, 2: 2}
        titles = {t.theme_id: t.title for t in outline.themes}
        assert titles[1] == "Physiology and Functional Morphology"
        assert validate_outline(outline, reports) == []

    def test_repair_covers_missing_subtopic(self):
        reports = [report(i, f"S{i}") for i in range(3)]
        first = organizer_reply([(1, "Theme A"), (2, "Theme B")], {0: 1, 1: 1})
        repair = json.dumps({"subtopics": {"2": "2"}})
        provider = FakeChatProvider(replies=[first, repair])
        outline = organize("t", reports, Gateway(mode=Mode.LIVE, provider=provider))
        assert outline.assignment[2] == 2
        assert "Assign these remaining subtopics" in provider.calls[1]
        assert validate_outline(outline, reports) == []

    def test_singleton_fallback_after_failed_repair(self):
        reports = [report(i, f"S{i}") for i in range(3)]
        first = organizer_reply([(1, "Theme A")], {0: 1, 1: 1})
        second = json.dumps({"subtopics": {}})
        outline = organize("t", reports, live_gateway([first, second]))
        assert 2 in outline.assignment
        singleton_theme = outline.assignment[2]
        titles = {t.theme_id: t.title for t in outline.themes}
        assert titles[singleton_theme] == "S2"
        assert validate_outline(outline, reports) == []

    def test_unknown_subtopic_id_dropped(self, caplog):
        reports = [report(0, "S0")]
        reply = organizer_reply([(1, "Theme")], {0: 1, 99: 1})
        with caplog.at_level("WARNING"):
            outline = organize("t", reports, live_gateway([reply]))
        assert set(outline.assignment) == {0}

    def test_empty_declared_theme_pruned(self):
        reports = [report(0, "S0")]
        reply = organizer_reply([(1, "Used"), (2, "Unused")], {0: 1})
        outline = organize("t", reports, live_gateway([reply]))
        assert outline.theme_ids() == {1}
        assert validate_outline(outline, reports) == []

    def test_no_themes_raises(self):
        reports = [report(0, "S0")]
        reply = json.dumps({"clusters": [], "subtopics": {"0": "1"}})
        with pytest.raises(OrganizerOutputError):
            organize("t", reports, live_gateway([reply, reply]))

    def test_deterministic_under_replay(self, tmp_path):
        reports = [report(i, f"S{i}") for i in range(2)]
        reply = organizer_reply([(1, "Theme")], {0: 1, 1: 1})
        path = tmp_path / "t.jsonl"
        recorder = Gateway(
            mode=Mode.RECORD, provider=FakeChatProvider(replies=[reply]), transcript=Transcript(path)
        )
        recorded = organize("t", reports, recorder)

        replayed_once = organize("t", reports, Gateway(mode=Mode.REPLAY, transcript=Transcript(path)))
        replayed_twice = organize("t", reports, Gateway(mode=Mode.REPLAY, transcript=Transcript(path)))
        assert replayed_once == recorded
        assert replayed_once == replayed_twice


class TestValidateOutline:
    def _outline(self):
        return ThemeOutline(
            themes=[Theme(theme_id=1, title="A"), Theme(theme_id=2, title="B")],
            assignment={0: 1, 1: 2},
        )

    def test_valid_outline(self):
        reports = [report(0, "S0"), report(1, "S1")]
        assert validate_outline(self._outline(), reports) == []

    def test_orphan_named(self):
        reports = [report(0, "S0"), report(1, "S1"), report(7, "S7")]
        violations = validate_outline(self._outline(), reports)
        assert violations == ["orphan subtopic 7"]

    def test_empty_theme_reported(self):
        outline = ThemeOutline(
            themes=[Theme(theme_id=1, title="A"), Theme(theme_id=2, title="B")],
            assignment={0: 1, 1: 1},
        )
        reports = [report(0, "S0"), report(1, "S1")]
        assert "empty theme 2" in validate_outline(outline, reports)

    def test_dangling_theme_reported(self):
        outline = ThemeOutline(themes=[Theme(theme_id=1, title="A")], assignment={0: 9})
        violations = validate_outline(outline, [report(0, "S0")])
        assert any(v.startswith("dangling theme id 9") for v in violations)

    def test_duplicate_theme_id_reported(self):
        outline = ThemeOutline(
            themes=[Theme(theme_id=1, title="A"), Theme(theme_id=1, title="A2")],
            assignment={0: 1},
        )
        assert "duplicate theme id 1" in validate_outline(outline, [report(0, "S0")])

    def test_theme_count_never_exceeds_subtopics_after_organize(self):
        reports = [report(i, f"S{i}") for i in range(4)]
        reply = organizer_reply([(1, "A"), (2, "B")], {0: 1, 1: 1, 2: 2, 3: 2})
        outline = organize("t", reports, live_gateway([reply]))
        assert len(outline.themes) <= len(reports)

    def test_round_trip(self):
        outline = self._outline()
        assert ThemeOutline.from_dict(outline.to_dict()) == outline

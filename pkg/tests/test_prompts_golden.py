"""Golden-file checks: instantiated prompts must carry the template text verbatim."""

from pathlib import Path

from knav.cluster_reader import SubtopicReport, Verdict, build_reader_prompt
from knav.corpus import Document
from knav.prompts import load_template
from knav.subtopic_expander import build_expander_prompt
from knav.thematic_organizer import build_organizer_prompt

GOLDEN = Path(__file__).parent / "golden"

TOPIC = "endocrine disorders and COVID-19"

DOCS = [
    Document(
        id="g1",
        title="Thyroid outcomes after infection",
        abstract="Cohort study of thyroid hormone levels.",
    ),
    Document(
        id="g2",
        title="Thyrotoxicosis case series",
        snippet="Cases of thyrotoxicosis following illness.",
    ),
]

REPORTS = [
    SubtopicReport(
        cluster_id=0,
        description="Thyroid hormone changes in patients.",
        subtopic_title="Thyroid Dysfunction in COVID-19",
        relatedness=5,
        is_related=Verdict.RELATED,
        doc_ids={"g1"},
    ),
    SubtopicReport(
        cluster_id=1,
        description="Adrenal insufficiency management.",
        subtopic_title="Adrenal Insufficiency and Glucocorticoids",
        relatedness=4,
        is_related=Verdict.RELATED,
        doc_ids={"g2"},
    ),
]


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


class TestReaderPromptFidelity:
    def test_matches_golden_file(self):
        assert build_reader_prompt(TOPIC, DOCS) == golden("reader_prompt.txt")

    def test_required_phrases(self):
        prompt = build_reader_prompt(TOPIC, DOCS)
        assert "Rate the relatedness on a scale from 1 to 5" in prompt
        assert 'mark them as "NOT RELATED."' in prompt
        assert "Output should be a json with the following fields:" in prompt
        assert "- Write nothing else" in prompt


class TestOrganizerPromptFidelity:
    def test_matches_golden_file(self):
        assert build_organizer_prompt(TOPIC, REPORTS) == golden("organizer_prompt.txt")

    def test_required_phrases(self):
        prompt = build_organizer_prompt(TOPIC, REPORTS)
        assert "Do not leave any subtopic without a cluster." in prompt
        assert "Output a json object" in prompt
        assert '"cluster_ids", "cluster_title" and "description"' in prompt


class TestExpanderPromptFidelity:
    def test_matches_golden_file(self):
        assert build_expander_prompt(TOPIC, REPORTS[0], DOCS) == golden("expander_prompt.txt")

    def test_required_phrases(self):
        prompt = build_expander_prompt(TOPIC, REPORTS[0], DOCS)
        assert "Present your final list of keywords in order of relevance" in prompt
        assert "<keywords> tags" in prompt
        assert "<justification> tags" in prompt
        assert "<titles_and_abstracts>" in prompt


class TestTemplatesCarryNoStrayPlaceholders:
    def test_all_placeholders_substituted(self):
        for build, args in (
            (build_reader_prompt, (TOPIC, DOCS)),
            (build_organizer_prompt, (TOPIC, REPORTS)),
            (build_expander_prompt, (TOPIC, REPORTS[0], DOCS)),
        ):
            prompt = build(*args)
            for token in ("{query}", "{papers_list}", "{subtopic_and_cluster_ids}",
                          "{subtopic_title}", "{subtopic_description}", "{papers}"):
                assert token not in prompt

    def test_templates_load(self):
        for name in ("cluster_reader", "thematic_organizer", "subtopic_expander", "relevance_judge"):
            assert load_template(name)

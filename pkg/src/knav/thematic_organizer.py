"""Group retained subtopics into named themes with one LLM call.

Subtopics travel through the prompt as numeric ids (their cluster ids), and
the reply assigns ids to themes; coverage gaps get one repair call and then
a singleton-theme fallback, so the returned outline is always total.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .cluster_reader import SubtopicReport
from .errors import OrganizerOutputError, ValidationError
from .llm_gateway import Expect, Gateway, LlmRequest
from .prompts import load_template, render

log = logging.getLogger(__name__)

# Reports are short by construction, so even wide runs fit one prompt; warn
# if an instantiated prompt ever crosses this budget.
PROMPT_CHAR_BUDGET = 64000

REPAIR_PREFIX = "Assign these remaining subtopics"


@dataclass
class Theme:
    theme_id: int
    title: str
    description: str = ""

    def __post_init__(self):
        if not self.title.strip():
            raise ValidationError("theme title must be non-empty")


@dataclass
class ThemeOutline:
    """Two-level hierarchy: themes own disjoint sets of subtopic cluster ids."""

    themes: list[Theme] = field(default_factory=list)
    assignment: dict[int, int] = field(default_factory=dict)

    def theme_ids(self) -> set[int]:
        return {t.theme_id for t in self.themes}

    def members(self, theme_id: int) -> list[int]:
        return sorted(cid for cid, tid in self.assignment.items() if tid == theme_id)

    def to_dict(self) -> dict:
        return {
            "themes": [
                {"theme_id": t.theme_id, "title": t.title, "description": t.description}
                for t in self.themes
            ],
            "assignment": {str(cid): tid for cid, tid in self.assignment.items()},
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ThemeOutline":
        return cls(
            themes=[
                Theme(theme_id=int(t["theme_id"]), title=t["title"], description=t.get("description", ""))
                for t in raw.get("themes", [])
            ],
            assignment={int(cid): int(tid) for cid, tid in raw.get("assignment", {}).items()},
        )


def subtopic_dictionary(reports: Sequence[SubtopicReport]) -> dict[str, dict[str, str]]:
    return {
        str(r.cluster_id): {"title": r.subtopic_title, "description": r.description}
        for r in reports
    }


def build_organizer_prompt(topic: str, reports: Sequence[SubtopicReport]) -> str:
    if not reports:
        raise ValidationError("cannot organize an empty report list")
    prompt = render(
        load_template("thematic_organizer"),
        query=topic,
        subtopic_and_cluster_ids=json.dumps(
            subtopic_dictionary(reports), ensure_ascii=False, indent=2
        ),
    )
    if len(prompt) > PROMPT_CHAR_BUDGET:
        log.warning("organizer prompt is %d chars, over the %d budget", len(prompt), PROMPT_CHAR_BUDGET)
    return prompt


def _coerce_int(value) -> int | None:
    try:
        return int(str(value).strip())
    except (TypeError, ValueError):
        return None


def _parse_themes(reply: Mapping) -> list[Theme]:
    themes: list[Theme] = []
    for entry in reply.get("clusters", []):
        if not isinstance(entry, Mapping):
            continue
        theme_id = None
        for key in ("cluster_ids", "cluster_id", "id", "theme_id"):
            if key in entry:
                theme_id = _coerce_int(entry[key])
                break
        title = entry.get("cluster_title") or entry.get("title")
        if theme_id is None or not title:
            log.warning("skipping malformed theme entry %r", entry)
            continue
        themes.append(Theme(theme_id=theme_id, title=str(title), description=str(entry.get("description", ""))))
    return themes


def _parse_assignment(
    reply: Mapping, known_subtopics: set[int], known_themes: set[int]
) -> dict[int, int]:
    assignment: dict[int, int] = {}
    for sid_raw, tid_raw in (reply.get("subtopics") or {}).items():
        sid = _coerce_int(sid_raw)
        tid = _coerce_int(tid_raw)
        if sid is None or sid not in known_subtopics:
            log.warning("reply assigned unknown subtopic id %r; dropped", sid_raw)
            continue
        if tid is None or tid not in known_themes:
            log.warning("subtopic %s mapped to unknown theme %r; left unassigned", sid, tid_raw)
            continue
        assignment[sid] = tid
    return assignment


def _repair_prompt(
    topic: str, orphans: Sequence[SubtopicReport], themes: Sequence[Theme]
) -> str:
    theme_listing = json.dumps(
        {str(t.theme_id): {"title": t.title, "description": t.description} for t in themes},
        ensure_ascii=False,
        indent=2,
    )
    orphan_listing = json.dumps(subtopic_dictionary(orphans), ensure_ascii=False, indent=2)
    return (
        f"{REPAIR_PREFIX} of the topic {topic} to the clusters already defined. "
        "Output a json object with one field: subtopics, a dictionary mapping each "
        "subtopic_id to an existing cluster id.\n\n"
        f"Clusters: {theme_listing}\n\nRemaining subtopics: {orphan_listing}"
    )


def organize(topic: str, reports: Sequence[SubtopicReport], gateway: Gateway) -> ThemeOutline:
    """Produce a validated outline covering every report exactly once."""
    prompt = build_organizer_prompt(topic, reports)
    request = LlmRequest(prompt=prompt, expect=Expect.JSON, model_id=gateway.model_id)
    reply = gateway.complete_json(request)
    if not isinstance(reply, Mapping):
        raise OrganizerOutputError("organizer reply is not a JSON object", raw=json.dumps(reply))

    by_id = {r.cluster_id: r for r in reports}
    themes = _parse_themes(reply)
    if not themes:
        raise OrganizerOutputError("organizer reply defined no themes", raw=json.dumps(reply))
    assignment = _parse_assignment(reply, set(by_id), {t.theme_id for t in themes})

    orphans = [by_id[cid] for cid in sorted(set(by_id) - set(assignment))]
    if orphans:
        log.warning("organizer left %d subtopics unassigned; repairing", len(orphans))
        repair = LlmRequest(
            prompt=_repair_prompt(topic, orphans, themes),
            expect=Expect.JSON,
            model_id=gateway.model_id,
        )
        repair_reply = gateway.complete_json(repair)
        if isinstance(repair_reply, Mapping):
            fixed = _parse_assignment(
                repair_reply, {r.cluster_id for r in orphans}, {t.theme_id for t in themes}
            )
            assignment.update(fixed)

    # Whatever is still unassigned becomes its own theme, titled as the subtopic.
    next_id = max((t.theme_id for t in themes), default=0) + 1
    for cid in sorted(set(by_id) - set(assignment)):
        report = by_id[cid]
        log.warning("subtopic %d still unassigned; promoting to a singleton theme", cid)
        themes.append(Theme(theme_id=next_id, title=report.subtopic_title, description=report.description))
        assignment[cid] = next_id
        next_id += 1

    populated = set(assignment.values())
    themes = [t for t in themes if t.theme_id in populated]
    outline = ThemeOutline(themes=themes, assignment=assignment)
    violations = validate_outline(outline, reports)
    if violations:
        raise OrganizerOutputError(f"outline invalid after repair: {violations}", raw=json.dumps(reply))
    return outline


def validate_outline(outline: ThemeOutline, reports: Sequence[SubtopicReport]) -> list[str]:
    """Structural checks; an empty list means the outline is valid."""
    violations: list[str] = []
    theme_ids = [t.theme_id for t in outline.themes]
    seen: set[int] = set()
    for tid in theme_ids:
        if tid in seen:
            violations.append(f"duplicate theme id {tid}")
        seen.add(tid)

    known = {r.cluster_id for r in reports}
    for cid in sorted(known - set(outline.assignment)):
        violations.append(f"orphan subtopic {cid}")
    for cid in sorted(set(outline.assignment) - known):
        violations.append(f"unknown subtopic {cid} in assignment")
    for cid, tid in sorted(outline.assignment.items()):
        if tid not in seen:
            violations.append(f"dangling theme id {tid} for subtopic {cid}")
    populated = set(outline.assignment.values())
    for tid in theme_ids:
        if tid not in populated:
            violations.append(f"empty theme {tid}")
    return violations

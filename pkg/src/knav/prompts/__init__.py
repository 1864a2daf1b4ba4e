"""Versioned prompt-template assets.

Templates are plain text with {name} placeholders substituted verbatim via
string replacement (never str.format, so braces in values are safe).
"""

from __future__ import annotations

from importlib import resources

_TEMPLATES = ("cluster_reader", "thematic_organizer", "subtopic_expander", "relevance_judge")


def load_template(name: str) -> str:
    if name not in _TEMPLATES:
        raise KeyError(f"unknown template {name!r}; available: {_TEMPLATES}")
    return resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def render(template: str, **values: str) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out

"""Configuration for the bundled offline demo run.

The repo ships a canned corpus, a recorded LLM transcript, and canned search
result pages under fixtures/tool_use_in_animals/. This module pins the run
configuration those fixtures were recorded with; any change here (or to the
prompt templates) requires regenerating them via scripts/build_demo_fixtures.py.
"""

from __future__ import annotations

from pathlib import Path

from .clustering import EmSettings
from .service import RunConfig

DEMO_TOPIC = "tool use in animals"
DEMO_SEED = 0


def demo_fixtures_dir(repo_root: str | Path) -> Path:
    return Path(repo_root) / "fixtures" / "tool_use_in_animals"


def demo_run_config(fixtures_dir: str | Path, llm_mode: str = "replay") -> RunConfig:
    fixtures_dir = Path(fixtures_dir)
    return RunConfig(
        topic=DEMO_TOPIC,
        corpus_path=str(fixtures_dir / "corpus.jsonl"),
        seed=DEMO_SEED,
        clustering=EmSettings(k_min=2, k_max=8, target_dim=10),
        llm_mode=llm_mode,
        transcript_path=str(fixtures_dir / "transcript.jsonl"),
        embed_provider="hash",
        scholar_fixture_dir=str(fixtures_dir / "scholar_pages"),
        expansion_k=100,
    )

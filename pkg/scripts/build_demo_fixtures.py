#!/usr/bin/env python3
"""Regenerate the bundled demo fixtures.

Builds the canned corpus, records a full pipeline transcript against a
scripted chat provider, pre-records keyword extraction for every retained
cluster, writes canned scholar result pages, and saves a completed artifact
for the frontend tests.

Run from the repo root:  python3 scripts/build_demo_fixtures.py
"""

from __future__ import annotations

import json
import re
import shutil
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from knav.demo import DEMO_TOPIC, demo_fixtures_dir, demo_run_config  # noqa: E402
from knav.embedding import HashingEmbeddingClient  # noqa: E402
from knav.llm_gateway import Gateway, Mode, Transcript  # noqa: E402
from knav.scholar import FixtureScholarClient  # noqa: E402
from knav.service import RunStore, Runtime, run_pipeline  # noqa: E402
from knav.subtopic_expander import extract_keywords  # noqa: E402

# Document families: five genuine subtopics plus two off-topic intruders that
# the reader should filter. Vocabulary is kept family-distinct so the offline
# hashing embedder separates them.
FAMILIES = {
    "corvid": {
        "theme": "Tool Use in Birds",
        "subtopic": "Corvid Tool Manufacture and Use",
        "keywords": ["New Caledonian crow", "hook tool", "stick tool", "corvid cognition"],
        "titles": [
            "Hook tool manufacture by New Caledonian crows in the wild",
            "Stick tool selectivity in captive corvids across foraging puzzles",
            "Raven planning and tool caching behaviour under delayed rewards",
            "Crow bill morphology and its role in precise tool handling",
            "Cumulative refinement of pandanus tool designs among crow populations",
            "Social learning of tool techniques in juvenile New Caledonian crows",
            "Meta tool use by corvids solving sequential probe tasks",
            "Rook spontaneous hook bending in laboratory tool tasks",
            "Field observations of corvid tool transport between foraging sites",
        ],
        "abstract": (
            "We study corvid birds manufacturing hook and stick tools, examining crow "
            "cognition, pandanus leaf tool design, and bill control during probe foraging."
        ),
    },
    "primate": {
        "theme": "Tool Use in Mammals",
        "subtopic": "Primate Tool Traditions",
        "keywords": ["chimpanzee termite fishing", "capuchin nut cracking", "stone hammer", "primate culture"],
        "titles": [
            "Termite fishing probes used by chimpanzee communities in Gombe",
            "Capuchin monkeys cracking nuts with stone hammers and anvils",
            "Chimpanzee ant dipping wand length varies with prey aggressiveness",
            "Archaeological traces of primate stone hammer percussion sites",
            "Orangutan leaf gloves for handling spiny durian fruit",
            "Social transmission of nut cracking skill in capuchin groups",
            "Chimpanzee honey extraction with brush tipped dipping sticks",
            "Macaque stone handling traditions along coastal shell middens",
            "Gorilla walking sticks used to gauge water depth in swamps",
        ],
        "abstract": (
            "Long term primate field records document chimpanzee termite fishing, capuchin "
            "stone hammer nut cracking, and socially transmitted tool traditions."
        ),
    },
    "cephalopod": {
        "theme": "Tool Use in Marine Invertebrates",
        "subtopic": "Octopus Shelter Tool Behaviour",
        "keywords": ["coconut shell carrying", "octopus shelter", "cephalopod cognition", "stilt walking"],
        "titles": [
            "Coconut shell carrying and assembly by veined octopuses",
            "Stilt walking locomotion costs of shell carrying octopuses",
            "Cephalopod problem solving with jar lids and latch boxes",
            "Shelter construction from bivalve shells by benthic octopuses",
            "Octopus arm coordination while transporting coconut halves",
            "Defensive shell shield use by cephalopods against predators",
            "Tool conditional foraging choices in laboratory cuttlefish",
            "Den decoration and rock moving in wild octopus populations",
            "Buoyancy management during cephalopod object transport",
        ],
        "abstract": (
            "Veined octopuses carry coconut shell halves as portable shelters, a cephalopod "
            "behaviour combining stilt walking transport with later shelter assembly."
        ),
    },
    "elephant": {
        "theme": "Tool Use in Mammals",
        "subtopic": "Elephant Trunk-Mediated Tool Use",
        "keywords": ["trunk manipulation", "fly switching branches", "elephant cognition", "water siphoning"],
        "titles": [
            "Fly switching with modified branches by Asian elephants",
            "Elephant trunk manipulation accuracy in object retrieval tasks",
            "Water siphoning and plug making by elephants at waterholes",
            "Elephants stacking logs to reach suspended food rewards",
            "Branch modification sequences preceding elephant fly switching",
            "Trunk tip dexterity and suction assisted grasping in elephants",
            "Cooperative rope pulling paradigms with captive elephants",
            "Elephant mud splash behaviour as thermoregulatory tool use",
            "Object throwing accuracy in free ranging elephant herds",
        ],
        "abstract": (
            "Elephants modify branches for fly switching and use trunk manipulation to "
            "siphon water, stack logs, and throw objects, showing flexible tool use."
        ),
    },
    "dolphin": {
        "theme": "Tool Use in Mammals",
        "subtopic": "Dolphin Sponging Strategies",
        "keywords": ["sponge carrying", "Shark Bay dolphins", "benthic foraging", "matriline transmission"],
        "titles": [
            "Sponge carrying as a foraging specialization in Shark Bay dolphins",
            "Matriline transmission of sponging behaviour among dolphin calves",
            "Benthic prey flushing by sponge shielded dolphin rostra",
            "Conch shell lifting to trap fish by bottlenose dolphins",
            "Dietary consequences of sponge foraging specialization in dolphins",
            "Social structure of sponging dolphin communities in Shark Bay",
            "Acoustic behaviour of dolphins during benthic sponge foraging",
            "Tool assisted foraging niches partitioning dolphin populations",
            "Development of sponging proficiency across dolphin ontogeny",
        ],
        "abstract": (
            "Shark Bay dolphins carry marine sponges over their rostra while flushing "
            "benthic prey, a socially transmitted foraging specialization along matrilines."
        ),
    },
    "lithography": {
        "theme": None,
        "subtopic": "Semiconductor Lithography Processes",
        "keywords": ["extreme ultraviolet", "photoresist", "wafer overlay", "etch process"],
        "titles": [
            "Extreme ultraviolet lithography throughput optimization for wafer fabs",
            "Photoresist chemistry advances for sub nanometer pattern fidelity",
            "Overlay error budgeting in multi patterning semiconductor processes",
            "Plasma etch selectivity control in high aspect ratio channels",
            "Mask defect inspection strategies for extreme ultraviolet scanners",
            "Computational lithography models for optical proximity correction",
            "Wafer stage vibration damping in nanometer scale exposure tools",
            "Line edge roughness metrology for advanced photoresist stacks",
            "Pellicle membrane durability under extreme ultraviolet exposure",
        ],
        "abstract": (
            "Semiconductor manufacturing studies covering extreme ultraviolet lithography, "
            "photoresist chemistry, overlay metrology, and plasma etch process control."
        ),
    },
    "stocks": {
        "theme": None,
        "subtopic": "Stock Market Prediction Models",
        "keywords": ["portfolio optimization", "price forecasting", "trading strategy", "volatility model"],
        "titles": [
            "Recurrent networks for intraday stock price forecasting",
            "Portfolio optimization under transaction cost constraints",
            "Sentiment signals from financial news in trading strategies",
            "Volatility clustering models for equity index futures",
            "High frequency order book dynamics and market microstructure",
            "Factor investing with momentum and value interactions",
            "Risk parity allocation across multi asset portfolios",
            "Earnings surprise drift exploited by quantitative trading",
            "Regime switching models for bear market detection",
        ],
        "abstract": (
            "Quantitative finance research on stock price forecasting, portfolio "
            "optimization, volatility models, and systematic trading strategies."
        ),
    },
}

THEME_ORDER = ["Tool Use in Birds", "Tool Use in Mammals", "Tool Use in Marine Invertebrates"]

_TITLE_LINE = re.compile(r"^\d+\. Title: (.*)$", re.MULTILINE)


def family_of_title(title: str) -> str:
    for family, spec in FAMILIES.items():
        if title in spec["titles"]:
            return family
    raise KeyError(f"unknown fixture title: {title!r}")


def build_corpus(fixtures: Path) -> None:
    rows = []
    i = 0
    # Interleave families so corpus order does not trivially mirror clusters.
    for round_idx in range(9):
        for family, spec in FAMILIES.items():
            title = spec["titles"][round_idx]
            rows.append(
                {
                    "id": f"paper-{i:03d}",
                    "title": title,
                    "abstract": spec["abstract"],
                    "url": f"https://papers.example/{family}/{round_idx}",
                    "year": 2015 + (i % 10),
                }
            )
            i += 1
    path = fixtures / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(rows)} docs)")


def build_scholar_pages(fixtures: Path) -> None:
    pages_dir = fixtures / "scholar_pages"
    if pages_dir.exists():
        shutil.rmtree(pages_dir)
    pages_dir.mkdir(parents=True)
    doc = 0
    for page in range(1, 13):
        rows = []
        for _ in range(10):
            rows.append(
                {
                    "id": f"expansion-{doc:03d}",
                    "title": f"Follow-up study {doc:03d} on fine-grained animal tool behaviour",
                    "snippet": "Additional retrieved evidence on the expanded subtopic.",
                    "url": f"https://papers.example/expansion/{doc:03d}",
                }
            )
            doc += 1
        (pages_dir / f"page_{page}.json").write_text(json.dumps(rows, indent=1))
    print(f"wrote {pages_dir} (12 pages x 10 docs)")


class ScriptedProvider:
    """Deterministic stand-in for a chat model, keyed off prompt structure."""

    def complete_text(self, request) -> str:
        prompt = request.prompt
        if prompt.startswith("# Task Overview:"):
            return self._reader_reply(prompt)
        if prompt.startswith("You are given a nested dictionary"):
            return self._organizer_reply(prompt)
        if prompt.startswith("You are tasked with identifying keywords"):
            return self._expander_reply(prompt)
        raise AssertionError(f"unexpected prompt shape: {prompt[:60]!r}")

    def _majority_family(self, prompt: str) -> tuple[str, float]:
        titles = _TITLE_LINE.findall(prompt)
        counts: dict[str, int] = {}
        for title in titles:
            counts[family_of_title(title)] = counts.get(family_of_title(title), 0) + 1
        family = max(sorted(counts), key=lambda f: counts[f])
        return family, counts[family] / len(titles)

    def _reader_reply(self, prompt: str) -> str:
        family, purity = self._majority_family(prompt)
        spec = FAMILIES[family]
        offtopic = spec["theme"] is None
        if offtopic:
            payload = {
                "Description": (
                    f"The papers concern {spec['subtopic'].lower()} and have no direct "
                    f"connection to {DEMO_TOPIC}."
                ),
                "Subtopic": spec["subtopic"],
                "Relatedness": 1,
                "Is Related": "NOT RELATED",
            }
        else:
            payload = {
                "Description": (
                    f"The papers form a coherent subtopic of {DEMO_TOPIC}: "
                    f"{spec['subtopic'].lower()}, covering "
                    + ", ".join(spec["keywords"][:3])
                    + "."
                ),
                "Subtopic": spec["subtopic"],
                "Relatedness": 5 if purity >= 0.8 else 4,
                "Is Related": "RELATED",
            }
        return json.dumps(payload)

    def _organizer_reply(self, prompt: str) -> str:
        embedded = prompt.split("Subtopic dictionary: ", 1)[1]
        subtopics = json.loads(embedded)
        theme_ids = {title: idx + 1 for idx, title in enumerate(THEME_ORDER)}
        clusters = [
            {
                "cluster_id": str(tid),
                "cluster_title": title,
                "description": f"Subtopics covering {title.lower()} within {DEMO_TOPIC}.",
            }
            for title, tid in theme_ids.items()
        ]
        assignment = {}
        for sid, entry in subtopics.items():
            family = next(
                f for f, spec in FAMILIES.items() if spec["subtopic"] == entry["title"]
            )
            theme = FAMILIES[family]["theme"] or THEME_ORDER[1]
            assignment[sid] = str(theme_ids[theme])
        used = set(assignment.values())
        clusters = [c for c in clusters if c["cluster_id"] in used]
        return json.dumps({"clusters": clusters, "subtopics": assignment})

    def _expander_reply(self, prompt: str) -> str:
        first_title = _TITLE_LINE.search(prompt)
        family = family_of_title(first_title.group(1))
        spec = FAMILIES[family]
        terms = ", ".join(spec["keywords"])
        return (
            f"<keywords>{terms}</keywords>"
            f"<justification>These terms recur across the cluster's titles and abstracts "
            f"and are specific to {spec['subtopic'].lower()}.</justification>"
        )


def main() -> None:
    fixtures = demo_fixtures_dir(REPO_ROOT)
    fixtures.mkdir(parents=True, exist_ok=True)
    build_corpus(fixtures)
    build_scholar_pages(fixtures)

    transcript_path = fixtures / "transcript.jsonl"
    if transcript_path.exists():
        transcript_path.unlink()

    config = demo_run_config(fixtures, llm_mode="record")
    runtime = Runtime(
        embed_client=HashingEmbeddingClient(),
        gateway=Gateway(
            mode=Mode.RECORD,
            provider=ScriptedProvider(),
            transcript=Transcript(transcript_path),
        ),
        scholar_client=FixtureScholarClient(fixtures / "scholar_pages"),
    )

    runs_dir = fixtures / "runs"
    if runs_dir.exists():
        shutil.rmtree(runs_dir)
    store = RunStore(runs_dir)
    artifact = run_pipeline(config, runtime=runtime, store=store, run_id="run-demo")
    print(f"pipeline DONE: k={artifact.selected_k}, clusters={len(artifact.clusters)}, "
          f"filtered={artifact.filtered_cluster_ids}")
    for record in artifact.clusters:
        print(f"  cluster {record.cluster_id}: {len(record.doc_ids)} docs -> "
              f"{record.report.subtopic_title} ({record.report.is_related.value})")

    # Pre-record keyword extraction for every retained cluster so any of them
    # can be expanded under REPLAY.
    doc_map = artifact.document_map()
    for cid in artifact.retained_cluster_ids():
        record = artifact.cluster(cid)
        docs = [doc_map[d] for d in record.doc_ids]
        extract_keywords(config.topic, record.report, docs, runtime.gateway)
    print(f"wrote {transcript_path} ({len(runtime.gateway.transcript.entries)} entries)")

    artifact_path = fixtures / "artifact.json"
    artifact_path.write_text(
        json.dumps(artifact.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8"
    )
    shutil.rmtree(runs_dir)
    print(f"wrote {artifact_path}")


if __name__ == "__main__":
    main()

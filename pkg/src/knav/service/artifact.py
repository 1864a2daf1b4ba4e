"""Run configuration and the persisted record of one pipeline execution."""

from __future__ import annotations

import dataclasses
import secrets
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from ..cluster_reader import SubtopicReport
from ..clustering import EmSettings
from ..corpus import Document
from ..errors import ConfigError, CorruptArtifactError, MigrationError, NotFoundError
from ..llm_gateway import Mode
from ..subtopic_expander import QueryForm
from ..thematic_organizer import ThemeOutline, validate_outline
from ..util import atomic_write_json, read_json

SCHEMA_VERSION = 1


class RunStatus(str, Enum):
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    DONE = "DONE"
    FAILED = "FAILED"


@dataclass
class RunConfig:
    """Everything one pipeline execution depends on, all serializable."""

    topic: str
    corpus_path: str | None = None
    query_string: str | None = None
    top_k: int = 1000
    seed: int = 0
    clustering: EmSettings = field(default_factory=EmSettings)
    llm_mode: Mode = Mode.REPLAY
    transcript_path: str | None = None
    llm_model: str | None = None
    embed_provider: str = "hash"
    embed_model: str | None = None
    cache_dir: str | None = None
    expansion_form: QueryForm = QueryForm.CONCAT
    expansion_k: int = 100
    scholar_fixture_dir: str | None = None
    reader_parallelism: int = 4
    abstract_cap: int = 1200

    def __post_init__(self):
        self.llm_mode = Mode(self.llm_mode)
        self.expansion_form = QueryForm(self.expansion_form)
        if isinstance(self.clustering, Mapping):
            self.clustering = EmSettings(**self.clustering)

    def validate(self) -> None:
        if not self.topic.strip():
            raise ConfigError("topic must be non-empty")
        if not self.corpus_path and not self.query_string:
            raise ConfigError("config needs a corpus source: corpus_path or query_string")
        if self.llm_mode is Mode.REPLAY:
            if not self.transcript_path:
                raise ConfigError("REPLAY mode requires a transcript path")
            if not Path(self.transcript_path).exists():
                raise ConfigError(f"transcript not found: {self.transcript_path}")
        if self.embed_provider not in ("hash", "http"):
            raise ConfigError(f"unknown embed provider {self.embed_provider!r}")
        if self.expansion_k < 1:
            raise ConfigError("expansion_k must be >= 1")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["llm_mode"] = self.llm_mode.value
        out["expansion_form"] = self.expansion_form.value
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in raw.items() if k in known}
        return cls(**kwargs)


@dataclass
class ClusterRecord:
    cluster_id: int
    doc_ids: list[str]
    report: SubtopicReport | None = None

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "doc_ids": list(self.doc_ids),
            "report": self.report.to_dict() if self.report else None,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClusterRecord":
        report = raw.get("report")
        return cls(
            cluster_id=int(raw["cluster_id"]),
            doc_ids=list(raw["doc_ids"]),
            report=SubtopicReport.from_dict(report) if report else None,
        )


_KNOWN_FIELDS = {
    "schema_version",
    "run_id",
    "status",
    "stage",
    "failed_stage",
    "error",
    "config",
    "corpus_summary",
    "documents",
    "model_selection",
    "selected_k",
    "clusters",
    "filtered_cluster_ids",
    "outline",
    "expansions",
    "created_at",
    "finished_at",
}


@dataclass
class RunArtifact:
    """Persisted record of one full pipeline traversal, served to the UI."""

    run_id: str
    config: RunConfig
    status: RunStatus = RunStatus.PENDING
    stage: str | None = None
    failed_stage: str | None = None
    error: str | None = None
    corpus_summary: dict = field(default_factory=dict)
    documents: list[Document] = field(default_factory=list)
    model_selection: list[dict] = field(default_factory=list)
    selected_k: int | None = None
    clusters: list[ClusterRecord] = field(default_factory=list)
    filtered_cluster_ids: list[int] = field(default_factory=list)
    outline: ThemeOutline | None = None
    expansions: dict[int, dict] = field(default_factory=dict)
    created_at: str = ""
    finished_at: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def new(cls, config: RunConfig, run_id: str | None = None) -> "RunArtifact":
        stamp = datetime.now(timezone.utc)
        return cls(
            run_id=run_id or f"run-{stamp:%Y%m%d%H%M%S}-{secrets.token_hex(4)}",
            config=config,
            created_at=stamp.isoformat(),
        )

    def document_map(self) -> dict[str, Document]:
        return {doc.id: doc for doc in self.documents}

    def cluster(self, cluster_id: int) -> ClusterRecord:
        for record in self.clusters:
            if record.cluster_id == cluster_id:
                return record
        raise NotFoundError(f"run {self.run_id} has no cluster {cluster_id}")

    def retained_cluster_ids(self) -> list[int]:
        filtered = set(self.filtered_cluster_ids)
        return [c.cluster_id for c in self.clusters if c.cluster_id not in filtered]

    def mark_finished(self) -> None:
        self.finished_at = datetime.now(timezone.utc).isoformat()

    def check_invariants(self) -> None:
        """Raise CorruptArtifactError if the artifact contradicts itself."""
        known_docs = {doc.id for doc in self.documents}
        for record in self.clusters:
            stray = [d for d in record.doc_ids if d not in known_docs]
            if stray:
                raise CorruptArtifactError(
                    f"cluster {record.cluster_id} references unknown docs {stray[:3]}"
                )
        all_ids = {c.cluster_id for c in self.clusters}
        if not set(self.filtered_cluster_ids) <= all_ids:
            raise CorruptArtifactError("filtered_cluster_ids mention unknown clusters")
        if self.status is RunStatus.DONE:
            if self.outline is None:
                raise CorruptArtifactError("DONE artifact has no outline")
            retained = self.retained_cluster_ids()
            reports = []
            for cid in retained:
                report = self.cluster(cid).report
                if report is None:
                    raise CorruptArtifactError(f"retained cluster {cid} has no report")
                reports.append(report)
            violations = validate_outline(self.outline, reports)
            if violations:
                raise CorruptArtifactError(f"outline invalid: {violations}")

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "status": self.status.value,
            "stage": self.stage,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "config": self.config.to_dict(),
            "corpus_summary": self.corpus_summary,
            "documents": [doc.to_dict() for doc in self.documents],
            "model_selection": self.model_selection,
            "selected_k": self.selected_k,
            "clusters": [record.to_dict() for record in self.clusters],
            "filtered_cluster_ids": list(self.filtered_cluster_ids),
            "outline": self.outline.to_dict() if self.outline else None,
            "expansions": {str(cid): record for cid, record in self.expansions.items()},
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }
        for key, value in self.extra.items():
            out.setdefault(key, value)
        return out

    @classmethod
    def from_dict(cls, raw: Mapping, validate: bool = True) -> "RunArtifact":
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise MigrationError(f"unsupported artifact schema version {version!r}")
        artifact = cls(
            run_id=raw["run_id"],
            config=RunConfig.from_dict(raw.get("config", {})),
            status=RunStatus(raw.get("status", "PENDING")),
            stage=raw.get("stage"),
            failed_stage=raw.get("failed_stage"),
            error=raw.get("error"),
            corpus_summary=dict(raw.get("corpus_summary", {})),
            documents=[Document.from_dict(d) for d in raw.get("documents", [])],
            model_selection=list(raw.get("model_selection", [])),
            selected_k=raw.get("selected_k"),
            clusters=[ClusterRecord.from_dict(c) for c in raw.get("clusters", [])],
            filtered_cluster_ids=[int(c) for c in raw.get("filtered_cluster_ids", [])],
            outline=ThemeOutline.from_dict(raw["outline"]) if raw.get("outline") else None,
            expansions={int(cid): rec for cid, rec in raw.get("expansions", {}).items()},
            created_at=raw.get("created_at", ""),
            finished_at=raw.get("finished_at"),
            extra={k: v for k, v in raw.items() if k not in _KNOWN_FIELDS},
        )
        if validate:
            artifact.check_invariants()
        return artifact

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "topic": self.config.topic,
            "status": self.status.value,
            "created_at": self.created_at,
            "doc_count": self.corpus_summary.get("doc_count", len(self.documents)),
            "cluster_count": len(self.clusters),
        }


class RunStore:
    """Directory of one JSON file per run, written atomically."""

    def __init__(self, runs_dir: str | Path):
        self.runs_dir = Path(runs_dir)
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.json"

    def save(self, artifact: RunArtifact) -> str:
        atomic_write_json(self._path(artifact.run_id), artifact.to_dict())
        return artifact.run_id

    def load(self, run_id: str, validate: bool = True) -> RunArtifact:
        path = self._path(run_id)
        if not path.exists():
            raise NotFoundError(f"no run {run_id!r} in {self.runs_dir}")
        return RunArtifact.from_dict(read_json(path), validate=validate)

    def list_runs(self) -> list[dict]:
        summaries = []
        for path in sorted(self.runs_dir.glob("*.json")):
            try:
                summaries.append(RunArtifact.from_dict(read_json(path), validate=False).summary())
            except (MigrationError, KeyError):
                continue
        summaries.sort(key=lambda s: s["created_at"])
        return summaries

    def wait_for(self, run_id: str, timeout: float = 60.0, interval: float = 0.1) -> RunArtifact:
        """Poll until the run reaches a terminal status."""
        deadline = time.monotonic() + timeout
        while True:
            artifact = self.load(run_id, validate=False)
            if artifact.status in (RunStatus.DONE, RunStatus.FAILED):
                return artifact
            if time.monotonic() > deadline:
                raise TimeoutError(f"run {run_id} still {artifact.status.value} after {timeout}s")
            time.sleep(interval)

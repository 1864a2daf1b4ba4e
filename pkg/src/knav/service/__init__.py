from .artifact import ClusterRecord, RunArtifact, RunConfig, RunStatus, RunStore
from .pipeline import Runtime, build_runtime, expand_in_run, run_pipeline

__all__ = [
    "ClusterRecord",
    "RunArtifact",
    "RunConfig",
    "RunStatus",
    "RunStore",
    "Runtime",
    "build_runtime",
    "expand_in_run",
    "run_pipeline",
]

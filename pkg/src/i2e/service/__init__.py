from .app import create_app
from .jobs import PipelineRunner, ServiceConfig, apply_override, rescore
from .store import JobState, SessionStore, STAGES

__all__ = [
    "JobState",
    "PipelineRunner",
    "STAGES",
    "ServiceConfig",
    "SessionStore",
    "apply_override",
    "create_app",
    "rescore",
]

from .gateway import AsrBackendConfig, AsrResult, HttpAsrAdapter, transcribe
from .mock import InjectedError, MockAsrOutput, load_fixture, mock_transcribe

__all__ = [
    "AsrBackendConfig",
    "AsrResult",
    "HttpAsrAdapter",
    "InjectedError",
    "MockAsrOutput",
    "load_fixture",
    "mock_transcribe",
    "transcribe",
]

from .client import (
    HttpLlmBackend,
    LlmBackend,
    LlmBackendConfig,
    LlmRequest,
    LlmResponse,
    complete,
)
from .mock import MockLlmBackend, request_key
from .tokens import estimate_tokens

__all__ = [
    "HttpLlmBackend",
    "LlmBackend",
    "LlmBackendConfig",
    "LlmRequest",
    "LlmResponse",
    "MockLlmBackend",
    "complete",
    "estimate_tokens",
    "request_key",
]

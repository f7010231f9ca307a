"""Text-generation lane: prompt building, pluggable clients, response
parsing and decomposition into symbolic building blocks."""

from .client import (
    ClientError,
    GeneratorClient,
    LiveClient,
    MockClient,
    TranscriptClient,
    prompt_hash,
)
from .parse import MalformedResponseError, ParsedResponse, decompose, parse_response
from .prompt import EXEMPLARS, ReasoningSteps, build_prompt, render_response

__all__ = [
    "EXEMPLARS",
    "ClientError",
    "GeneratorClient",
    "LiveClient",
    "MalformedResponseError",
    "MockClient",
    "ParsedResponse",
    "ReasoningSteps",
    "TranscriptClient",
    "build_prompt",
    "decompose",
    "parse_response",
    "prompt_hash",
    "render_response",
]

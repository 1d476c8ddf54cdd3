"""Two-stage program-generation agent and its chat clients."""

from .client import (
    BACKOFF_BASE,
    BACKOFF_FACTOR,
    ENV_API_KEY,
    ENV_BASE_URL,
    MAX_ATTEMPTS,
    ChatClient,
    ChatRequest,
    ChatResponse,
    HttpChatClient,
    MockChatClient,
    RecordingChatClient,
    ScriptedChatClient,
)
from .pipeline import (
    FAILURE_STAGES,
    AgentConfig,
    Answer,
    PipelineOutcome,
    answer_with_clue,
    answer_without_clue,
    build_codegen_prompt,
    extract_program,
    generate_program,
    parse_choice,
    solve,
)
from . import prompts

__all__ = [
    "AgentConfig", "Answer", "PipelineOutcome", "FAILURE_STAGES",
    "build_codegen_prompt", "extract_program", "generate_program",
    "answer_with_clue", "answer_without_clue", "parse_choice", "solve",
    "ChatClient", "ChatRequest", "ChatResponse", "HttpChatClient",
    "MockChatClient", "RecordingChatClient", "ScriptedChatClient",
    "ENV_API_KEY", "ENV_BASE_URL",
    "BACKOFF_BASE", "BACKOFF_FACTOR", "MAX_ATTEMPTS",
    "prompts",
]

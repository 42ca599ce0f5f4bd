from .events import REJECTION_REASONS, SessionEvent
from .session import (
    ConflictError,
    PlacementSession,
    SessionConfig,
    SessionStore,
    ValidationFailure,
)
from .app import create_app

__all__ = [
    "REJECTION_REASONS",
    "ConflictError",
    "PlacementSession",
    "SessionConfig",
    "SessionEvent",
    "SessionStore",
    "ValidationFailure",
    "create_app",
]

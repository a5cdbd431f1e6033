"""Real-time local event detection on geo-tagged short-text streams."""

from .config import EngineConfig
from .engine import DetectionEngine
from .events import EventQuery, EventRecord
from .ingest import Tweet

__version__ = "0.1.0"

__all__ = [
    "DetectionEngine",
    "EngineConfig",
    "EventQuery",
    "EventRecord",
    "Tweet",
    "__version__",
]

"""Adapter configuration.

Every capability maps to a model identifier; the identifier ``stub`` selects
the built-in deterministic models so the protocol is testable without any
model weights. Anything else is treated as a real-model reference and handed
to the loaders in ``models.py``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

CAPABILITIES = ("transcribe", "completeness", "embed", "music", "punctuate")

STUB = "stub"


@dataclass(frozen=True)
class AdapterConfig:
    host: str = "127.0.0.1"
    port: int = 8322
    max_concurrent: int = 4
    device: str = "cpu"
    models: Dict[str, str] = field(
        default_factory=lambda: {cap: STUB for cap in CAPABILITIES}
    )
    # artificial minimum handling time; lets tests trigger the overload path
    # reliably without real model latency
    min_request_s: float = 0.0

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError(f"max_concurrent must be >= 1, got {self.max_concurrent}")
        unknown = set(self.models) - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities in model map: {sorted(unknown)}")
        if self.min_request_s < 0:
            raise ValueError("min_request_s must be >= 0")

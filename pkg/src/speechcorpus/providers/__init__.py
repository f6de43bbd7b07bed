"""Interfaces for all external ML inference the pipeline depends on.

Two implementations ship: deterministic mocks (every hermetic test uses
them) and a remote client speaking the HTTP wire protocol of the inference
adapter. Provider calls are pure with respect to pipeline state.
"""

from __future__ import annotations

import unicodedata
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..model import AudioBuffer, TimeSpan

COMPLETENESS_THRESHOLD = 0.5
DEFAULT_EMBEDDING_DIM = 192
MIN_EMBED_AUDIO_S = 1.0


class ProviderError(RuntimeError):
    """Unrecoverable provider failure."""


class RetryableProviderError(ProviderError):
    """Transient failure; the caller may retry. Distinct from an empty result."""


@dataclass(frozen=True)
class Transcription:
    text: str
    confidence: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "text", unicodedata.normalize("NFC", self.text))


@dataclass(frozen=True)
class CompletenessVerdict:
    is_complete: bool
    score: float

    def __post_init__(self):
        if self.is_complete != (self.score >= COMPLETENESS_THRESHOLD):
            raise ValueError(
                f"is_complete={self.is_complete} inconsistent with score={self.score}"
            )


@dataclass(frozen=True)
class Embedding:
    vector: np.ndarray
    norm: float = 0.0

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", vector)
        object.__setattr__(self, "norm", float(np.linalg.norm(vector)))

    @property
    def dimension(self) -> int:
        return len(self.vector)

    def unit(self) -> np.ndarray:
        if self.norm == 0.0:
            raise ValueError("zero embedding has no direction")
        return self.vector / self.norm


@dataclass(frozen=True)
class MusicSpan:
    span: TimeSpan
    kind: str = "music"  # music | speech | noise


class Transcriber(ABC):
    @abstractmethod
    def transcribe(self, audio: AudioBuffer) -> Transcription: ...


class CompletenessChecker(ABC):
    @abstractmethod
    def check_completeness(self, text: str) -> CompletenessVerdict: ...


class SpeakerEmbedder(ABC):
    @abstractmethod
    def embed_speaker(self, audio: AudioBuffer) -> Embedding: ...


class MusicDetector(ABC):
    @abstractmethod
    def detect_music(self, audio: AudioBuffer) -> List[MusicSpan]: ...


class PunctuationRestorer(ABC):
    @abstractmethod
    def restore_punctuation(self, text: str) -> str: ...


@dataclass
class ProviderSet:
    """The full bundle of capabilities the pipeline consumes."""

    transcriber: Transcriber
    completeness: CompletenessChecker
    embedder: SpeakerEmbedder
    music: MusicDetector
    punctuation: PunctuationRestorer

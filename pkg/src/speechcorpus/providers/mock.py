"""Deterministic provider mocks.

The mock transcriber is driven by an annotated word script per recording:
a call returns exactly the words whose time intervals lie fully inside the
queried audio's span (the buffer's offset into its source recording plus its
duration). Everything here is reproducible given the construction arguments.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from ..audio import iter_frames
from ..model import AudioBuffer, TimeSpan
from ..vad import _spectral_flatness
from . import (
    DEFAULT_EMBEDDING_DIM,
    MIN_EMBED_AUDIO_S,
    CompletenessChecker,
    CompletenessVerdict,
    Embedding,
    MusicDetector,
    MusicSpan,
    ProviderError,
    PunctuationRestorer,
    SpeakerEmbedder,
    Transcriber,
    Transcription,
)

_EPS = 1e-6

SENTENCE_FINAL_MARKS = (".", "!", "?", "؟", "۔", "؛", "…")


@dataclass(frozen=True)
class ScriptedWord:
    text: str
    start_s: float
    end_s: float


Script = Sequence[ScriptedWord]


class MockTranscriber(Transcriber):
    """Returns script words fully contained in the queried span.

    ``scripts`` maps source_id to its word list; a bare list serves every
    source. ``call_count`` lets tests assert query budgets.
    """

    def __init__(self, scripts: Union[Script, Dict[str, Script]]):
        if isinstance(scripts, dict):
            self._scripts = {k: sorted(v, key=lambda w: w.start_s) for k, v in scripts.items()}
            self._default: Optional[Script] = None
        else:
            self._scripts = {}
            self._default = sorted(scripts, key=lambda w: w.start_s)
        self.call_count = 0

    def _script_for(self, source_id) -> Script:
        if source_id in self._scripts:
            return self._scripts[source_id]
        if self._default is not None:
            return self._default
        return ()

    def transcribe(self, audio: AudioBuffer) -> Transcription:
        self.call_count += 1
        lo = audio.offset_s
        hi = audio.offset_s + audio.duration_s
        words = [
            w.text
            for w in self._script_for(audio.source_id)
            if w.start_s >= lo - _EPS and w.end_s <= hi + _EPS
        ]
        return Transcription(text=" ".join(words), confidence=1.0 if words else None)


class MockCompletenessChecker(CompletenessChecker):
    """Complete iff the text ends with sentence-final punctuation or a closed
    set of sentence-final words."""

    def __init__(self, final_words: Iterable[str] = ()):
        self._final_words = frozenset(final_words)

    def check_completeness(self, text: str) -> CompletenessVerdict:
        stripped = text.strip()
        if not stripped:
            return CompletenessVerdict(is_complete=False, score=0.05)
        if stripped.endswith(SENTENCE_FINAL_MARKS):
            return CompletenessVerdict(is_complete=True, score=0.95)
        last_word = stripped.split()[-1]
        if last_word in self._final_words:
            return CompletenessVerdict(is_complete=True, score=0.9)
        return CompletenessVerdict(is_complete=False, score=0.1)


def _seed_from(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def speaker_mean_vector(speaker_id: str, dim: int = DEFAULT_EMBEDDING_DIM) -> np.ndarray:
    """The deterministic unit mean embedding of a synthetic speaker."""
    rng = np.random.default_rng(_seed_from("speaker-mean", speaker_id, dim))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class MockSpeakerEmbedder(SpeakerEmbedder):
    """Unit vectors drawn from a per-speaker Gaussian, seeded by speaker id.

    ``speaker_of`` resolves a buffer's source_id to a synthetic speaker id;
    the per-utterance seed also folds in the buffer offset, so the same
    utterance always embeds identically.
    """

    def __init__(
        self,
        speaker_of: Union[Dict[str, str], Callable[[str], str]],
        dim: int = DEFAULT_EMBEDDING_DIM,
        spread: float = 0.02,
    ):
        self._speaker_of = speaker_of
        self._dim = dim
        self._spread = spread

    def embed_speaker(self, audio: AudioBuffer) -> Embedding:
        if audio.duration_s < MIN_EMBED_AUDIO_S - _EPS:
            raise ProviderError(
                f"audio too short to embed: {audio.duration_s:.3f} s < {MIN_EMBED_AUDIO_S} s"
            )
        if callable(self._speaker_of):
            speaker = self._speaker_of(audio.source_id)
        else:
            speaker = self._speaker_of[audio.source_id]
        mean = speaker_mean_vector(speaker, self._dim)
        rng = np.random.default_rng(
            _seed_from("utterance", speaker, audio.source_id, round(audio.offset_s * 1000))
        )
        v = mean + self._spread * rng.standard_normal(self._dim)
        v /= np.linalg.norm(v)
        return Embedding(vector=v)


class MockMusicDetector(MusicDetector):
    """Flags intervals whose spectral flatness is below a threshold (tonal,
    music-like); broadband content stays unflagged."""

    def __init__(self, flatness_threshold: float = 0.02, frame_ms: int = 30,
                 min_span_s: float = 0.2, merge_gap_s: float = 0.2):
        self._threshold = flatness_threshold
        self._frame_ms = frame_ms
        self._min_span_s = min_span_s
        self._merge_gap_s = merge_gap_s

    def detect_music(self, audio: AudioBuffer) -> List[MusicSpan]:
        frame_s = self._frame_ms / 1000.0
        flagged = []
        for i, frame in enumerate(iter_frames(audio, self._frame_ms)):
            if float(np.max(np.abs(frame))) < 1e-6:
                continue  # silence is not music
            if _spectral_flatness(frame) < self._threshold:
                flagged.append(i)
        max_gap = max(1, round(self._merge_gap_s / frame_s))
        runs: List[List[int]] = []
        for i in flagged:
            if runs and i - runs[-1][-1] <= max_gap:
                runs[-1].append(i)
            else:
                runs.append([i])
        spans: List[MusicSpan] = []
        for run in runs:
            start_s = run[0] * frame_s
            end_s = min((run[-1] + 1) * frame_s, audio.duration_s)
            if end_s - start_s >= self._min_span_s - _EPS:
                spans.append(MusicSpan(span=TimeSpan(start_s, end_s)))
        return spans


class MockPunctuationRestorer(PunctuationRestorer):
    """Appends a period when no sentence-final mark exists; idempotent."""

    def restore_punctuation(self, text: str) -> str:
        stripped = text.rstrip()
        if not stripped:
            return text
        if stripped.endswith(SENTENCE_FINAL_MARKS):
            return text
        return stripped + "."

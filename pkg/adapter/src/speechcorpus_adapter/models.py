"""Model backends for each capability.

Stub models are tiny, dependency-free, and deterministic: they honor the
wire-protocol contracts (schemas, invariants like idempotent punctuation and
is_complete == score >= 0.5) without any notion of real speech. Real-model
loading goes through ``load_model``, which disables the capability when the
backing library or weights are unavailable instead of failing startup.
"""

from __future__ import annotations

import hashlib
import logging
from typing import List, Optional, Tuple

import numpy as np

log = logging.getLogger(__name__)

EMBEDDING_DIM = 192
SENTENCE_FINAL_MARKS = (".", "!", "?", "؟", "۔", "؛", "…")


class StubTranscriber:
    """Emits one placeholder word per half-second of audio, seeded by the
    audio content so identical buffers transcribe identically."""

    _SYLLABLES = ("da", "mo", "ki", "ra", "su", "ven", "tal", "or")

    def transcribe(self, pcm: np.ndarray, sample_rate: int) -> Tuple[str, Optional[float]]:
        if len(pcm) == 0:
            return "", None
        n_words = max(1, int(len(pcm) / sample_rate / 0.5))
        digest = hashlib.sha256(pcm.tobytes()).digest()
        words = []
        for i in range(n_words):
            a, b = digest[(2 * i) % 32], digest[(2 * i + 1) % 32]
            words.append(self._SYLLABLES[a % 8] + self._SYLLABLES[b % 8])
        return " ".join(words) + ".", 0.5


class StubCompletenessChecker:
    def check(self, text: str) -> Tuple[bool, float]:
        stripped = text.strip()
        if not stripped:
            return False, 0.05
        if stripped.endswith(SENTENCE_FINAL_MARKS):
            return True, 0.95
        return False, 0.1


class StubEmbedder:
    """Deterministic unit vector from a content hash of the audio."""

    dim = EMBEDDING_DIM

    def embed(self, pcm: np.ndarray, sample_rate: int) -> List[float]:
        seed = int.from_bytes(hashlib.sha256(pcm.tobytes()).digest()[:8], "little")
        v = np.random.default_rng(seed).standard_normal(self.dim)
        v /= np.linalg.norm(v)
        return [float(x) for x in v]


class StubMusicDetector:
    """Flatness-gated tonality detector: frames whose spectral flatness is
    below the threshold count as music; adjacent frames merge into spans."""

    def __init__(self, threshold: float = 0.02, frame_ms: int = 30,
                 min_span_s: float = 0.2, merge_gap_s: float = 0.2):
        self.threshold = threshold
        self.frame_ms = frame_ms
        self.min_span_s = min_span_s
        self.merge_gap_s = merge_gap_s

    @staticmethod
    def _flatness(frame: np.ndarray) -> float:
        power = np.abs(np.fft.rfft(frame)) ** 2
        power = power[power > 0]
        if len(power) == 0:
            return 1.0
        geometric = np.exp(np.mean(np.log(power)))
        return float(geometric / np.mean(power))

    def detect(self, pcm: np.ndarray, sample_rate: int) -> List[dict]:
        size = sample_rate * self.frame_ms // 1000
        if size == 0 or len(pcm) < size:
            return []
        frame_s = self.frame_ms / 1000.0
        flagged = []
        for i in range(len(pcm) // size):
            frame = pcm[i * size:(i + 1) * size]
            if float(np.max(np.abs(frame))) < 1e-6:
                continue
            if self._flatness(frame) < self.threshold:
                flagged.append(i)
        max_gap = max(1, round(self.merge_gap_s / frame_s))
        runs: List[List[int]] = []
        for i in flagged:
            if runs and i - runs[-1][-1] <= max_gap:
                runs[-1].append(i)
            else:
                runs.append([i])
        duration = len(pcm) / sample_rate
        spans = []
        for run in runs:
            start = run[0] * frame_s
            end = min((run[-1] + 1) * frame_s, duration)
            if end - start >= self.min_span_s - 1e-9:
                spans.append({"start_s": start, "end_s": end, "kind": "music"})
        return spans


class StubPunctuationRestorer:
    def restore(self, text: str) -> str:
        stripped = text.rstrip()
        if not stripped:
            return text
        if stripped.endswith(SENTENCE_FINAL_MARKS):
            return text
        return stripped + "."


_STUBS = {
    "transcribe": StubTranscriber,
    "completeness": StubCompletenessChecker,
    "embed": StubEmbedder,
    "music": StubMusicDetector,
    "punctuate": StubPunctuationRestorer,
}


def load_model(capability: str, identifier: str, device: str = "cpu"):
    """Returns a model object for the capability, or None if it cannot be
    loaded (the endpoint is then disabled and /health omits the capability)."""
    if identifier == "stub":
        return _STUBS[capability]()
    try:
        return _load_real_model(capability, identifier, device)
    except Exception as exc:  # noqa: BLE001 - degrade to a disabled endpoint
        log.warning("disabling %s: cannot load model %r: %s", capability, identifier, exc)
        return None


def _load_real_model(capability: str, identifier: str, device: str):
    # real backends are optional heavyweight dependencies; import lazily so
    # stub mode works in a minimal environment
    if capability == "transcribe":
        import transformers  # noqa: F401

        raise NotImplementedError(f"ASR backend for {identifier!r} is not bundled")
    if capability == "embed":
        import speechbrain  # noqa: F401

        raise NotImplementedError(f"embedding backend for {identifier!r} is not bundled")
    raise NotImplementedError(f"no real backend for capability {capability!r}")

"""HTTP client for a remote inference adapter speaking the provider protocol.

Retries transient failures (connection errors, 5xx) up to 3 attempts with
exponential backoff starting at 250 ms, honoring Retry-After on 503. An
in-flight request cap (default 8) keeps a shared client polite under the
pipeline's worker parallelism.
"""

from __future__ import annotations

import threading
import time
from typing import List, Optional

import httpx

from ..model import AudioBuffer, TimeSpan
from . import (
    CompletenessChecker,
    CompletenessVerdict,
    Embedding,
    MusicDetector,
    MusicSpan,
    ProviderError,
    ProviderSet,
    PunctuationRestorer,
    RetryableProviderError,
    SpeakerEmbedder,
    Transcriber,
    Transcription,
)
from .wire import encode_audio

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 0.25
DEFAULT_MAX_INFLIGHT = 8


class RemoteProviderClient(
    Transcriber, CompletenessChecker, SpeakerEmbedder, MusicDetector, PunctuationRestorer
):
    def __init__(
        self,
        base_url: str,
        timeout_s: float = 30.0,
        retries: int = DEFAULT_RETRIES,
        backoff_s: float = DEFAULT_BACKOFF_S,
        max_inflight: int = DEFAULT_MAX_INFLIGHT,
    ):
        self._base_url = base_url.rstrip("/")
        self._retries = retries
        self._backoff_s = backoff_s
        self._semaphore = threading.Semaphore(max_inflight)
        self._client = httpx.Client(base_url=self._base_url, timeout=timeout_s)

    def close(self) -> None:
        self._client.close()

    def _post(self, endpoint: str, payload: dict) -> dict:
        last_error: Optional[Exception] = None
        for attempt in range(self._retries):
            if attempt:
                time.sleep(self._backoff_s * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self._client.post(f"/{endpoint}", json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code == 200:
                return response.json()
            if response.status_code == 503:
                retry_after = response.headers.get("Retry-After")
                if retry_after is not None:
                    try:
                        time.sleep(min(float(retry_after), 5.0))
                    except ValueError:
                        pass
                last_error = RetryableProviderError(f"{endpoint}: overloaded (503)")
                continue
            if response.status_code >= 500:
                last_error = RetryableProviderError(
                    f"{endpoint}: server error {response.status_code}"
                )
                continue
            raise ProviderError(f"{endpoint}: HTTP {response.status_code}: {response.text[:200]}")
        raise RetryableProviderError(
            f"{endpoint}: failed after {self._retries} attempts: {last_error}"
        )

    def health(self) -> dict:
        response = self._client.get("/health")
        response.raise_for_status()
        return response.json()

    def transcribe(self, audio: AudioBuffer) -> Transcription:
        body = self._post("transcribe", encode_audio(audio))
        return Transcription(text=body["text"], confidence=body.get("confidence"))

    def check_completeness(self, text: str) -> CompletenessVerdict:
        body = self._post("completeness", {"text": text})
        return CompletenessVerdict(is_complete=body["is_complete"], score=body["score"])

    def embed_speaker(self, audio: AudioBuffer) -> Embedding:
        body = self._post("embed", encode_audio(audio))
        return Embedding(vector=body["vector"])

    def detect_music(self, audio: AudioBuffer) -> List[MusicSpan]:
        body = self._post("music", encode_audio(audio))
        return [
            MusicSpan(span=TimeSpan(s["start_s"], s["end_s"]), kind=s["kind"])
            for s in body["spans"]
        ]

    def restore_punctuation(self, text: str) -> str:
        return self._post("punctuate", {"text": text})["text"]

    def as_provider_set(self) -> ProviderSet:
        return ProviderSet(
            transcriber=self,
            completeness=self,
            embedder=self,
            music=self,
            punctuation=self,
        )

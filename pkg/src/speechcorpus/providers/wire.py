"""Shared wire-format helpers for the provider HTTP protocol.

Audio travels as base64-encoded 16-bit little-endian PCM plus a sample_rate
field. The JSON response schemas live in ``schemas/`` and are shared with
the inference adapter.
"""

from __future__ import annotations

import base64
import json
from importlib import resources

import numpy as np

from ..model import AudioBuffer

ENDPOINTS = ("transcribe", "completeness", "embed", "music", "punctuate")


def encode_audio(buffer: AudioBuffer) -> dict:
    pcm = np.clip(buffer.samples, -1.0, 1.0)
    pcm = np.round(pcm * 32767.0).astype("<i2")
    return {
        "audio": base64.b64encode(pcm.tobytes()).decode("ascii"),
        "sample_rate": buffer.sample_rate_hz,
    }


def decode_audio(payload: dict) -> AudioBuffer:
    raw = base64.b64decode(payload["audio"])
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    return AudioBuffer(samples=samples, sample_rate_hz=int(payload["sample_rate"]))


def load_schema(name: str) -> dict:
    text = resources.files("speechcorpus.providers").joinpath(f"schemas/{name}.json").read_text()
    return json.loads(text)

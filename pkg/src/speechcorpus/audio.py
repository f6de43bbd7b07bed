"""Audio ingestion and DSP plumbing: WAV decode/encode, resample, slice, framing.

The pipeline keeps two copies of each recording: the original-rate buffer
(final segment audio is cut from it) and a 16 kHz mono working copy that VAD
and feature extraction run on.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.signal import resample_poly

from .model import AudioBuffer, TimeSpan

WORKING_RATE_HZ = 16_000

VALID_FRAME_MS = (10, 20, 30)


class AudioDecodeError(ValueError):
    """Input file is not decodable."""


class UnsupportedFormatError(AudioDecodeError):
    """Container or codec is recognized but not supported."""


class TruncatedFileError(AudioDecodeError):
    """File ends before its declared payload; carries the failing byte offset."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


def decode_wav(path) -> AudioBuffer:
    """Decode a PCM WAV file to a mono AudioBuffer with samples in [-1, 1].

    Supports 16-bit PCM (required), plus 8/24/32-bit PCM and 32-bit float.
    Multi-channel input is downmixed by averaging.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise TruncatedFileError(f"{path}: not a RIFF file", len(data))
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path}: not a RIFF/WAVE container")

    fmt = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if body_start + 16 > len(data):
                raise TruncatedFileError(f"{path}: fmt chunk truncated", len(data))
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            if fmt is None:
                raise UnsupportedFormatError(f"{path}: data chunk precedes fmt chunk")
            declared_end = body_start + chunk_size
            if declared_end > len(data):
                raise TruncatedFileError(
                    f"{path}: data chunk declares {chunk_size} bytes but file ends early",
                    len(data),
                )
            return _decode_pcm(path, fmt, data[body_start:declared_end])
        pos = body_start + chunk_size + (chunk_size & 1)
    raise TruncatedFileError(f"{path}: no complete data chunk found", pos)


def _decode_pcm(path: Path, fmt, payload: bytes) -> AudioBuffer:
    audio_format, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if channels < 1 or sample_rate <= 0:
        raise UnsupportedFormatError(f"{path}: invalid fmt chunk")
    if audio_format == 1:  # integer PCM
        if bits == 16:
            raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
            samples = raw.astype(np.float64) / 32768.0
        elif bits == 8:  # unsigned
            raw = np.frombuffer(payload, dtype=np.uint8)
            samples = (raw.astype(np.float64) - 128.0) / 128.0
        elif bits == 24:
            usable = len(payload) // 3 * 3
            b = np.frombuffer(payload[:usable], dtype=np.uint8).reshape(-1, 3)
            raw = (
                b[:, 0].astype(np.int32)
                | (b[:, 1].astype(np.int32) << 8)
                | (b[:, 2].astype(np.int32) << 16)
            )
            raw = np.where(raw >= 1 << 23, raw - (1 << 24), raw)
            samples = raw.astype(np.float64) / float(1 << 23)
        elif bits == 32:
            raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<i4")
            samples = raw.astype(np.float64) / float(1 << 31)
        else:
            raise UnsupportedFormatError(f"{path}: {bits}-bit integer PCM not supported")
    elif audio_format == 3 and bits == 32:  # IEEE float
        samples = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: audio format tag {audio_format} ({bits}-bit) not supported"
        )
    if channels > 1:
        usable = len(samples) // channels * channels
        samples = samples[:usable].reshape(-1, channels).mean(axis=1)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioBuffer(samples=samples, sample_rate_hz=sample_rate, source_id=path.stem)


def encode_wav(path, buffer: AudioBuffer) -> None:
    """Write a 16-bit PCM mono WAV file."""
    pcm = np.clip(buffer.samples, -1.0, 1.0)
    pcm = np.round(pcm * 32767.0).astype("<i2")
    payload = pcm.tobytes()
    sr = buffer.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sr, sr * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)


def resample(buffer: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Band-limited resampling; preserves duration within one output sample."""
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if target_hz == buffer.sample_rate_hz:
        return buffer
    g = math.gcd(target_hz, buffer.sample_rate_hz)
    out = resample_poly(buffer.samples, target_hz // g, buffer.sample_rate_hz // g)
    out = np.clip(out, -1.0, 1.0)
    return AudioBuffer(
        samples=out,
        sample_rate_hz=target_hz,
        source_id=buffer.source_id,
        offset_s=buffer.offset_s,
    )


def slice_buffer(buffer: AudioBuffer, span: TimeSpan) -> AudioBuffer:
    """Cut [start_s, end_s) out of a buffer (buffer-local seconds, floor/floor)."""
    if span.end_s > buffer.duration_s + 1e-9:
        raise ValueError(
            f"span [{span.start_s}, {span.end_s}] exceeds buffer duration {buffer.duration_s:.6f}"
        )
    sr = buffer.sample_rate_hz
    lo = math.floor(span.start_s * sr + 1e-9)
    hi = math.floor(span.end_s * sr + 1e-9)
    hi = min(hi, len(buffer.samples))
    if hi <= lo:
        raise ValueError(f"span [{span.start_s}, {span.end_s}] is shorter than one sample")
    return AudioBuffer(
        samples=buffer.samples[lo:hi],
        sample_rate_hz=sr,
        source_id=buffer.source_id,
        offset_s=buffer.offset_s + lo / sr,
    )


def iter_frames(buffer: AudioBuffer, frame_ms: int) -> Iterator[np.ndarray]:
    """Yield non-overlapping frames of exactly frame_ms; a final partial frame is dropped."""
    if frame_ms not in VALID_FRAME_MS:
        raise ValueError(f"frame_ms must be one of {VALID_FRAME_MS}, got {frame_ms}")
    size = buffer.sample_rate_hz * frame_ms // 1000
    n = len(buffer.samples) // size
    for i in range(n):
        yield buffer.samples[i * size : (i + 1) * size]


def frame_count(buffer: AudioBuffer, frame_ms: int) -> int:
    size = buffer.sample_rate_hz * frame_ms // 1000
    return len(buffer.samples) // size

"""Phase 1 segmentation: frame-level voice activity detection and candidate spans.

The detector is deliberately self-contained and deterministic: per-frame
energy plus a spectral-flatness rescue for quiet-but-tonal frames, with four
calibrated threshold sets selected by the aggressiveness level. Higher
aggressiveness means a stricter speech gate (more frames called non-speech).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .audio import WORKING_RATE_HZ, VALID_FRAME_MS, iter_frames
from .model import AudioBuffer, TimeSpan

SUPPORTED_RATES = (8_000, 16_000, 32_000, 48_000)

# Per-aggressiveness (energy gate dBFS, flatness ceiling for the quiet-tonal rescue).
_THRESHOLDS = {
    0: (-55.0, 0.50),
    1: (-48.0, 0.40),
    2: (-40.0, 0.30),
    3: (-33.0, 0.20),
}

_RESCUE_MARGIN_DB = 12.0  # quiet-tonal rescue applies down to gate - margin


@dataclass(frozen=True)
class VadConfig:
    aggressiveness: int = 1
    frame_ms: int = 30
    min_silence_ms: int = 300
    min_segment_s: float = 1.0
    max_segment_s: float = 20.0
    padding_ms: int = 100

    def __post_init__(self):
        if self.aggressiveness not in _THRESHOLDS:
            raise ValueError(f"aggressiveness must be 0..3, got {self.aggressiveness}")
        if self.frame_ms not in VALID_FRAME_MS:
            raise ValueError(f"frame_ms must be one of {VALID_FRAME_MS}")
        if not self.min_segment_s < self.max_segment_s:
            raise ValueError("min_segment_s must be < max_segment_s")


def _frame_energy_db(frame: np.ndarray) -> float:
    rms = float(np.sqrt(np.mean(frame * frame)))
    if rms <= 0.0:
        return -np.inf
    return 20.0 * np.log10(rms)


def _spectral_flatness(frame: np.ndarray) -> float:
    power = np.abs(np.fft.rfft(frame)) ** 2
    power = power[1:]  # drop DC
    if power.size == 0:
        return 1.0
    floor = max(power.max(), 1e-30) * 1e-12
    power = np.maximum(power, floor)
    return float(np.exp(np.mean(np.log(power))) / np.mean(power))


def classify_frames(buffer: AudioBuffer, config: VadConfig) -> List[bool]:
    """One speech/non-speech decision per full frame. Deterministic."""
    if buffer.sample_rate_hz not in SUPPORTED_RATES:
        raise ValueError(
            f"VAD requires a sample rate in {SUPPORTED_RATES}, got {buffer.sample_rate_hz} "
            f"(resample the working copy to {WORKING_RATE_HZ} Hz)"
        )
    gate_db, flatness_max = _THRESHOLDS[config.aggressiveness]
    labels = []
    for frame in iter_frames(buffer, config.frame_ms):
        energy = _frame_energy_db(frame)
        if energy >= gate_db:
            labels.append(True)
        elif energy >= gate_db - _RESCUE_MARGIN_DB:
            labels.append(_spectral_flatness(frame) < flatness_max)
        else:
            labels.append(False)
    return labels


def _speech_runs(labels: List[bool]) -> List[tuple]:
    """Maximal runs of speech frames as (first_frame, last_frame_exclusive)."""
    runs = []
    start = None
    for i, is_speech in enumerate(labels):
        if is_speech and start is None:
            start = i
        elif not is_speech and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(labels)))
    return runs


def _merge_runs(runs: List[tuple], min_gap_frames: int) -> List[List[tuple]]:
    """Group runs whose separating silence is shorter than min_gap_frames."""
    groups: List[List[tuple]] = []
    for run in runs:
        if groups and run[0] - groups[-1][-1][1] < min_gap_frames:
            groups[-1].append(run)
        else:
            groups.append([run])
    return groups


def _split_group(group: List[tuple], max_frames: int) -> List[List[tuple]]:
    """Split an over-long group at its longest interior silence (earliest tie).

    A group with no interior silence is chopped into max_frames pieces.
    """
    length = group[-1][1] - group[0][0]
    if length <= max_frames:
        return [group]
    if len(group) == 1:
        start, end = group[0]
        return [[(s, min(s + max_frames, end))] for s in range(start, end, max_frames)]
    best_i, best_gap = None, -1
    for i in range(1, len(group)):
        gap = group[i][0] - group[i - 1][1]
        if gap > best_gap:
            best_i, best_gap = i, gap
    left, right = group[:best_i], group[best_i:]
    return _split_group(left, max_frames) + _split_group(right, max_frames)


def _raw_candidates(buffer: AudioBuffer, config: VadConfig) -> List[TimeSpan]:
    """Padded candidate spans before the minimum-length filter."""
    labels = classify_frames(buffer, config)
    frame_s = config.frame_ms / 1000.0
    min_gap_frames = max(1, round(config.min_silence_ms / config.frame_ms))
    max_frames = max(1, int(config.max_segment_s / frame_s))
    groups = _merge_runs(_speech_runs(labels), min_gap_frames)
    split: List[List[tuple]] = []
    for group in groups:
        split.extend(_split_group(group, max_frames))

    pad_s = config.padding_ms / 1000.0
    spans = []
    for i, group in enumerate(split):
        start = group[0][0] * frame_s
        end = group[-1][1] * frame_s
        # pad without crossing the midpoint of the gap to a neighbor
        lo = 0.0 if i == 0 else (split[i - 1][-1][1] * frame_s + start) / 2.0
        hi = buffer.duration_s if i == len(split) - 1 else (end + split[i + 1][0][0] * frame_s) / 2.0
        start = max(start - pad_s, lo, 0.0)
        end = min(end + pad_s, hi, buffer.duration_s)
        if end > start:
            spans.append(TimeSpan(round(start, 3), round(end, 3)))
    return spans


def detect_candidates(buffer: AudioBuffer, config: VadConfig) -> List[TimeSpan]:
    """Sorted, non-overlapping candidate spans; silent input yields []."""
    return [s for s in _raw_candidates(buffer, config) if s.duration_s >= config.min_segment_s - 1e-9]

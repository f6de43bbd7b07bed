"""Per-segment acoustic quality scoring.

Eight sub-scores (SNR, dynamic range, spectral shape, MFCC variance,
clipping, silence, music, duration) are normalized to [0,1] by piecewise
linear curves and combined into a weighted total. Category boundaries:
high is total strictly above 0.9, acceptable is 0.75..0.9 inclusive,
low is below 0.75.

The SNR is an estimator over frame-energy percentiles (no clean noise
reference exists); spectral and MFCC statistics are computed over non-silent
frames only so that silent gaps measure as silence, not as spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.fft import dct

from .model import AudioBuffer, audio_category
from .providers import MusicDetector, ProviderError

SILENCE_THRESHOLD_DBFS = -45.0
CLIP_LEVEL = 0.999

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class AudioQualityConfig:
    weights: Dict[str, float] = field(
        default_factory=lambda: {
            "snr": 0.22,
            "dynamic_range": 0.12,
            "spectral": 0.10,
            "mfcc_variance": 0.10,
            "clipping": 0.12,
            "silence": 0.12,
            "music": 0.12,
            "duration": 0.10,
        }
    )
    snr_full_marks_db: float = 30.0
    snr_floor_db: float = 0.0
    dynamic_range_full_db: float = 15.0
    dynamic_range_floor_db: float = 3.0
    clipping_tolerance: float = 1e-4
    clipping_zero_at: float = 0.05
    silence_ideal_max_ratio: float = 0.2
    silence_zero_at: float = 0.7
    ideal_duration_range_s: Tuple[float, float] = (2.0, 15.0)
    duration_zero_below_s: float = 0.5
    duration_zero_above_s: float = 30.0
    frame_ms: int = 25
    hop_ms: int = 10
    mfcc_count: int = 13
    mel_bands: int = 26
    # spectral centroid/rolloff bands: (zero, full, full, zero) Hz breakpoints
    centroid_band_hz: Tuple[float, float, float, float] = (100.0, 500.0, 2500.0, 6000.0)
    rolloff_band_hz: Tuple[float, float, float, float] = (300.0, 1000.0, 5000.0, 7900.0)
    mfcc_variance_full: float = 1.0

    def __post_init__(self):
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1.0, got {total}")


def _clamp(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _frames(buffer: AudioBuffer, frame_ms: int, hop_ms: int) -> np.ndarray:
    size = buffer.sample_rate_hz * frame_ms // 1000
    hop = buffer.sample_rate_hz * hop_ms // 1000
    x = buffer.samples
    if len(x) < size or size == 0:
        return np.empty((0, max(size, 1)))
    n = 1 + (len(x) - size) // hop
    idx = np.arange(size)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def _frame_rms_db(frames: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    return 20.0 * np.log10(np.maximum(rms, _EPS))


def estimate_snr_db(
    buffer: AudioBuffer, cfg: AudioQualityConfig = AudioQualityConfig()
) -> float:
    """Signal power (loudest 50% of frames) over the noise floor (quietest 10%)."""
    if buffer.duration_s < 0.5:
        raise ValueError(f"buffer too short for SNR estimation: {buffer.duration_s:.3f} s")
    frames = _frames(buffer, cfg.frame_ms, cfg.hop_ms)
    power = np.mean(frames * frames, axis=1)
    power.sort()
    n = len(power)
    n_noise = max(1, n // 10)
    n_signal = max(1, n // 2)
    noise = max(float(np.mean(power[:n_noise])), _EPS)
    signal = max(float(np.mean(power[-n_signal:])), _EPS)
    return 10.0 * np.log10(signal / noise)


def clipping_ratio(buffer: AudioBuffer) -> float:
    if len(buffer.samples) == 0:
        return 0.0
    return float(np.mean(np.abs(buffer.samples) >= CLIP_LEVEL))


def silence_ratio(
    buffer: AudioBuffer, cfg: AudioQualityConfig = AudioQualityConfig()
) -> float:
    frames = _frames(buffer, cfg.frame_ms, cfg.hop_ms)
    if len(frames) == 0:
        return 1.0
    return float(np.mean(_frame_rms_db(frames) < SILENCE_THRESHOLD_DBFS))


def dynamic_range_db(
    buffer: AudioBuffer, cfg: AudioQualityConfig = AudioQualityConfig()
) -> float:
    """p95 - p10 of frame RMS (dB) over non-silent frames."""
    frames = _frames(buffer, cfg.frame_ms, cfg.hop_ms)
    if len(frames) == 0:
        return 0.0
    db = _frame_rms_db(frames)
    db = db[db >= SILENCE_THRESHOLD_DBFS]
    if len(db) < 2:
        return 0.0
    return float(np.percentile(db, 95) - np.percentile(db, 10))


def _mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_inv(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def _mel_filterbank(n_bands: int, n_fft: int, sample_rate: int) -> np.ndarray:
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    edges = _mel_inv(np.linspace(_mel(0.0), _mel(sample_rate / 2.0), n_bands + 2))
    bank = np.zeros((n_bands, len(freqs)))
    for b in range(n_bands):
        lo, center, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / max(center - lo, _EPS)
        falling = (hi - freqs) / max(hi - center, _EPS)
        bank[b] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def _band_score(value: float, band: Tuple[float, float, float, float]) -> float:
    """Trapezoid: 0 at/below band[0], 1 on [band[1], band[2]], 0 at/above band[3]."""
    zero_lo, full_lo, full_hi, zero_hi = band
    if value <= zero_lo or value >= zero_hi:
        return 0.0
    if value < full_lo:
        return (value - zero_lo) / (full_lo - zero_lo)
    if value <= full_hi:
        return 1.0
    return (zero_hi - value) / (zero_hi - full_hi)


def spectral_and_mfcc_scores(
    buffer: AudioBuffer, cfg: AudioQualityConfig = AudioQualityConfig()
) -> Tuple[float, float]:
    """(spectral score from centroid+rolloff, MFCC-variance score)."""
    if buffer.duration_s < 1.0:
        raise ValueError(f"buffer too short for spectral features: {buffer.duration_s:.3f} s")
    frames = _frames(buffer, cfg.frame_ms, cfg.hop_ms)
    db = _frame_rms_db(frames)
    frames = frames[db >= SILENCE_THRESHOLD_DBFS]
    if len(frames) == 0:
        return 0.0, 0.0
    window = np.hanning(frames.shape[1])
    spectra = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    freqs = np.fft.rfftfreq(frames.shape[1], d=1.0 / buffer.sample_rate_hz)
    total = np.maximum(spectra.sum(axis=1), _EPS)

    centroid = float(np.mean((spectra @ freqs) / total))
    cumulative = np.cumsum(spectra, axis=1)
    rolloff_idx = np.argmax(cumulative >= 0.85 * total[:, None], axis=1)
    rolloff = float(np.mean(freqs[rolloff_idx]))
    spectral = _clamp(0.5 * _band_score(centroid, cfg.centroid_band_hz)
                      + 0.5 * _band_score(rolloff, cfg.rolloff_band_hz))

    bank = _mel_filterbank(cfg.mel_bands, frames.shape[1], buffer.sample_rate_hz)
    mel = spectra @ bank.T
    # floor 60 dB below the global peak so leakage noise does not masquerade
    # as spectral variation on stationary signals
    mel_energy = np.log(np.maximum(mel, max(mel.max(), _EPS) * 1e-6))
    mfcc = dct(mel_energy, type=2, axis=1, norm="ortho")[:, 1 : cfg.mfcc_count]
    mean_variance = float(np.mean(np.var(mfcc, axis=0))) if len(mfcc) > 1 else 0.0
    mfcc_score = _clamp(mean_variance / cfg.mfcc_variance_full)
    return spectral, mfcc_score


def score_audio(
    buffer: AudioBuffer,
    music_provider: Optional[MusicDetector],
    cfg: AudioQualityConfig = AudioQualityConfig(),
) -> Tuple[Dict[str, float], float, str, List[str]]:
    """Returns (subscores, weighted total, category, flags).

    Never raises on odd input: buffers too short for a feature get 0 for
    that sub-score, and a music-provider failure scores music as 1.0 with a
    flag rather than silently punishing the segment.
    """
    flags: List[str] = []
    duration = buffer.duration_s

    try:
        snr = _clamp(
            (estimate_snr_db(buffer, cfg) - cfg.snr_floor_db)
            / (cfg.snr_full_marks_db - cfg.snr_floor_db)
        )
    except ValueError:
        snr = 0.0
        flags.append("too_short_for_snr")

    dr_db = dynamic_range_db(buffer, cfg)
    dynamic_range = _clamp(
        (dr_db - cfg.dynamic_range_floor_db)
        / (cfg.dynamic_range_full_db - cfg.dynamic_range_floor_db)
    )

    try:
        spectral, mfcc_variance = spectral_and_mfcc_scores(buffer, cfg)
    except ValueError:
        spectral, mfcc_variance = 0.0, 0.0
        flags.append("too_short_for_spectral")

    clip = clipping_ratio(buffer)
    if clip <= cfg.clipping_tolerance:
        clipping = 1.0
    else:
        clipping = _clamp(
            (cfg.clipping_zero_at - clip) / (cfg.clipping_zero_at - cfg.clipping_tolerance)
        )

    sil = silence_ratio(buffer, cfg)
    if sil <= cfg.silence_ideal_max_ratio:
        silence = 1.0
    else:
        silence = _clamp(
            (cfg.silence_zero_at - sil) / (cfg.silence_zero_at - cfg.silence_ideal_max_ratio)
        )

    if music_provider is None or duration <= 0.0:
        music = 1.0
        if music_provider is None:
            flags.append("music_provider_missing")
    else:
        try:
            spans = music_provider.detect_music(buffer)
            music_s = sum(s.span.duration_s for s in spans if s.kind == "music")
            music = _clamp(1.0 - music_s / duration)
        except ProviderError:
            music = 1.0
            flags.append("music_provider_failed")

    lo, hi = cfg.ideal_duration_range_s
    duration_score = _band_score(
        duration, (cfg.duration_zero_below_s, lo, hi, cfg.duration_zero_above_s)
    )

    subscores = {
        "snr": snr,
        "dynamic_range": dynamic_range,
        "spectral": spectral,
        "mfcc_variance": mfcc_variance,
        "clipping": clipping,
        "silence": silence,
        "music": music,
        "duration": duration_score,
    }
    total = _clamp(sum(cfg.weights[k] * v for k, v in subscores.items()))
    return subscores, total, audio_category(total), flags

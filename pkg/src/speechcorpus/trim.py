"""Boundary trimming guided by transcription stability.

For each side of a validated segment, find the largest trim (quantized to
0.1 s, at most 3.0 s) whose re-transcription is still stable against the
reference transcript. Search order per side: one probe at the full initial
trim, then binary refinement over the quantized grid, then a linear fine
scan to repair near-boundary non-monotonicity.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

from .audio import slice_buffer
from .model import AudioBuffer, Completeness, Segment, TimeSpan, TrimLog
from .providers import ProviderError, Transcriber

_EPS = 1e-9


@dataclass(frozen=True)
class TrimSearchConfig:
    initial_trim_s: float = 3.0
    fine_step_s: float = 0.1
    stability_threshold: float = 0.05
    max_binary_iterations: int = 8

    def __post_init__(self):
        if self.initial_trim_s <= 0:
            raise ValueError("initial_trim_s must be positive")
        if not 0.0 <= self.stability_threshold < 1.0:
            raise ValueError("stability_threshold must be in [0, 1)")


@dataclass
class TrimResult:
    optimized_span: TimeSpan
    start_trim_s: float
    end_trim_s: float
    asr_calls: int
    final_transcript: str
    flags: list = field(default_factory=list)


def normalize_transcript(text: str) -> list:
    """NFC, casefold, strip punctuation, collapse whitespace; returns words."""
    text = unicodedata.normalize("NFC", text).casefold()
    text = "".join(c for c in text if not unicodedata.category(c).startswith("P"))
    return text.split()


def _word_edit_distance(a: list, b: list) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, wa in enumerate(a, start=1):
        current = [i]
        for j, wb in enumerate(b, start=1):
            cost = 0 if wa == wb else 1
            current.append(min(previous[j] + 1, current[-1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def transcription_stable(a: str, b: str, threshold: float = 0.05) -> bool:
    """True iff the normalized word-level edit distance is within threshold."""
    wa, wb = normalize_transcript(a), normalize_transcript(b)
    longest = max(len(wa), len(wb))
    if longest == 0:
        return True
    return _word_edit_distance(wa, wb) / longest <= threshold + _EPS


class _ProbeCounter:
    """Transcribes trimmed spans and counts ASR calls."""

    def __init__(self, source: AudioBuffer, asr: Transcriber):
        self.source = source
        self.asr = asr
        self.calls = 0

    def transcript(self, span: TimeSpan) -> str:
        self.calls += 1
        return self.asr.transcribe(slice_buffer(self.source, span)).text


def _grid(t: float, step: float) -> float:
    return round(round(t / step) * step, 6)


def optimize_boundary(
    source: AudioBuffer,
    segment: Segment,
    side: str,
    asr: Transcriber,
    cfg: TrimSearchConfig = TrimSearchConfig(),
) -> float:
    """Largest stable trim in seconds for one side. Convenience wrapper."""
    probe = _ProbeCounter(source, asr)
    trim, _flagged = _search_side(probe, segment.span, segment.transcript, side, cfg)
    return trim


def _search_side(probe: _ProbeCounter, span: TimeSpan, reference: str, side: str,
                 cfg: TrimSearchConfig) -> tuple:
    if side not in ("start", "end"):
        raise ValueError(f"side must be 'start' or 'end', got {side}")
    step = cfg.fine_step_s
    # never trim past the far boundary; leave at least one step of audio
    max_trim = min(cfg.initial_trim_s, _grid(span.duration_s - step, step))
    if max_trim < step:
        return 0.0, False

    def trimmed(t: float) -> TimeSpan:
        if side == "start":
            return TimeSpan(round(span.start_s + t, 6), span.end_s)
        return TimeSpan(span.start_s, round(span.end_s - t, 6))

    def stable(t: float) -> bool:
        return transcription_stable(probe.transcript(trimmed(t)), reference,
                                    cfg.stability_threshold)

    try:
        if stable(max_trim):
            return max_trim, False
        lo, hi = 0.0, max_trim  # lo stable by definition (zero trim = reference span)
        for _ in range(cfg.max_binary_iterations):
            if hi - lo <= step + _EPS:
                break
            mid = _grid((lo + hi) / 2.0, step)
            if mid <= lo + _EPS or mid >= hi - _EPS:
                break
            if stable(mid):
                lo = mid
            else:
                hi = mid
        # linear fine scan up to the known-unstable bound
        while lo + step < hi - _EPS:
            t = _grid(lo + step, step)
            if stable(t):
                lo = t
            else:
                break
        return lo, False
    except ProviderError:
        return 0.0, True


def optimize_segment(
    source: AudioBuffer,
    segment: Segment,
    asr: Transcriber,
    cfg: TrimSearchConfig = TrimSearchConfig(),
) -> TrimResult:
    """Trim both sides (start first), then re-transcribe the final span once."""
    if segment.completeness is not Completeness.COMPLETE:
        raise ValueError("only complete segments enter boundary optimization")
    if not segment.transcript:
        raise ValueError("segment has no reference transcript")

    probe = _ProbeCounter(source, asr)
    flags = []
    start_trim, flagged = _search_side(probe, segment.span, segment.transcript, "start", cfg)
    if flagged:
        flags.append("start_side_asr_failure")
    after_start = TimeSpan(round(segment.span.start_s + start_trim, 6), segment.span.end_s)
    end_trim, flagged = _search_side(probe, after_start, segment.transcript, "end", cfg)
    if flagged:
        flags.append("end_side_asr_failure")
    final_span = TimeSpan(after_start.start_s, round(after_start.end_s - end_trim, 6))
    try:
        final_transcript = probe.transcript(final_span)
    except ProviderError:
        flags.append("final_transcription_failure")
        final_transcript = segment.transcript
    return TrimResult(
        optimized_span=final_span,
        start_trim_s=start_trim,
        end_trim_s=end_trim,
        asr_calls=probe.calls,
        final_transcript=final_transcript,
        flags=flags,
    )


def apply_trim(segment: Segment, result: TrimResult) -> Segment:
    """Fold a TrimResult back into the segment record."""
    from dataclasses import replace

    return replace(
        segment,
        span=result.optimized_span,
        transcript=result.final_transcript,
        trim_log=TrimLog(start_s=result.start_trim_s, end_s=result.end_trim_s),
    )

"""Phase 3 validation: extend candidate boundaries until the transcript is a
complete sentence, or reject the candidate.

Extension grows the end boundary in fixed 0.1 s increments up to a 5 s
budget. Start-side extension would re-cut the previous segment, so it is off
by default but available via ``direction="both"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .audio import slice_buffer
from .model import AudioBuffer, Completeness, Segment, TimeSpan
from .providers import CompletenessChecker, ProviderError, Transcriber


@dataclass(frozen=True)
class ExtensionPolicy:
    step_s: float = 0.1
    max_total_extension_s: float = 5.0
    max_segment_s: float = 25.0
    direction: str = "end"  # end | both

    def __post_init__(self):
        if self.step_s <= 0:
            raise ValueError("step_s must be positive")
        if self.max_total_extension_s < self.step_s:
            raise ValueError("max_total_extension_s must be >= step_s")
        if self.direction not in ("end", "both"):
            raise ValueError(f"direction must be 'end' or 'both', got {self.direction}")

    @property
    def max_steps(self) -> int:
        return math.ceil(self.max_total_extension_s / self.step_s - 1e-9)


def _round_ms(x: float) -> float:
    return round(x, 3)


def validate_segment(
    source: AudioBuffer,
    candidate: TimeSpan,
    asr: Transcriber,
    clf: CompletenessChecker,
    policy: ExtensionPolicy = ExtensionPolicy(),
) -> Segment:
    """Return a Segment that is either complete or rejected; never silently drops."""
    duration = source.duration_s
    if candidate.end_s > duration + 1e-9:
        raise ValueError(f"candidate {candidate} exceeds source duration {duration:.3f}")

    transcript = ""
    for step in range(policy.max_steps + 1):
        extension = step * policy.step_s
        end = _round_ms(candidate.end_s + extension)
        start = candidate.start_s
        if policy.direction == "both":
            start = max(0.0, _round_ms(candidate.start_s - extension))
        span = TimeSpan(start, min(end, duration))
        if span.duration_s > policy.max_segment_s + 1e-9:
            return _rejected(source, candidate, span, transcript, "exceeded max segment length")
        try:
            transcript = asr.transcribe(slice_buffer(source, span)).text
        except ProviderError as exc:
            return _rejected(source, candidate, span, transcript, f"ASR failure: {exc}")
        if transcript:
            try:
                verdict = clf.check_completeness(transcript)
            except ProviderError as exc:
                return _rejected(
                    source, candidate, span, transcript, f"completeness failure: {exc}"
                )
            if verdict.is_complete:
                return Segment(
                    source_id=source.source_id or "",
                    span=span,
                    transcript=transcript,
                    completeness=Completeness.COMPLETE,
                )
        if end >= duration and (policy.direction != "both" or start <= 0.0):
            break  # no room left to extend
    reason = "empty transcript after full extension budget" if not transcript else (
        "extension budget exhausted without a complete sentence"
    )
    final_end = min(_round_ms(candidate.end_s + policy.max_total_extension_s), duration)
    final_span = TimeSpan(candidate.start_s, max(final_end, candidate.end_s))
    return _rejected(source, candidate, final_span, transcript, reason)


def _rejected(source, candidate, span, transcript, reason) -> Segment:
    return Segment(
        source_id=source.source_id or "",
        span=span,
        transcript=transcript,
        completeness=Completeness.REJECTED,
        reject_reason=reason,
    )

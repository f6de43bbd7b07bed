"""Core data model: audio buffers, segments, quality reports, and the manifest.

All time values are seconds. Manifest records store times with millisecond
precision (the pipeline's boundary moves are 0.1 s); score values are stored
at full float precision so serialization round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

import numpy as np

MANIFEST_VERSION = 1

# Text quality category boundaries (inclusive-low).
TEXT_HIGH_MIN = 0.7
TEXT_MID_MIN = 0.5
# Audio quality category boundaries ("above 0.9" is strict).
AUDIO_HIGH_MIN = 0.9
AUDIO_ACCEPTABLE_MIN = 0.75

TEXT_SUBSCORE_KEYS = ("character", "length", "repetition", "phonetic_coverage")
AUDIO_SUBSCORE_KEYS = (
    "snr",
    "dynamic_range",
    "spectral",
    "mfcc_variance",
    "clipping",
    "silence",
    "music",
    "duration",
)


class ManifestError(ValueError):
    """Raised when a manifest cannot be serialized or parsed."""


@dataclass(frozen=True)
class AudioBuffer:
    """Decoded mono PCM audio.

    ``offset_s`` records where sample 0 sits inside the source recording so
    sliced buffers keep their provenance; ``source_id`` names that recording.
    """

    samples: np.ndarray  # float64, values in [-1, 1]
    sample_rate_hz: int
    source_id: Optional[str] = None
    offset_s: float = 0.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def end_s(self) -> float:
        """End position within the source recording."""
        return self.offset_s + self.duration_s

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.source_id == other.source_id
            and self.offset_s == other.offset_s
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, order=True)
class TimeSpan:
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0:
            raise ValueError(f"start_s must be >= 0, got {self.start_s}")
        if self.end_s <= self.start_s:
            raise ValueError(f"end_s ({self.end_s}) must exceed start_s ({self.start_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def contains(self, other: "TimeSpan", eps: float = 1e-6) -> bool:
        return other.start_s >= self.start_s - eps and other.end_s <= self.end_s + eps

    def quantized(self, decimals: int = 3) -> "TimeSpan":
        return TimeSpan(round(self.start_s, decimals), round(self.end_s, decimals))


class Completeness(str, Enum):
    UNKNOWN = "unknown"
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    REJECTED = "rejected"


def text_category(total: float) -> str:
    if total >= TEXT_HIGH_MIN:
        return "high"
    if total >= TEXT_MID_MIN:
        return "mid"
    return "low"


def audio_category(total: float) -> str:
    if total > AUDIO_HIGH_MIN:
        return "high"
    if total >= AUDIO_ACCEPTABLE_MIN:
        return "acceptable"
    return "low"


@dataclass(frozen=True)
class QualityReport:
    text_subscores: dict
    text_total: float
    text_category: str
    audio_subscores: dict
    audio_total: float
    audio_category: str

    def validate(self) -> None:
        for name, value in [("text_total", self.text_total), ("audio_total", self.audio_total)]:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {value}")
        for scores, keys in [
            (self.text_subscores, TEXT_SUBSCORE_KEYS),
            (self.audio_subscores, AUDIO_SUBSCORE_KEYS),
        ]:
            for key in keys:
                value = scores[key]
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"subscore {key} out of [0,1]: {value}")
        if self.text_category != text_category(self.text_total):
            raise ValueError("text_category inconsistent with text_total")
        if self.audio_category != audio_category(self.audio_total):
            raise ValueError("audio_category inconsistent with audio_total")


@dataclass(frozen=True)
class SpeakerAssignment:
    local_cluster: int
    confidence: float
    global_id: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")


@dataclass(frozen=True)
class TrimLog:
    start_s: float = 0.0
    end_s: float = 0.0

    def __post_init__(self):
        for side, value in [("start", self.start_s), ("end", self.end_s)]:
            if not 0.0 <= value <= 3.0 + 1e-9:
                raise ValueError(f"{side} trim must be in [0, 3.0] s, got {value}")


@dataclass(frozen=True)
class Segment:
    source_id: str
    span: TimeSpan
    transcript: str = ""
    completeness: Completeness = Completeness.UNKNOWN
    quality: Optional[QualityReport] = None
    speaker: Optional[SpeakerAssignment] = None
    trim_log: TrimLog = field(default_factory=TrimLog)
    audio_file: Optional[str] = None
    reject_reason: Optional[str] = None

    def finalized(self, decimals: int = 3) -> "Segment":
        return replace(self, span=self.span.quantized(decimals))


@dataclass(frozen=True)
class CorpusStats:
    total_hours: float = 0.0
    segment_count: int = 0
    trimmed_hours: float = 0.0
    pct_trimmed_start: float = 0.0
    pct_trimmed_end: float = 0.0
    mean_segment_duration_s: float = 0.0
    unique_words: int = 0
    total_tokens: int = 0
    speaker_count: int = 0


@dataclass(frozen=True)
class CorpusManifest:
    segments: tuple
    stats: CorpusStats
    pipeline_config_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def validate_tts_rules(self, audio_min: float = 0.8, text_min: float = 0.5) -> None:
        """Check the TTS-subset invariants on every listed segment."""
        for seg in self.segments:
            if seg.completeness is not Completeness.COMPLETE:
                raise ValueError(f"segment at {seg.span} is not complete")
            if seg.quality is None:
                raise ValueError(f"segment at {seg.span} has no quality report")
            if seg.quality.text_total < text_min or seg.quality.audio_total < audio_min:
                raise ValueError(f"segment at {seg.span} fails the TTS quality floor")


def tokenize(text: str) -> list:
    """Tokens are maximal non-whitespace runs after NFC normalization."""
    return unicodedata.normalize("NFC", text).split()


def compute_stats(segments: Iterable[Segment]) -> CorpusStats:
    segments = list(segments)
    if not segments:
        return CorpusStats()
    total_s = sum(seg.span.duration_s for seg in segments)
    trimmed_s = sum(seg.trim_log.start_s + seg.trim_log.end_s for seg in segments)
    n = len(segments)
    start_trimmed = sum(1 for seg in segments if seg.trim_log.start_s > 0)
    end_trimmed = sum(1 for seg in segments if seg.trim_log.end_s > 0)
    tokens: list = []
    for seg in segments:
        tokens.extend(tokenize(seg.transcript))
    speakers = {
        seg.speaker.global_id
        for seg in segments
        if seg.speaker is not None and seg.speaker.global_id is not None
    }
    return CorpusStats(
        total_hours=total_s / 3600.0,
        segment_count=n,
        trimmed_hours=trimmed_s / 3600.0,
        pct_trimmed_start=100.0 * start_trimmed / n,
        pct_trimmed_end=100.0 * end_trimmed / n,
        mean_segment_duration_s=total_s / n,
        unique_words=len(set(tokens)),
        total_tokens=len(tokens),
        speaker_count=len(speakers),
    )


# --- manifest serialization -------------------------------------------------
#
# Line-delimited JSON with a canonical key order (sorted) so equal manifests
# serialize to identical bytes. First line is a header record with stats and
# the pipeline config hash; each following line is one segment.


def _canonical(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _segment_to_record(seg: Segment) -> dict:
    record = {
        "source_id": seg.source_id,
        "start_s": seg.span.start_s,
        "end_s": seg.span.end_s,
        "transcript": seg.transcript,
        "completeness": seg.completeness.value,
        "trim_start_s": seg.trim_log.start_s,
        "trim_end_s": seg.trim_log.end_s,
        "audio_file": seg.audio_file,
    }
    if seg.quality is not None:
        record["quality"] = {
            "text_subscores": dict(seg.quality.text_subscores),
            "text_total": seg.quality.text_total,
            "text_category": seg.quality.text_category,
            "audio_subscores": dict(seg.quality.audio_subscores),
            "audio_total": seg.quality.audio_total,
            "audio_category": seg.quality.audio_category,
        }
    if seg.speaker is not None:
        record["speaker"] = {
            "local_cluster": seg.speaker.local_cluster,
            "confidence": seg.speaker.confidence,
            "global_id": seg.speaker.global_id,
        }
    if seg.reject_reason is not None:
        record["reject_reason"] = seg.reject_reason
    return record


def _segment_from_record(record: dict) -> Segment:
    quality = None
    if "quality" in record:
        q = record["quality"]
        quality = QualityReport(
            text_subscores=q["text_subscores"],
            text_total=q["text_total"],
            text_category=q["text_category"],
            audio_subscores=q["audio_subscores"],
            audio_total=q["audio_total"],
            audio_category=q["audio_category"],
        )
    speaker = None
    if "speaker" in record:
        s = record["speaker"]
        speaker = SpeakerAssignment(s["local_cluster"], s["confidence"], s["global_id"])
    return Segment(
        source_id=record["source_id"],
        span=TimeSpan(record["start_s"], record["end_s"]),
        transcript=record["transcript"],
        completeness=Completeness(record["completeness"]),
        quality=quality,
        speaker=speaker,
        trim_log=TrimLog(record["trim_start_s"], record["trim_end_s"]),
        audio_file=record["audio_file"],
        reject_reason=record.get("reject_reason"),
    )


def _stats_to_record(stats: CorpusStats) -> dict:
    return {
        "total_hours": stats.total_hours,
        "segment_count": stats.segment_count,
        "trimmed_hours": stats.trimmed_hours,
        "pct_trimmed_start": stats.pct_trimmed_start,
        "pct_trimmed_end": stats.pct_trimmed_end,
        "mean_segment_duration_s": stats.mean_segment_duration_s,
        "unique_words": stats.unique_words,
        "total_tokens": stats.total_tokens,
        "speaker_count": stats.speaker_count,
    }


def serialize_manifest(manifest: CorpusManifest) -> bytes:
    header = {
        "manifest_version": MANIFEST_VERSION,
        "pipeline_config_hash": manifest.pipeline_config_hash,
        "stats": _stats_to_record(manifest.stats),
    }
    lines = [_canonical(header)]
    for seg in manifest.segments:
        try:
            lines.append(_canonical(_segment_to_record(seg)))
        except (ValueError, UnicodeEncodeError) as exc:
            raise ManifestError(
                f"segment {seg.source_id} [{seg.span.start_s}, {seg.span.end_s}] "
                f"is not encodable: {exc}"
            ) from exc
    text = "\n".join(lines) + "\n"
    try:
        return text.encode("utf-8")
    except UnicodeEncodeError as exc:
        for seg in manifest.segments:
            try:
                _canonical(_segment_to_record(seg)).encode("utf-8")
            except UnicodeEncodeError:
                raise ManifestError(
                    f"segment {seg.source_id} [{seg.span.start_s}, {seg.span.end_s}] "
                    "contains unencodable text"
                ) from exc
        raise ManifestError("manifest contains unencodable text") from exc


def parse_manifest(data: bytes) -> CorpusManifest:
    lines = data.decode("utf-8").splitlines()
    if not lines:
        raise ManifestError("empty manifest")
    header = json.loads(lines[0])
    if header.get("manifest_version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version: {header.get('manifest_version')}")
    stats = CorpusStats(**header["stats"])
    segments = [_segment_from_record(json.loads(line)) for line in lines[1:] if line]
    return CorpusManifest(
        segments=tuple(segments),
        stats=stats,
        pipeline_config_hash=header["pipeline_config_hash"],
    )


def manifest_digest(manifest: CorpusManifest) -> str:
    return hashlib.sha256(serialize_manifest(manifest)).hexdigest()

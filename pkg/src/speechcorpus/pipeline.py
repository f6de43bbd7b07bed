"""End-to-end orchestration: ingest -> segment -> validate -> trim -> score ->
speaker-label -> finalize, with per-recording checkpoints so interrupted runs
resume without re-invoking providers for completed stages.

Determinism contract: with the same inputs, config, and seed, two runs (or a
resumed run) produce byte-identical manifests. Manifest assembly sorts by
(recording id, span start); all provider mocks are seeded.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import audio as audio_io
from .audio import WORKING_RATE_HZ
from .audioquality import score_audio
from .config import PipelineConfig
from .model import (
    AudioBuffer,
    Completeness,
    CorpusManifest,
    CorpusStats,
    QualityReport,
    Segment,
    SpeakerAssignment,
    TimeSpan,
    compute_stats,
    serialize_manifest,
    _segment_from_record,
    _segment_to_record,
)
from .providers import MIN_EMBED_AUDIO_S, ProviderError, ProviderSet
from .providers.mock import (
    MockCompletenessChecker,
    MockMusicDetector,
    MockPunctuationRestorer,
    MockSpeakerEmbedder,
    MockTranscriber,
    ScriptedWord,
)
from .speakers import (
    LocalClusterResult,
    LocalClusterSummary,
    cluster_local,
    consistency_report,
    estimate_k,
    merge_global,
    preprocess_embeddings,
    summarize_local_clusters,
)
from .textquality import score_text
from .trim import apply_trim, optimize_segment
from .validate import validate_segment

log = logging.getLogger(__name__)

STAGES = ("segmented", "validated", "optimized", "scored", "labeled")


class PipelineError(RuntimeError):
    pass


class AllRecordingsFailed(PipelineError):
    pass


@dataclass
class RecordingState:
    """Everything accumulated for one recording; checkpointable as JSON."""

    source_id: str
    path: Path
    stage: Optional[str] = None
    candidates: List[TimeSpan] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)  # validated-or-rejected, in order
    embeddings: List[Optional[list]] = field(default_factory=list)  # parallel to complete segs
    local: Optional[LocalClusterResult] = None
    summaries: List[LocalClusterSummary] = field(default_factory=list)
    narrators: List[str] = field(default_factory=list)

    def complete_segments(self) -> List[Segment]:
        return [s for s in self.segments if s.completeness is Completeness.COMPLETE]


@dataclass
class PipelineResult:
    manifest: CorpusManifest
    tts_manifest: CorpusManifest
    stats_before: CorpusStats
    stats_after: CorpusStats
    consistency_pct: Optional[float]
    failed_recordings: List[str]
    manifest_path: Path
    tts_manifest_path: Path


# --- input discovery ---------------------------------------------------------


def discover_recordings(input_dir: Path) -> List[Tuple[str, Path, dict]]:
    """(source_id, wav path, metadata) per recording, sorted by id.

    Metadata comes from an optional sidecar ``<name>.json`` with keys like
    title, narrators, and (for mock providers) a word script.
    """
    recordings = []
    for wav in sorted(input_dir.glob("*.wav")):
        meta = {}
        sidecar = wav.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
        recordings.append((wav.stem, wav, meta))
    return recordings


def build_mock_providers(recordings: List[Tuple[str, Path, dict]]) -> ProviderSet:
    """Deterministic providers driven by the sidecar metadata scripts."""
    scripts: Dict[str, list] = {}
    speaker_of: Dict[str, str] = {}
    final_words = set()
    for source_id, _path, meta in recordings:
        mock = meta.get("mock", {})
        scripts[source_id] = [ScriptedWord(w[0], w[1], w[2]) for w in mock.get("words", [])]
        speaker_of[source_id] = str(mock.get("speaker", source_id))
        final_words.update(mock.get("final_words", []))
    return ProviderSet(
        transcriber=MockTranscriber(scripts),
        completeness=MockCompletenessChecker(final_words=final_words),
        embedder=MockSpeakerEmbedder(speaker_of=lambda sid: speaker_of.get(sid, sid)),
        music=MockMusicDetector(),
        punctuation=MockPunctuationRestorer(),
    )


def build_remote_providers(endpoint: str) -> ProviderSet:
    from .providers.remote import RemoteProviderClient

    return RemoteProviderClient(endpoint).as_provider_set()


# --- per-recording stages ----------------------------------------------------


def _stage_index(stage: Optional[str]) -> int:
    return STAGES.index(stage) + 1 if stage else 0


def process_recording(
    state: RecordingState, cfg: PipelineConfig, providers: ProviderSet,
    checkpoint_dir: Optional[Path] = None,
) -> RecordingState:
    original = audio_io.decode_wav(state.path)
    working = audio_io.resample(original, WORKING_RATE_HZ)
    done = _stage_index(state.stage)

    if done < 1:
        from .vad import detect_candidates

        state.candidates = detect_candidates(working, cfg.vad)
        _checkpoint(state, "segmented", cfg, checkpoint_dir)

    if done < 2:
        state.segments = _validate_candidates(working, state.candidates, cfg, providers)
        _checkpoint(state, "validated", cfg, checkpoint_dir)

    if done < 3:
        state.segments = [
            _optimize_one(working, seg, cfg, providers) for seg in state.segments
        ]
        _checkpoint(state, "optimized", cfg, checkpoint_dir)

    if done < 4:
        state.segments = [_score_one(working, seg, cfg, providers) for seg in state.segments]
        _checkpoint(state, "scored", cfg, checkpoint_dir)

    if done < 5:
        _label_speakers(state, working, cfg, providers)
        _checkpoint(state, "labeled", cfg, checkpoint_dir)
    return state


def _validate_candidates(working, candidates, cfg, providers) -> List[Segment]:
    segments: List[Segment] = []
    cursor = 0.0
    for cand in candidates:
        # a previous validated segment may have extended over this candidate
        start = max(cand.start_s, cursor)
        if start >= cand.end_s - 1e-9:
            continue  # fully consumed by the previous extension
        seg = validate_segment(
            working, TimeSpan(start, cand.end_s), providers.transcriber,
            providers.completeness, cfg.validation,
        )
        segments.append(seg)
        if seg.completeness is Completeness.COMPLETE:
            cursor = seg.span.end_s
    return segments


def _optimize_one(working, seg: Segment, cfg, providers) -> Segment:
    if seg.completeness is not Completeness.COMPLETE or not seg.transcript:
        return seg
    result = optimize_segment(working, seg, providers.transcriber, cfg.trim)
    return apply_trim(seg, result)


def _score_one(working, seg: Segment, cfg, providers) -> Segment:
    if seg.completeness is not Completeness.COMPLETE:
        return seg
    text_subs, text_total, text_cat = score_text(seg.transcript, cfg.text_quality)
    clip = audio_io.slice_buffer(working, seg.span)
    audio_subs, audio_total, audio_cat, _flags = score_audio(
        clip, providers.music, cfg.audio_quality
    )
    quality = QualityReport(
        text_subscores=text_subs,
        text_total=text_total,
        text_category=text_cat,
        audio_subscores=audio_subs,
        audio_total=audio_total,
        audio_category=audio_cat,
    )
    return replace(seg, quality=quality)


def _label_speakers(state: RecordingState, working, cfg, providers) -> None:
    complete = state.complete_segments()
    state.embeddings = []
    for seg in complete:
        if seg.span.duration_s < MIN_EMBED_AUDIO_S:
            state.embeddings.append(None)
            continue
        try:
            emb = providers.embedder.embed_speaker(audio_io.slice_buffer(working, seg.span))
            state.embeddings.append([float(x) for x in emb.vector])
        except ProviderError as exc:
            log.warning("%s: embedding failed: %s", state.source_id, exc)
            state.embeddings.append(None)
    _cluster_recording(state, cfg)


def _cluster_recording(state: RecordingState, cfg: PipelineConfig) -> None:
    """Local diarization over the recording's usable embeddings."""
    from .providers import Embedding

    usable = [(i, v) for i, v in enumerate(state.embeddings) if v is not None]
    if len(usable) < 2:
        state.local = None
        state.summaries = []
        return
    embeddings = [Embedding(vector=np.asarray(v)) for _, v in usable]
    pre = preprocess_embeddings(embeddings, cfg.speakers)
    points = np.stack([e.vector for e in pre.embeddings])
    n = len(points)
    k_max = min(cfg.speakers.k_max, n // 5)
    if k_max < 2:
        k_star = 1
    else:
        k_star = estimate_k(points, (2, k_max), cfg.speakers)
    result = cluster_local(points, k_star, cfg.speakers)
    state.local = result
    state.summaries = summarize_local_clusters(state.source_id, points, result)

    # map clustered points back to segment order
    complete = state.complete_segments()
    assignment_by_segment: Dict[int, SpeakerAssignment] = {}
    for point_idx, kept_idx in enumerate(pre.kept_indices):
        seg_idx = usable[kept_idx][0]
        assignment_by_segment[seg_idx] = SpeakerAssignment(
            local_cluster=int(result.assignments[point_idx]),
            confidence=float(result.confidences[point_idx]),
        )
    labeled = []
    complete_i = 0
    for seg in state.segments:
        if seg.completeness is Completeness.COMPLETE:
            speaker = assignment_by_segment.get(complete_i)
            labeled.append(replace(seg, speaker=speaker) if speaker else seg)
            complete_i += 1
        else:
            labeled.append(seg)
    state.segments = labeled


# --- checkpointing -----------------------------------------------------------


def _checkpoint(state: RecordingState, stage: str, cfg: PipelineConfig,
                checkpoint_dir: Optional[Path]) -> None:
    state.stage = stage
    if checkpoint_dir is None:
        return
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "config_hash": cfg.config_hash(),
        "source_id": state.source_id,
        "stage": stage,
        "candidates": [[c.start_s, c.end_s] for c in state.candidates],
        "segments": [_segment_to_record(s) for s in state.segments],
        "embeddings": state.embeddings,
        "local": None,
        "summaries": [
            {
                "recording_id": s.recording_id,
                "local_cluster": s.local_cluster,
                "centroid": [float(x) for x in s.centroid],
                "weight": s.weight,
            }
            for s in state.summaries
        ],
    }
    if state.local is not None:
        record["local"] = {
            "assignments": state.local.assignments.tolist(),
            "confidences": state.local.confidences.tolist(),
            "k_star": state.local.k_star,
            "method": state.local.method,
            "silhouette": state.local.silhouette,
            "unassigned": state.local.unassigned.tolist(),
        }
    path = checkpoint_dir / f"{state.source_id}.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(record, ensure_ascii=False))
    tmp.replace(path)


def load_checkpoint(state: RecordingState, cfg: PipelineConfig,
                    checkpoint_dir: Path) -> RecordingState:
    path = checkpoint_dir / f"{state.source_id}.json"
    if not path.exists():
        return state
    record = json.loads(path.read_text())
    if record.get("config_hash") != cfg.config_hash():
        log.warning("%s: checkpoint config hash mismatch; ignoring", state.source_id)
        return state
    state.stage = record["stage"]
    state.candidates = [TimeSpan(a, b) for a, b in record["candidates"]]
    state.segments = [_segment_from_record(r) for r in record["segments"]]
    state.embeddings = record["embeddings"]
    if record.get("local") is not None:
        l = record["local"]
        state.local = LocalClusterResult(
            assignments=np.asarray(l["assignments"], dtype=int),
            confidences=np.asarray(l["confidences"]),
            k_star=l["k_star"],
            method=l["method"],
            silhouette=l["silhouette"],
            unassigned=np.asarray(l["unassigned"], dtype=bool),
        )
    state.summaries = [
        LocalClusterSummary(
            recording_id=s["recording_id"],
            local_cluster=s["local_cluster"],
            centroid=np.asarray(s["centroid"]),
            weight=s["weight"],
        )
        for s in record["summaries"]
    ]
    return state


# --- corpus-level assembly -----------------------------------------------------


def run(config: PipelineConfig, providers: Optional[ProviderSet] = None,
        resume: bool = False) -> PipelineResult:
    recordings = discover_recordings(config.input_dir)
    if not recordings:
        raise PipelineError(f"no decodable recordings found in {config.input_dir}")
    if providers is None:
        if config.providers == "mock":
            providers = build_mock_providers(recordings)
        else:
            providers = build_remote_providers(config.endpoint())

    checkpoint_dir = config.output_dir / "checkpoints"
    states = []
    for source_id, path, meta in recordings:
        state = RecordingState(
            source_id=source_id, path=path,
            narrators=[str(n) for n in meta.get("narrators", [])],
        )
        if resume and checkpoint_dir.exists():
            state = load_checkpoint(state, config, checkpoint_dir)
        states.append(state)

    failed: List[str] = []

    def _process(state: RecordingState) -> Optional[RecordingState]:
        try:
            return process_recording(state, config, providers, checkpoint_dir)
        except Exception as exc:  # noqa: BLE001 - one bad file never aborts the run
            log.exception("recording %s failed: %s", state.source_id, exc)
            return None

    if config.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
            processed = list(pool.map(_process, states))
    else:
        processed = [_process(s) for s in states]

    done_states = []
    for state, result in zip(states, processed):
        if result is None:
            failed.append(state.source_id)
        else:
            done_states.append(result)
    if not done_states:
        raise AllRecordingsFailed(f"all {len(states)} recordings failed")

    # global speaker identities over all local clusters
    all_summaries = [s for state in done_states for s in state.summaries]
    gid_by_local: Dict[Tuple[str, int], int] = {}
    if all_summaries:
        for speaker in merge_global(all_summaries, config.speakers.merge_threshold):
            for rec, local, _w in speaker.member_local_clusters:
                gid_by_local[(rec, local)] = speaker.global_id

    segments: List[Segment] = []
    assignments_by_rec: Dict[str, List[Optional[int]]] = {}
    for state in sorted(done_states, key=lambda s: s.source_id):
        rec_gids: List[Optional[int]] = []
        for seg in state.complete_segments():
            if seg.speaker is not None and not _below_floor(seg, config):
                gid = gid_by_local.get((state.source_id, seg.speaker.local_cluster))
                seg = replace(seg, speaker=replace(seg.speaker, global_id=gid))
            rec_gids.append(seg.speaker.global_id if seg.speaker else None)
            segments.append(seg)
        assignments_by_rec[state.source_id] = rec_gids

    narrator_labels = {
        s.source_id: s.narrators for s in done_states if s.narrators
    }
    consistency = consistency_report(assignments_by_rec, narrator_labels) if narrator_labels else None

    return _finalize(config, providers, segments, consistency, failed)


def _below_floor(seg: Segment, config: PipelineConfig) -> bool:
    return seg.speaker.confidence < config.speakers.confidence_floor


def _finalize(config, providers, segments, consistency, failed) -> PipelineResult:
    out = config.output_dir
    segments_dir = out / "segments"
    segments_dir.mkdir(parents=True, exist_ok=True)

    finalized: List[Segment] = []
    originals: Dict[str, AudioBuffer] = {}
    for seg in sorted(segments, key=lambda s: (s.source_id, s.span.start_s)):
        seg = seg.finalized()
        name = f"{seg.source_id}_{int(round(seg.span.start_s * 1000)):09d}.wav"
        seg = replace(seg, audio_file=f"segments/{name}")
        if seg.source_id not in originals:
            originals[seg.source_id] = audio_io.decode_wav(config.input_dir / f"{seg.source_id}.wav")
        cut = audio_io.slice_buffer(originals[seg.source_id], seg.span)
        audio_io.encode_wav(segments_dir / name, audio_io.resample(cut, config.output_sample_rate_hz))
        finalized.append(seg)

    tts_segments = []
    for seg in finalized:
        if seg.quality is None:
            continue
        if (seg.quality.audio_total >= config.tts_filter.audio_min
                and seg.quality.text_total >= config.tts_filter.text_min):
            restored = providers.punctuation.restore_punctuation(seg.transcript)
            restored = unicodedata.normalize("NFC", restored)
            tts_segments.append(replace(seg, transcript=restored))

    config_hash = config.config_hash()
    stats_before = compute_stats(finalized)
    stats_after = compute_stats(tts_segments)
    manifest = CorpusManifest(finalized, stats_before, config_hash)
    tts_manifest = CorpusManifest(tts_segments, stats_after, config_hash)
    tts_manifest.validate_tts_rules(config.tts_filter.audio_min, config.tts_filter.text_min)

    manifest_path = out / "manifest.jsonl"
    tts_path = out / "manifest.tts.jsonl"
    manifest_path.write_bytes(serialize_manifest(manifest))
    tts_path.write_bytes(serialize_manifest(tts_manifest))
    (out / "stats.json").write_text(
        json.dumps(report_dict(stats_before, stats_after, consistency, failed),
                   ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    )
    (out / "report.txt").write_text(
        render_report(stats_before, stats_after, consistency, failed)
    )
    return PipelineResult(
        manifest=manifest,
        tts_manifest=tts_manifest,
        stats_before=stats_before,
        stats_after=stats_after,
        consistency_pct=consistency,
        failed_recordings=failed,
        manifest_path=manifest_path,
        tts_manifest_path=tts_path,
    )


# --- reporting ----------------------------------------------------------------


def report_dict(before: CorpusStats, after: CorpusStats,
                consistency: Optional[float], failed: List[str]) -> dict:
    return {
        "before_filtering": {"total_hours": before.total_hours,
                             "segments": before.segment_count},
        "after_tts_filtering": {"total_hours": after.total_hours,
                                "segments": after.segment_count},
        "pct_trimmed_start": before.pct_trimmed_start,
        "pct_trimmed_end": before.pct_trimmed_end,
        "trimmed_hours": before.trimmed_hours,
        "mean_segment_duration_s": before.mean_segment_duration_s,
        "unique_words": before.unique_words,
        "total_tokens": before.total_tokens,
        "speaker_count": before.speaker_count,
        "narrator_consistency_pct": consistency,
        "failed_recordings": sorted(failed),
    }


def render_report(before: CorpusStats, after: CorpusStats,
                  consistency: Optional[float], failed: List[str]) -> str:
    lines = [
        "Corpus statistics",
        "=================",
        f"{'Metric':<28}{'Before Filtering':>18}{'After TTS Filtering':>22}",
        f"{'Total Hours':<28}{before.total_hours:>18.4f}{after.total_hours:>22.4f}",
        f"{'Segments':<28}{before.segment_count:>18d}{after.segment_count:>22d}",
        "",
        f"Trimmed at start: {before.pct_trimmed_start:.1f}% of segments",
        f"Trimmed at end:   {before.pct_trimmed_end:.1f}% of segments",
        f"Hours trimmed:    {before.trimmed_hours:.4f}",
        f"Mean segment duration: {before.mean_segment_duration_s:.2f} s",
        f"Unique words: {before.unique_words}  Total tokens: {before.total_tokens}",
        f"Speakers: {before.speaker_count}",
        "Narrator consistency: "
        + (f"{consistency:.1f}%" if consistency is not None else "n/a"),
    ]
    if failed:
        lines.append(f"Failed recordings: {', '.join(sorted(failed))}")
    return "\n".join(lines) + "\n"

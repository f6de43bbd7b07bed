"""Shared synthetic-audio fixtures and mock-script builders."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from speechcorpus.audio import encode_wav
from speechcorpus.model import AudioBuffer
from speechcorpus.providers.mock import ScriptedWord

SR = 16_000


def tone(freq_hz: float, duration_s: float, amplitude: float = 0.5,
         sample_rate: int = SR, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(sample_rate * duration_s))) / sample_rate
    return amplitude * np.sin(2 * math.pi * freq_hz * t + phase)


def silence(duration_s: float, sample_rate: int = SR) -> np.ndarray:
    return np.zeros(int(round(sample_rate * duration_s)))


def shaped_noise(n: int, rng: np.random.Generator, centroid_hz: float,
                 sample_rate: int = SR) -> np.ndarray:
    """Low-passed noise with all spectral bins populated (flatness well above
    the music mock's threshold) and a centroid near centroid_hz."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1 / sample_rate)
    out = np.fft.irfft(spec / (1.0 + (f / centroid_hz) ** 2), n)
    return out / np.max(np.abs(out))


def pseudo_speech(duration_s: float = 6.0, seed: int = 0,
                  sample_rate: int = SR) -> AudioBuffer:
    """Clean speech-like fixture: AM-modulated shaped noise with a moving
    spectral tilt and short digital-silence gaps. Scores high on every
    audio-quality sub-metric."""
    rng = np.random.default_rng(seed)
    n = int(sample_rate * duration_s)
    t = np.arange(n) / sample_rate
    a = shaped_noise(n, rng, 900.0, sample_rate)
    b = shaped_noise(n, rng, 2200.0, sample_rate)
    mix = 0.5 + 0.5 * np.sin(2 * math.pi * 1.7 * t)
    env = 0.55 + 0.45 * np.sin(2 * math.pi * 3.7 * t + 1.0)
    x = 0.6 * (a * mix + b * (1 - mix)) * env
    for start, end in ((0.0, 0.25), (duration_s * 0.48, duration_s * 0.48 + 0.35),
                       (duration_s - 0.25, duration_s)):
        x[int(start * sample_rate): int(end * sample_rate)] = 0.0
    return AudioBuffer(samples=np.clip(x, -1, 1), sample_rate_hz=sample_rate)


def speech_with_silence(speech_span: tuple, total_s: float, seed: int = 0,
                        source_id: str | None = None) -> AudioBuffer:
    """Shaped noise inside speech_span, digital silence elsewhere."""
    rng = np.random.default_rng(seed)
    n = int(SR * total_s)
    x = np.zeros(n)
    lo, hi = int(speech_span[0] * SR), int(speech_span[1] * SR)
    x[lo:hi] = 0.5 * shaped_noise(hi - lo, rng, 1500.0)
    return AudioBuffer(samples=x, sample_rate_hz=SR, source_id=source_id)


def words_for_sentence(text: str, start_s: float, end_s: float,
                       terminal: str = ".") -> list[ScriptedWord]:
    """Spread the words of a sentence evenly over [start_s, end_s]; the last
    word carries the terminal mark so the completeness mock accepts it."""
    parts = text.split()
    parts[-1] += terminal
    n = len(parts)
    step = (end_s - start_s) / n
    return [
        ScriptedWord(w, round(start_s + i * step, 3), round(start_s + (i + 1) * step, 3))
        for i, w in enumerate(parts)
    ]


def damage_clipping(buf: AudioBuffer, rng: np.random.Generator) -> AudioBuffer:
    """Hard-clip a 1-2 s window by over-amplifying it."""
    x = buf.samples.copy()
    width = int(buf.sample_rate_hz * rng.uniform(1.0, 2.0))
    lo = int(rng.integers(0, len(x) - width))
    x[lo: lo + width] = np.clip(x[lo: lo + width] * 20.0, -1.0, 1.0)
    return AudioBuffer(samples=x, sample_rate_hz=buf.sample_rate_hz)


def damage_silence(buf: AudioBuffer, rng: np.random.Generator) -> AudioBuffer:
    """Zero out a 2-3 s window."""
    x = buf.samples.copy()
    width = int(buf.sample_rate_hz * rng.uniform(2.0, 3.0))
    lo = int(rng.integers(0, len(x) - width))
    x[lo: lo + width] = 0.0
    return AudioBuffer(samples=x, sample_rate_hz=buf.sample_rate_hz)


def damage_music(buf: AudioBuffer, rng: np.random.Generator) -> AudioBuffer:
    """Replace a 2-3 s window with a sustained chord."""
    x = buf.samples.copy()
    width = int(buf.sample_rate_hz * rng.uniform(2.0, 3.0))
    lo = int(rng.integers(0, len(x) - width))
    t = np.arange(width) / buf.sample_rate_hz
    root = rng.uniform(300.0, 600.0)
    chord = sum(a * np.sin(2 * math.pi * f * root * t)
                for a, f in ((0.3, 1.0), (0.24, 1.5), (0.18, 2.0)))
    x[lo: lo + width] = chord
    return AudioBuffer(samples=x, sample_rate_hz=buf.sample_rate_hz)


DAMAGE_OPERATORS = {
    "clipping": damage_clipping,
    "silence": damage_silence,
    "music": damage_music,
}


def make_trim_fixture(rng, min_side_trim_s: float = 0.0):
    """A validated segment whose speech occupies a random interior window.

    Returns (source, segment, make_asr) where make_asr() builds a fresh
    scripted transcriber for the fixture. min_side_trim_s forces at least
    that much trimmable silence on each side.
    """
    from speechcorpus.model import Completeness, Segment, TimeSpan
    from speechcorpus.providers.mock import MockTranscriber, ScriptedWord

    duration = float(rng.uniform(8.0, 16.0))
    s0 = round(float(rng.uniform(0.0, 2.0)), 3)
    span = TimeSpan(s0, round(s0 + duration, 3))
    lead = float(rng.uniform(min_side_trim_s, 3.5))
    trail = float(rng.uniform(min_side_trim_s, 3.5))
    w0, w1 = s0 + lead, s0 + duration - trail
    n_words = int(rng.integers(6, 11))
    step = (w1 - w0) / n_words
    words = [
        ScriptedWord(f"کلمه{i}" + ("." if i == n_words - 1 else ""),
                     round(w0 + i * step, 4),
                     round(w0 + (i + 1) * step - 0.02, 4))
        for i in range(n_words)
    ]
    source = AudioBuffer(samples=np.zeros(int(SR * (span.end_s + 1.0))),
                         sample_rate_hz=SR, source_id="fixture")
    make_asr = lambda: MockTranscriber(words)  # noqa: E731
    reference = make_asr().transcribe(
        AudioBuffer(samples=np.zeros(int(SR * duration)), sample_rate_hz=SR,
                    source_id="fixture", offset_s=s0)
    ).text
    segment = Segment(source_id="fixture", span=span, transcript=reference,
                      completeness=Completeness.COMPLETE)
    return source, segment, make_asr


def linear_scan_oracle(source, span, reference, side, asr, cfg=None):
    """Exhaustive 0.1 s linear scan: probe increasing trims until the first
    unstable one; returns (largest stable trim, probe count)."""
    from speechcorpus.audio import slice_buffer
    from speechcorpus.model import TimeSpan
    from speechcorpus.trim import TrimSearchConfig, transcription_stable

    cfg = cfg or TrimSearchConfig()
    step = cfg.fine_step_s
    max_trim = min(cfg.initial_trim_s, span.duration_s - step)
    best, calls, k = 0.0, 0, 1
    while k * step <= max_trim + 1e-9:
        t = round(k * step, 6)
        if side == "start":
            trimmed = TimeSpan(round(span.start_s + t, 6), span.end_s)
        else:
            trimmed = TimeSpan(span.start_s, round(span.end_s - t, 6))
        calls += 1
        text = asr.transcribe(slice_buffer(source, trimmed)).text
        if not transcription_stable(text, reference, cfg.stability_threshold):
            break
        best = t
        k += 1
    return best, calls


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def speech_chunk(duration_s: float, seed: int = 0) -> np.ndarray:
    """Like pseudo_speech but with interior gaps short enough (0.25 s) that
    the VAD keeps the chunk as one candidate."""
    rng = np.random.default_rng(seed)
    n = int(SR * duration_s)
    t = np.arange(n) / SR
    a = shaped_noise(n, rng, 900.0)
    b = shaped_noise(n, rng, 2200.0)
    mix = 0.5 + 0.5 * np.sin(2 * math.pi * 1.7 * t)
    env = 0.55 + 0.45 * np.sin(2 * math.pi * 3.7 * t + 1.0)
    x = 0.6 * (a * mix + b * (1 - mix)) * env
    for frac in (0.3, 0.65):
        lo = int(frac * duration_s * SR)
        x[lo: lo + int(0.25 * SR)] = 0.0
    return np.clip(x, -1, 1)


def build_book(sentences, seed: int = 0, gap_s: float = 0.8,
               chunk_s: float = 4.5):
    """One narrated recording: speech chunks separated by silence, with the
    word script aligned to each chunk. Returns (AudioBuffer, words)."""
    parts = [silence(1.0)]
    words = []
    cursor = 1.0
    for i, sentence in enumerate(sentences):
        parts.append(speech_chunk(chunk_s, seed=seed * 100 + i))
        words += words_for_sentence(sentence, cursor + 0.05, cursor + chunk_s - 0.05,
                                    terminal="")
        cursor += chunk_s
        parts.append(silence(gap_s))
        cursor += gap_s
    buf = AudioBuffer(samples=np.concatenate(parts), sample_rate_hz=SR)
    return buf, words


# Persian sample sentences used across text-quality and pipeline tests.
PERSIAN_SENTENCES = [
    "امروز هوا بسیار خوب و دلپذیر است.",
    "کتاب را روی میز کنار پنجره گذاشتم.",
    "صدای پرندگان از باغ شنیده می‌شود.",
    "او با دقت تمام داستان را خواند.",
]


def three_book_corpus():
    """The standard mock mini-corpus: two narrators, one low-diversity
    sentence (fails the TTS text filter), one unscripted chunk (rejected
    at validation)."""
    books = {}
    buf1, words1 = build_book(PERSIAN_SENTENCES[:3], seed=1)
    books["book1"] = {"buffer": buf1, "words": words1,
                      "speaker": "narrator_ali", "narrators": ["Ali"]}

    # book2: last chunk transcribes as repetitive foreign-script noise —
    # text quality falls below the TTS floor while the audio stays clean
    sentences2 = [PERSIAN_SENTENCES[3], "noise noise noise noise noise noise."]
    buf2, words2 = build_book(sentences2, seed=2)
    books["book2"] = {"buffer": buf2, "words": words2,
                      "speaker": "narrator_sara", "narrators": ["Sara"]}

    # book3: same narrator as book1; its middle chunk has no script, so
    # validation rejects it (empty transcript)
    buf3, words3 = build_book([PERSIAN_SENTENCES[0], PERSIAN_SENTENCES[1],
                               PERSIAN_SENTENCES[2]], seed=3)
    words3 = [w for w in words3 if not (6.0 < w.start_s < 10.9)]
    books["book3"] = {"buffer": buf3, "words": words3,
                      "speaker": "narrator_ali", "narrators": ["Ali"]}
    return books


def write_mini_corpus(root: Path, books: dict) -> None:
    """Write WAVs plus sidecar metadata for the mock providers.

    ``books`` maps source_id to a dict with keys: buffer (AudioBuffer),
    words (list of ScriptedWord), speaker, narrators (optional list).
    """
    root.mkdir(parents=True, exist_ok=True)
    for source_id, book in books.items():
        encode_wav(root / f"{source_id}.wav", book["buffer"])
        meta = {
            "title": source_id,
            "mock": {
                "speaker": book.get("speaker", source_id),
                "words": [[w.text, w.start_s, w.end_s] for w in book.get("words", [])],
            },
        }
        if "narrators" in book:
            meta["narrators"] = book["narrators"]
        (root / f"{source_id}.json").write_text(json.dumps(meta, ensure_ascii=False))

"""Transcript quality scoring for Persian text.

Four sub-scores (character quality, length, repetition, phonetic coverage)
combine into a weighted total. Category boundaries are inclusive-low: high
is total >= 0.7, mid is 0.5 <= total < 0.7, low is below 0.5.

All formulas here are configurable; the defaults below are this project's
calibration. Short vowels are unwritten in Persian, so the "vowel letters"
used by the coverage metric are the long-vowel carriers plus final heh.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Dict, Tuple

from .model import text_category

# 32-letter Persian alphabet used for phonetic coverage; alef madda (آ)
# counts as alef.
PERSIAN_ALPHABET = tuple("ابپتثجچحخدذرزژسشصضطظعغفقکگلمنوهی")

VOWEL_LETTERS = frozenset("اویه")
CONSONANT_LETTERS = frozenset(PERSIAN_ALPHABET) - VOWEL_LETTERS

PERSIAN_DIGITS = frozenset("۰۱۲۳۴۵۶۷۸۹٠١٢٣٤٥٦٧٨٩")
STANDARD_PUNCTUATION = frozenset(".,;:!?\"'()[]{}-–—«»،؛؟…٪%‌")

# Arabic-script code point ranges (covers Persian letters and marks).
_ARABIC_RANGES = ((0x0600, 0x06FF), (0x0750, 0x077F), (0xFB50, 0xFDFF), (0xFE70, 0xFEFF))


def _is_arabic_script(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _ARABIC_RANGES)


@dataclass(frozen=True)
class TextQualityConfig:
    weights: Dict[str, float] = field(
        default_factory=lambda: {
            "character": 0.35,
            "length": 0.25,
            "repetition": 0.20,
            "phonetic_coverage": 0.20,
        }
    )
    ideal_word_range: Tuple[int, int] = (4, 25)
    ideal_char_range: Tuple[int, int] = (15, 180)
    coverage_full_fraction: float = 0.5  # this much of the inventory scores 1.0
    short_text_words: int = 3  # repetition is unreliable below this

    def __post_init__(self):
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1.0, got {total}")


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def character_quality(text: str) -> float:
    """Valid-character ratio with a penalty for foreign-script letters."""
    text = unicodedata.normalize("NFC", text)
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return 0.0
    valid = 0
    foreign = 0
    for c in chars:
        if _is_arabic_script(c) or c in PERSIAN_DIGITS or c in STANDARD_PUNCTUATION:
            valid += 1
        elif unicodedata.category(c).startswith("L"):
            foreign += 1
    valid_ratio = valid / len(chars)
    foreign_ratio = foreign / len(chars)
    return _clamp(valid_ratio * max(0.0, 1.0 - 2.0 * foreign_ratio))


def _range_score(n: float, lo: float, hi: float) -> float:
    """1.0 inside [lo, hi]; linear decay to 0 at 0.25*lo below and 3*hi above."""
    if lo <= n <= hi:
        return 1.0
    if n < lo:
        floor = 0.25 * lo
        if n <= floor:
            return 0.0
        return (n - floor) / (lo - floor)
    ceiling = 3.0 * hi
    if n >= ceiling:
        return 0.0
    return (ceiling - n) / (ceiling - hi)


def length_quality(text: str, cfg: TextQualityConfig = TextQualityConfig()) -> float:
    words = unicodedata.normalize("NFC", text).split()
    n_words = len(words)
    n_chars = len(unicodedata.normalize("NFC", text))
    word_score = _range_score(n_words, *cfg.ideal_word_range)
    char_score = _range_score(n_chars, *cfg.ideal_char_range)
    return _clamp(min(word_score, char_score))


def repetition_score(text: str, cfg: TextQualityConfig = TextQualityConfig()) -> float:
    words = unicodedata.normalize("NFC", text).split()
    if len(words) <= cfg.short_text_words:
        return 1.0
    total = len(words)
    counts: Dict[str, int] = {}
    for w in words:
        counts[w] = counts.get(w, 0) + 1
    ttr = len(counts) / total
    dominance_cap = 1.0 - max(0.0, max(counts.values()) / total - 0.3)
    return _clamp(min(ttr, dominance_cap))


def phonetic_coverage(text: str, cfg: TextQualityConfig = TextQualityConfig()) -> float:
    normalized = unicodedata.normalize("NFC", text).replace("آ", "ا")
    letters = set(normalized) & set(PERSIAN_ALPHABET)
    if not letters:
        return 0.0
    coverage = len(letters) / len(PERSIAN_ALPHABET)
    score = min(1.0, coverage / cfg.coverage_full_fraction)
    if not (letters & VOWEL_LETTERS and letters & CONSONANT_LETTERS):
        score /= 2.0
    return _clamp(score)


def score_text(
    text: str, cfg: TextQualityConfig = TextQualityConfig()
) -> Tuple[Dict[str, float], float, str]:
    """Returns (subscores, weighted total, category)."""
    subscores = {
        "character": character_quality(text),
        "length": length_quality(text, cfg),
        "repetition": repetition_score(text, cfg),
        "phonetic_coverage": phonetic_coverage(text, cfg),
    }
    total = _clamp(sum(cfg.weights[k] * v for k, v in subscores.items()))
    return subscores, total, text_category(total)

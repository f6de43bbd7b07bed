import numpy as np
import pytest

from speechcorpus_adapter.config import CAPABILITIES
from speechcorpus_adapter.models import (
    StubCompletenessChecker,
    StubEmbedder,
    StubMusicDetector,
    StubPunctuationRestorer,
    StubTranscriber,
    load_model,
)

SR = 16_000


def tone(duration_s=1.0, freq=440.0, amp=0.4, sr=SR):
    t = np.arange(int(sr * duration_s)) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def noise(duration_s=1.0, seed=7, sr=SR):
    return 0.3 * np.random.default_rng(seed).standard_normal(int(sr * duration_s))


class TestStubTranscriber:
    def test_deterministic_and_terminated(self):
        model = StubTranscriber()
        pcm = noise(2.0)
        text, confidence = model.transcribe(pcm, SR)
        assert text == model.transcribe(pcm, SR)[0]
        assert text.endswith(".")
        assert confidence is not None and 0.0 <= confidence <= 1.0

    def test_word_count_scales_with_duration(self):
        model = StubTranscriber()
        short, _ = model.transcribe(noise(1.0), SR)
        long, _ = model.transcribe(noise(4.0), SR)
        assert len(long.split()) > len(short.split())

    def test_empty_audio(self):
        assert StubTranscriber().transcribe(np.zeros(0), SR) == ("", None)


class TestStubCompleteness:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("جمله تمام شد.", True),
            ("این جمله تمام", False),
            ("پایان؟", True),
            ("", False),
            ("   ", False),
        ],
    )
    def test_verdicts(self, text, expected):
        is_complete, score = StubCompletenessChecker().check(text)
        assert is_complete is expected
        assert 0.0 <= score <= 1.0
        assert is_complete == (score >= 0.5)


class TestStubEmbedder:
    def test_unit_norm_and_dimension(self):
        vector = StubEmbedder().embed(tone(), SR)
        assert len(vector) == StubEmbedder.dim
        assert np.linalg.norm(vector) == pytest.approx(1.0)

    def test_content_keyed(self):
        model = StubEmbedder()
        assert model.embed(tone(), SR) == model.embed(tone(), SR)
        assert model.embed(tone(), SR) != model.embed(tone(freq=523.0), SR)


class TestStubMusicDetector:
    def test_tone_flagged_noise_not(self):
        model = StubMusicDetector()
        spans = model.detect(tone(2.0), SR)
        assert len(spans) == 1
        assert spans[0]["kind"] == "music"
        assert spans[0]["end_s"] - spans[0]["start_s"] > 1.5
        assert model.detect(noise(2.0), SR) == []

    def test_silence_not_flagged(self):
        assert StubMusicDetector().detect(np.zeros(SR), SR) == []

    def test_spans_within_audio(self):
        duration = 1.7
        for span in StubMusicDetector().detect(tone(duration), SR):
            assert 0.0 <= span["start_s"] < span["end_s"] <= duration + 1e-9

    def test_too_short_audio(self):
        assert StubMusicDetector().detect(tone(0.01), SR) == []


class TestStubPunctuation:
    def test_appends_and_idempotent(self):
        model = StubPunctuationRestorer()
        once = model.restore("سلام دنیا")
        assert once == "سلام دنیا."
        assert model.restore(once) == once

    def test_existing_terminal_kept(self):
        assert StubPunctuationRestorer().restore("تمام؟") == "تمام؟"

    def test_blank_text_unchanged(self):
        assert StubPunctuationRestorer().restore("") == ""


class TestLoadModel:
    @pytest.mark.parametrize("capability", CAPABILITIES)
    def test_stub_identifier(self, capability):
        assert load_model(capability, "stub") is not None

    @pytest.mark.parametrize("capability", CAPABILITIES)
    def test_unavailable_model_disables_capability(self, capability):
        assert load_model(capability, "some/unavailable-model") is None

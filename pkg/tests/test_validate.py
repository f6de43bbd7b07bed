import numpy as np
import pytest

from speechcorpus.model import AudioBuffer, Completeness, TimeSpan
from speechcorpus.providers import ProviderError, Transcriber, Transcription
from speechcorpus.providers.mock import (
    MockCompletenessChecker,
    MockTranscriber,
    ScriptedWord,
)
from speechcorpus.validate import ExtensionPolicy, validate_segment

from conftest import SR


def source(duration_s=60.0):
    return AudioBuffer(samples=np.zeros(int(SR * duration_s)), sample_rate_hz=SR,
                       source_id="rec")


def planted_script(candidate_end_s: float, k: int):
    """Sentence whose final word ends exactly k steps past the candidate end."""
    words = [
        ScriptedWord("جمله", 1.0, 1.5),
        ScriptedWord("نیمه", 1.6, 2.2),
        ScriptedWord("تمام.", candidate_end_s + k * 0.1 - 0.4, candidate_end_s + k * 0.1),
    ]
    return MockTranscriber(words)


CLF = MockCompletenessChecker()


class TestValidateSegment:
    def test_already_complete_needs_no_extension(self):
        asr = planted_script(candidate_end_s=4.0, k=0)
        segment = validate_segment(source(), TimeSpan(0.5, 4.0), asr, CLF)
        assert segment.completeness is Completeness.COMPLETE
        assert segment.span == TimeSpan(0.5, 4.0)
        assert segment.transcript.endswith("تمام.")
        assert asr.call_count == 1

    @pytest.mark.parametrize("k", [1, 2, 7, 25, 50])
    def test_converges_in_exactly_k_extensions(self, k):
        asr = planted_script(candidate_end_s=4.0, k=k)
        segment = validate_segment(source(), TimeSpan(0.5, 4.0), asr, CLF)
        assert segment.completeness is Completeness.COMPLETE
        assert segment.span.end_s == pytest.approx(4.0 + k * 0.1)
        assert asr.call_count == k + 1  # the step-0 probe plus k extensions

    @pytest.mark.parametrize("k", [51, 60])
    def test_sentence_past_budget_is_rejected(self, k):
        asr = planted_script(candidate_end_s=4.0, k=k)
        segment = validate_segment(source(), TimeSpan(0.5, 4.0), asr, CLF)
        assert segment.completeness is Completeness.REJECTED
        assert "budget" in segment.reject_reason
        assert asr.call_count == 51  # exhausted: step 0 through step 50

    def test_rejection_keeps_last_partial_transcript(self):
        asr = planted_script(candidate_end_s=4.0, k=60)
        segment = validate_segment(source(), TimeSpan(0.5, 4.0), asr, CLF)
        assert segment.transcript == "جمله نیمه"

    def test_silence_rejects_with_empty_transcript_reason(self):
        segment = validate_segment(source(), TimeSpan(10.0, 14.0),
                                   MockTranscriber([]), CLF)
        assert segment.completeness is Completeness.REJECTED
        assert "empty transcript" in segment.reject_reason

    def test_stops_extending_at_source_end(self):
        asr = planted_script(candidate_end_s=4.0, k=10)
        segment = validate_segment(source(duration_s=4.5), TimeSpan(0.5, 4.0), asr, CLF)
        assert segment.completeness is Completeness.REJECTED
        # ran out of audio after 5 extra probes, not after the full 50
        assert asr.call_count == 6

    def test_max_segment_length_rejects(self):
        asr = planted_script(candidate_end_s=23.0, k=30)
        policy = ExtensionPolicy(max_segment_s=25.0)
        segment = validate_segment(source(), TimeSpan(0.5, 23.0), asr, CLF, policy)
        assert segment.completeness is Completeness.REJECTED
        assert "max segment" in segment.reject_reason

    def test_candidate_beyond_source_is_a_usage_error(self):
        with pytest.raises(ValueError, match="exceeds source"):
            validate_segment(source(duration_s=3.0), TimeSpan(0.5, 4.0),
                             MockTranscriber([]), CLF)

    def test_both_direction_extends_start_too(self):
        # sentence spills 0.3 s over both candidate edges; symmetric growth
        # captures the leading word that end-only growth would never reach
        words = [
            ScriptedWord("اول", 0.7, 1.0),
            ScriptedWord("آخر.", 1.1, 4.3),
        ]
        asr = MockTranscriber(words)
        policy = ExtensionPolicy(direction="both")
        segment = validate_segment(source(), TimeSpan(1.0, 4.0), asr, CLF, policy)
        assert segment.completeness is Completeness.COMPLETE
        assert segment.span.start_s == pytest.approx(0.7)
        assert segment.span.end_s == pytest.approx(4.3)
        assert segment.transcript == "اول آخر."

    def test_asr_failure_is_a_rejection_not_a_crash(self):
        class Exploding(Transcriber):
            def transcribe(self, audio):
                raise ProviderError("backend down")

        segment = validate_segment(source(), TimeSpan(0.5, 4.0), Exploding(), CLF)
        assert segment.completeness is Completeness.REJECTED
        assert "ASR failure" in segment.reject_reason

    def test_completeness_failure_is_a_rejection(self):
        class Exploding(MockCompletenessChecker):
            def check_completeness(self, text):
                raise ProviderError("classifier down")

        asr = planted_script(candidate_end_s=4.0, k=0)
        segment = validate_segment(source(), TimeSpan(0.5, 4.0), asr, Exploding())
        assert segment.completeness is Completeness.REJECTED
        assert "completeness failure" in segment.reject_reason


class TestPolicy:
    def test_max_steps_default_is_fifty(self):
        assert ExtensionPolicy().max_steps == 50

    def test_invalid_policies_rejected(self):
        with pytest.raises(ValueError):
            ExtensionPolicy(step_s=0.0)
        with pytest.raises(ValueError):
            ExtensionPolicy(max_total_extension_s=0.05)
        with pytest.raises(ValueError):
            ExtensionPolicy(direction="backwards")

    def test_uneven_budget_rounds_up(self):
        assert ExtensionPolicy(step_s=0.3, max_total_extension_s=1.0).max_steps == 4

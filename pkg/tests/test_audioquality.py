import numpy as np
import pytest

from speechcorpus.audioquality import (
    AudioQualityConfig,
    clipping_ratio,
    dynamic_range_db,
    estimate_snr_db,
    score_audio,
    silence_ratio,
    spectral_and_mfcc_scores,
)
from speechcorpus.model import AudioBuffer, audio_category
from speechcorpus.providers import MusicDetector, ProviderError
from speechcorpus.providers.mock import MockMusicDetector

from conftest import (
    DAMAGE_OPERATORS,
    SR,
    pseudo_speech,
    shaped_noise,
    silence,
    tone,
)


def buf(samples):
    return AudioBuffer(samples=samples, sample_rate_hz=SR)


class TestSnr:
    def test_clean_gated_signal_has_high_snr(self):
        x = np.concatenate([silence(0.5), tone(440, 2.0, 0.4), silence(0.5)])
        assert estimate_snr_db(buf(x)) > 40.0

    def test_noisier_floor_means_lower_snr(self, rng):
        speech = np.concatenate([silence(0.5), tone(440, 2.0, 0.4), silence(0.5)])
        noise = 0.02 * rng.standard_normal(len(speech))
        assert estimate_snr_db(buf(speech + noise)) < estimate_snr_db(buf(speech))

    def test_known_snr_recovered_approximately(self, rng):
        # constant tone over constant noise floor: loudest vs quietest frames
        # recover the ratio to a few dB
        n = SR * 3
        noise = 0.01 * rng.standard_normal(n)
        x = noise.copy()
        x[SR:2 * SR] += tone(500, 1.0, 0.32)
        measured = estimate_snr_db(buf(x))
        expected = 20 * np.log10((0.32 / np.sqrt(2)) / 0.01)
        assert measured == pytest.approx(expected, abs=3.0)

    def test_too_short_raises(self):
        with pytest.raises(ValueError, match="too short"):
            estimate_snr_db(buf(silence(0.3)))


class TestClippingSilenceDynamics:
    def test_clean_audio_has_zero_clipping(self):
        assert clipping_ratio(buf(tone(440, 1.0, 0.8))) == 0.0

    def test_clipped_fraction_measured(self):
        x = np.clip(tone(440, 1.0, 5.0), -1, 1)
        measured = clipping_ratio(buf(x))
        # arcsin(1/5)*2/pi of each half-cycle stays below the rail
        expected = 1.0 - 2.0 * np.arcsin(0.2) / np.pi
        assert measured == pytest.approx(expected, abs=0.01)

    def test_silence_ratio_half(self):
        x = np.concatenate([tone(440, 1.0, 0.4), silence(1.0)])
        assert silence_ratio(buf(x)) == pytest.approx(0.5, abs=0.03)

    def test_constant_tone_has_tiny_dynamic_range(self):
        assert dynamic_range_db(buf(tone(440, 2.0, 0.4))) < 1.0

    def test_modulated_signal_has_larger_dynamic_range(self):
        t = np.arange(SR * 2) / SR
        am = (0.55 + 0.45 * np.sin(2 * np.pi * 2.0 * t)) * tone(440, 2.0, 0.5)
        assert dynamic_range_db(buf(am)) > dynamic_range_db(buf(tone(440, 2.0, 0.5)))


class TestSpectralAndMfcc:
    def test_speech_like_fixture_scores_high(self):
        spectral, mfcc = spectral_and_mfcc_scores(pseudo_speech())
        assert spectral > 0.9
        assert mfcc > 0.5

    def test_hum_scores_near_zero(self):
        spectral, mfcc = spectral_and_mfcc_scores(buf(tone(50.0, 2.0, 0.4)))
        assert spectral < 0.1
        assert mfcc < 0.05

    def test_too_short_raises(self):
        with pytest.raises(ValueError, match="too short"):
            spectral_and_mfcc_scores(buf(tone(440, 0.5, 0.4)))


class TestScoreAudio:
    def test_calibrated_fixture_is_high_category(self):
        subscores, total, category, flags = score_audio(pseudo_speech(),
                                                        MockMusicDetector())
        assert total > 0.9
        assert category == "high"
        assert flags == []
        assert subscores["clipping"] == 1.0
        assert subscores["music"] == 1.0

    def test_weighted_total_matches_subscores(self):
        cfg = AudioQualityConfig()
        subscores, total, category, _ = score_audio(pseudo_speech(), MockMusicDetector())
        assert total == pytest.approx(
            sum(cfg.weights[k] * v for k, v in subscores.items()))
        assert category == audio_category(total)

    def test_short_buffer_flagged_not_raised(self):
        subscores, total, _, flags = score_audio(buf(tone(440, 0.3, 0.4)),
                                                 MockMusicDetector())
        assert "too_short_for_snr" in flags
        assert "too_short_for_spectral" in flags
        assert subscores["snr"] == 0.0
        assert 0.0 <= total <= 1.0

    def test_music_provider_failure_scores_one_with_flag(self):
        class Exploding(MusicDetector):
            def detect_music(self, audio):
                raise ProviderError("down")

        subscores, _, _, flags = score_audio(pseudo_speech(), Exploding())
        assert subscores["music"] == 1.0
        assert "music_provider_failed" in flags

    def test_missing_music_provider_flagged(self):
        subscores, _, _, flags = score_audio(pseudo_speech(), None)
        assert subscores["music"] == 1.0
        assert "music_provider_missing" in flags

    def test_pure_music_tanks_the_music_subscore(self):
        subscores, _, _, _ = score_audio(buf(tone(440, 4.0, 0.4)), MockMusicDetector())
        assert subscores["music"] < 0.05

    @pytest.mark.parametrize("duration,expected", [
        (0.4, 0.0), (1.25, 0.5), (6.0, 1.0), (15.0, 1.0), (22.5, 0.5), (31.0, 0.0),
    ])
    def test_duration_trapezoid(self, duration, expected):
        x = 0.1 * shaped_noise(int(SR * duration), np.random.default_rng(0), 1500.0)
        subscores, _, _, _ = score_audio(buf(x), MockMusicDetector())
        assert subscores["duration"] == pytest.approx(expected, abs=0.05)

    def test_never_raises_on_random_buffers(self, rng):
        for _ in range(60):
            n = int(rng.integers(1, SR * 4))
            scale = float(rng.uniform(0.0, 2.0))
            x = np.clip(scale * rng.standard_normal(n), -1, 1)
            subscores, total, category, _ = score_audio(buf(x), MockMusicDetector())
            assert all(0.0 <= v <= 1.0 for v in subscores.values())
            assert 0.0 <= total <= 1.0
            assert category in ("low", "acceptable", "high")

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            AudioQualityConfig(weights={"snr": 1.0, "dynamic_range": 1.0,
                                        "spectral": 0.0, "mfcc_variance": 0.0,
                                        "clipping": 0.0, "silence": 0.0,
                                        "music": 0.0, "duration": 0.0})


class TestMonotoneDamage:
    @pytest.mark.parametrize("kind", sorted(DAMAGE_OPERATORS))
    def test_damage_never_raises_total(self, kind, rng):
        detector = MockMusicDetector()
        for trial in range(12):
            base = pseudo_speech(seed=trial)
            _, before, _, _ = score_audio(base, detector)
            damaged = DAMAGE_OPERATORS[kind](base, rng)
            _, after, _, _ = score_audio(damaged, detector)
            assert after <= before + 1e-9, (kind, trial, before, after)

    def test_each_damage_kind_strictly_hurts_its_subscore(self, rng):
        detector = MockMusicDetector()
        base = pseudo_speech(seed=3)
        base_scores, _, _, _ = score_audio(base, detector)
        for kind, op in DAMAGE_OPERATORS.items():
            damaged_scores, _, _, _ = score_audio(op(base, rng), detector)
            assert damaged_scores[kind] < base_scores[kind] - 0.2, kind

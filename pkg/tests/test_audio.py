import numpy as np
import pytest

from voice2face.config import AudioConfig
from voice2face.data.audio import (
    AudioWaveform,
    extract_window,
    load_wav,
    preprocess_audio,
    rms,
    save_wav,
)
from voice2face.errors import InvalidInputError, ZeroEnergyError

CFG = AudioConfig()  # 16 kHz, 6 s, RMS 0.01


def test_short_input_duplicated_to_exact_length(rng):
    raw = rng.standard_normal(3 * 16000)  # 3 s at 16 kHz
    out = preprocess_audio(raw, 16000, CFG, rng)
    assert out.samples.shape == (96000,)
    assert out.sample_rate == 16000


def test_rms_normalized_to_reference(rng):
    for _ in range(5):
        raw = rng.standard_normal(int(rng.integers(8000, 200_000))) * rng.uniform(0.001, 10)
        out = preprocess_audio(raw, 16000, CFG, rng)
        assert abs(rms(out.samples) - 0.01) < 1e-6


def test_long_input_randomly_truncated(rng):
    raw = np.sin(np.linspace(0, 2000, 10 * 16000))
    out = preprocess_audio(raw, 16000, CFG, rng)
    assert out.samples.shape == (96000,)


def test_zero_energy_rejected(rng):
    with pytest.raises(ZeroEnergyError):
        preprocess_audio(np.zeros(6 * 16000), 16000, CFG, rng)


def test_empty_and_bad_rate_rejected(rng):
    with pytest.raises(InvalidInputError):
        preprocess_audio(np.array([]), 16000, CFG, rng)
    with pytest.raises(InvalidInputError):
        preprocess_audio(np.ones(100), 0, CFG, rng)


def test_resampling_to_16k(rng):
    raw = rng.standard_normal(44100 * 2)  # 2 s at 44.1 kHz
    out = preprocess_audio(raw, 44100, CFG, rng)
    assert out.samples.shape == (96000,)


def test_stereo_downmixed(rng):
    raw = rng.standard_normal((16000, 2))
    out = preprocess_audio(raw, 16000, CFG, rng)
    assert out.samples.ndim == 1


def test_duration_property(rng):
    out = preprocess_audio(rng.standard_normal(96000), 16000, CFG, rng)
    assert out.duration_s == pytest.approx(6.0)


class TestExtractWindow:
    cfg = AudioConfig(duration_s=1.0)

    def test_slots_cover_file_deterministically(self, rng):
        samples = rng.standard_normal(32000)
        w0 = extract_window(samples, 16000, self.cfg, 0, 4)
        w0_again = extract_window(samples, 16000, self.cfg, 0, 4)
        w3 = extract_window(samples, 16000, self.cfg, 3, 4)
        np.testing.assert_array_equal(w0.samples, w0_again.samples)
        assert not np.array_equal(w0.samples, w3.samples)
        assert w0.samples.shape == w3.samples.shape == (16000,)

    def test_each_window_rms_normalized(self, rng):
        samples = rng.standard_normal(32000)
        for slot in range(4):
            w = extract_window(samples, 16000, self.cfg, slot, 4)
            assert abs(rms(w.samples) - 0.01) < 1e-6

    def test_bad_slot_rejected(self, rng):
        with pytest.raises(InvalidInputError):
            extract_window(rng.standard_normal(32000), 16000, self.cfg, 4, 4)


def test_wav_round_trip(tmp_path, rng):
    samples = np.clip(rng.standard_normal(8000) * 0.1, -1, 1)
    path = str(tmp_path / "t.wav")
    save_wav(path, samples, 16000)
    loaded, rate = load_wav(path)
    assert rate == 16000
    # 16-bit quantization error only
    assert np.max(np.abs(loaded - samples)) < 1.0 / 32000

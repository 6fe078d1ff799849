import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ngvoc.audio import AudioBuffer, scale_rms_db
from ngvoc.metrics import (
    MccFrameSequence,
    aligned_mse,
    long_term_spectrum_db,
    mcc,
    mcd,
    mix_at_snr,
    mse,
    speech_shaped_noise,
    write_metrics_csv,
    MetricsRow,
)
from ngvoc.synth import digit_triplet, harmonic_complex


def _noise(n=16000, fs=16000, seed=0, level=-20.0):
    rng = np.random.default_rng(seed)
    return scale_rms_db(AudioBuffer(rng.standard_normal(n), fs), level)


class TestMse:
    def test_identical_zero(self):
        x = _noise()
        assert mse(x, x) == 0.0

    def test_sign_flip(self):
        x = _noise(level=-20.0)
        flipped = AudioBuffer(-x.samples, x.sample_rate)
        # rms = 0.1 at -20 dB FS: mse of x vs -x is 4 * rms^2 = 0.04
        assert mse(x, flipped) == pytest.approx(0.04, rel=1e-6)

    def test_vs_zero_signal(self):
        x = _noise(level=-20.0)
        zeros = AudioBuffer(np.zeros(len(x.samples)), x.sample_rate)
        assert mse(x, zeros) == pytest.approx(0.01, rel=1e-6)

    def test_symmetric(self):
        a, b = _noise(seed=1), _noise(seed=2)
        assert mse(a, b) == mse(b, a)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse(_noise(1000), _noise(1001))

    def test_aligned_mse_handles_offset(self):
        x = _noise(8000)
        delayed = AudioBuffer(np.concatenate([np.zeros(800), x.samples]), x.sample_rate)
        raw_equal_len = AudioBuffer(delayed.samples[:8000], x.sample_rate)
        aligned, n = aligned_mse(x, delayed)
        assert aligned < mse(x, raw_equal_len)
        assert n > 0


class TestMcc:
    def test_deterministic(self):
        x = _noise()
        np.testing.assert_array_equal(mcc(x).coefficients, mcc(x).coefficients)

    def test_shape(self):
        seq = mcc(_noise(4096))
        assert seq.coefficients.shape[1] == 13

    def test_gain_invariance(self):
        x = _noise()
        doubled = AudioBuffer(2.0 * x.samples, x.sample_rate)
        a = mcc(x).coefficients
        b = mcc(doubled).coefficients
        assert np.abs(a - b).max() < 1e-6

    @given(st.floats(0.25, 4.0))
    @settings(max_examples=10)
    def test_gain_invariance_property(self, gain):
        x = _noise(4096)
        scaled = AudioBuffer(gain * x.samples, x.sample_rate)
        assert np.abs(mcc(x).coefficients - mcc(scaled).coefficients).max() < 1e-6

    def test_octave_shift_changes_coeffs(self):
        a = harmonic_complex(220.0, 0.3, 16000)
        b = harmonic_complex(440.0, 0.3, 16000)
        assert np.abs(mcc(a).coefficients.mean(0) - mcc(b).coefficients.mean(0)).max() > 0.01

    def test_silence_still_returns_frames(self):
        seq = mcc(AudioBuffer(np.zeros(4096), 16000))
        assert seq.n_frames > 0
        assert np.all(np.isfinite(seq.coefficients))


class TestMcd:
    def test_identical_zero(self):
        seq = mcc(_noise())
        assert mcd(seq, seq) == 0.0

    def test_hand_computed_single_frame(self):
        d = np.log(10.0) / 10.0
        a = np.zeros((1, 13))
        b = np.zeros((1, 13))
        b[0, 0] = d
        sa = MccFrameSequence(a, 512, 128)
        sb = MccFrameSequence(b, 512, 128)
        assert mcd(sa, sb) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_symmetric(self):
        a, b = mcc(_noise(seed=3)), mcc(_noise(seed=4))
        assert mcd(a, b) == pytest.approx(mcd(b, a), rel=1e-9)

    def test_nonnegative(self):
        a, b = mcc(_noise(seed=5)), mcc(harmonic_complex(300, 1.0, 16000))
        assert mcd(a, b) > 0


class TestMixAtSnr:
    def test_zero_snr_equal_rms(self):
        speech = _noise(8000, seed=1)
        noise = _noise(32000, seed=2)
        rng = np.random.default_rng(0)
        mixed = mix_at_snr(speech, noise, 0.0, rng, normalize_db_fs=None)
        # mixture of two equal-RMS uncorrelated signals: power doubles
        assert mixed.rms() == pytest.approx(np.sqrt(2) * speech.rms(), rel=0.05)

    def test_exact_snr_by_construction(self):
        speech = _noise(8000, seed=3)
        noise = _noise(32000, seed=4)
        rng = np.random.default_rng(1)
        start_rng = np.random.default_rng(1)
        start = int(start_rng.integers(0, len(noise.samples) - len(speech.samples) + 1))
        mixed = mix_at_snr(speech, noise, -6.0, rng, normalize_db_fs=None)
        crop = noise.samples[start:start + len(speech.samples)]
        added = mixed.samples - speech.samples
        snr = 20 * np.log10(speech.rms() / np.sqrt(np.mean(added**2)))
        assert snr == pytest.approx(-6.0, abs=1e-6)
        np.testing.assert_allclose(added / np.abs(added).max(),
                                   crop / np.abs(crop).max(), atol=1e-9)

    def test_infinite_snr_passthrough(self):
        speech = _noise(8000, seed=5)
        mixed = mix_at_snr(speech, _noise(16000, seed=6), np.inf)
        np.testing.assert_array_equal(mixed.samples, speech.samples)

    def test_grid_16_conditions(self):
        grid = np.arange(-20, 11, 2)
        assert len(grid) == 16

    def test_silent_rejected(self):
        silent = AudioBuffer(np.zeros(8000), 16000)
        with pytest.raises(ValueError):
            mix_at_snr(silent, _noise(16000), 0.0)

    def test_normalized_output(self):
        mixed = mix_at_snr(_noise(8000, seed=7), _noise(32000, seed=8), 4.0,
                           np.random.default_rng(2))
        assert 20 * np.log10(mixed.rms()) == pytest.approx(-20.0, abs=1e-6)


class TestSpeechShapedNoise:
    def test_matches_corpus_spectrum(self):
        corpus = [digit_triplet((i % 10, (i + 3) % 10, (i + 7) % 10), 16000)
                  for i in range(12)]
        rng = np.random.default_rng(0)
        noise = speech_shaped_noise(corpus, 30.0, rng)
        freqs_n, db_n = long_term_spectrum_db(noise)
        ref = AudioBuffer(np.concatenate([c.samples for c in corpus]), 16000)
        freqs_r, db_r = long_term_spectrum_db(ref)
        # compare third-octave band averages over the speech range
        bands = []
        f = 100.0
        while f < 6000:
            bands.append((f, f * 2 ** (1 / 3)))
            f *= 2 ** (1 / 3)
        diffs = []
        for lo, hi in bands:
            sel = (freqs_n >= lo) & (freqs_n < hi)
            if sel.sum() >= 2:
                diffs.append(db_n[sel].mean() - db_r[sel].mean())
        diffs = np.asarray(diffs)
        offset = diffs.mean()  # absolute level is arbitrary
        assert np.abs(diffs - offset).max() <= 3.0

    def test_two_seeds_differ_same_envelope(self):
        corpus = [digit_triplet((1, 2, 3), 16000)]
        a = speech_shaped_noise(corpus, 5.0, np.random.default_rng(1))
        b = speech_shaped_noise(corpus, 5.0, np.random.default_rng(2))
        assert np.abs(a.samples - b.samples).max() > 1e-3
        _, db_a = long_term_spectrum_db(a)
        _, db_b = long_term_spectrum_db(b)
        mid = slice(30, 900)
        assert np.median(np.abs(db_a[mid] - db_b[mid])) < 3.0

    def test_length(self):
        corpus = [digit_triplet((4, 5, 6), 44100)]
        noise = speech_shaped_noise(corpus, 2.0, np.random.default_rng(0))
        assert len(noise.samples) == 88200

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            speech_shaped_noise([], 1.0, np.random.default_rng(0))


def test_csv_report(tmp_path):
    rows = [MetricsRow("a.wav", "nh", 0.001, 3.5, 8000)]
    path = tmp_path / "report.csv"
    write_metrics_csv(path, rows)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "file,condition,mse,mcd_db,aligned_length"
    assert lines[1].startswith("a.wav,nh,0.001,3.5")

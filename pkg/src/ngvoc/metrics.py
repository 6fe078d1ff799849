"""Objective reconstruction metrics (waveform MSE, mel-cepstral distortion)
with warping-based alignment, plus the noise utilities used to build
speech-in-noise stimuli."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import inf
from pathlib import Path

import numpy as np
from scipy.fft import dct

from ngvoc.audio import AudioBuffer, scale_rms_db
from ngvoc.dsp import (
    dtw_path,
    hann_window,
    mel_filterbank,
    resample_fourier,
    rms_envelope,
    stft,
)

_MCC_COEFFS = 13
_MCC_MELS = 40
_LOG_FLOOR_DB = -80.0


@dataclass
class MccFrameSequence:
    """Mel-cepstral coefficient frames (frames x 13), energy term dropped."""

    coefficients: np.ndarray
    frame_length: int
    hop: int

    def __post_init__(self):
        if self.coefficients.ndim != 2 or self.coefficients.shape[1] != _MCC_COEFFS:
            raise ValueError(f"expected (frames, {_MCC_COEFFS}) coefficients")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")

    @property
    def n_frames(self) -> int:
        return self.coefficients.shape[0]


def mse(x: AudioBuffer, x_hat: AudioBuffer) -> float:
    """Mean squared sample difference. Signals must already be aligned and
    equally long (see :func:`aligned_mse`)."""
    if len(x.samples) != len(x_hat.samples):
        raise ValueError(
            f"length mismatch ({len(x.samples)} vs {len(x_hat.samples)}); align first"
        )
    return float(np.mean((x.samples - x_hat.samples) ** 2))


def aligned_mse(
    reference: AudioBuffer, candidate: AudioBuffer, frame_seconds: float = 0.01
) -> tuple[float, int]:
    """MSE after nonlinear alignment on 10 ms RMS envelopes.

    The warping path pairs envelope frames; the score is the mean squared
    difference over the corresponding sample blocks. Returns (mse, aligned
    sample count).
    """
    if candidate.sample_rate != reference.sample_rate:
        candidate = resample_fourier(candidate, reference.sample_rate)
    frame_len = max(1, int(round(frame_seconds * reference.sample_rate)))
    env_ref = rms_envelope(reference, frame_seconds)
    env_cand = rms_envelope(candidate, frame_seconds)
    path = dtw_path(env_ref, env_cand)

    def block(sig: np.ndarray, i: int) -> np.ndarray:
        seg = sig[i * frame_len:(i + 1) * frame_len]
        if len(seg) < frame_len:
            seg = np.pad(seg, (0, frame_len - len(seg)))
        return seg

    total = 0.0
    for i, j in path:
        d = block(reference.samples, i) - block(candidate.samples, j)
        total += float(d @ d)
    n = len(path) * frame_len
    return total / n, n


def mcc(audio: AudioBuffer, n_fft: int = 512, hop: int = 128) -> MccFrameSequence:
    """Mel-cepstral coefficients of the spectral envelope.

    Per frame: power spectrum, 40-band mel projection, dB with a floor,
    orthonormal DCT-II, keeping coefficients 1..13. Dropping the 0th
    coefficient makes the sequence invariant to overall gain.
    """
    window = hann_window(n_fft, symmetric=False)
    spec = stft(audio, n_fft, hop, window)
    power = np.abs(spec.frames) ** 2
    fb = mel_filterbank(_MCC_MELS, n_fft, audio.sample_rate, 0.0, audio.sample_rate / 2)
    mel_power = fb.weights @ power
    floor = 10.0 ** (_LOG_FLOOR_DB / 10.0)
    log_mel = 10.0 * np.log10(np.maximum(mel_power, floor))
    cepstra = dct(log_mel, type=2, norm="ortho", axis=0)
    coeffs = cepstra[1:_MCC_COEFFS + 1].T
    return MccFrameSequence(np.ascontiguousarray(coeffs), n_fft, hop)


def mcd(c: MccFrameSequence, c_hat: MccFrameSequence) -> float:
    """Mel-cepstral distortion in dB, averaged over the warping path.

    Per aligned frame pair: (10 / ln 10) * sqrt(2 * sum of squared
    coefficient differences). Zero iff the sequences are identical.
    """
    path = dtw_path(c.coefficients, c_hat.coefficients)
    diffs = c.coefficients[path[:, 0]] - c_hat.coefficients[path[:, 1]]
    per_frame = (10.0 / np.log(10.0)) * np.sqrt(2.0 * (diffs**2).sum(axis=1))
    return float(per_frame.mean())


def mix_at_snr(
    speech: AudioBuffer,
    noise: AudioBuffer,
    snr_db: float,
    rng: np.random.Generator | None = None,
    normalize_db_fs: float | None = -20.0,
) -> AudioBuffer:
    """Mix speech with a random crop of noise at an exact RMS SNR.

    ``snr_db=inf`` is the no-noise condition and returns the speech
    untouched. The mixture is normalized to ``normalize_db_fs`` (pass None
    to skip).
    """
    if snr_db == inf:
        return AudioBuffer(speech.samples.copy(), speech.sample_rate)
    if speech.rms() <= 0 or noise.rms() <= 0:
        raise ValueError("speech and noise must be non-silent")
    if noise.sample_rate != speech.sample_rate:
        raise ValueError("speech and noise sample rates must match")
    n = len(speech.samples)
    if len(noise.samples) < n:
        raise ValueError("noise must be at least as long as the speech")
    if rng is None:
        rng = np.random.default_rng()
    start = int(rng.integers(0, len(noise.samples) - n + 1))
    crop = noise.samples[start:start + n]

    speech_rms = speech.rms()
    crop_rms = float(np.sqrt(np.mean(crop**2)))
    if crop_rms <= 0:
        raise ValueError("sampled noise crop is silent")
    target_noise_rms = speech_rms / 10.0 ** (snr_db / 20.0)
    mixed = speech.samples + crop * (target_noise_rms / crop_rms)
    out = AudioBuffer(mixed, speech.sample_rate)
    if normalize_db_fs is not None:
        out = scale_rms_db(out, normalize_db_fs)
    return out


def speech_shaped_noise(
    corpus: list[AudioBuffer],
    duration: float,
    rng: np.random.Generator,
    n_fft: int = 4096,
) -> AudioBuffer:
    """Stationary noise with the corpus's long-term average magnitude
    spectrum: white noise shaped by the 4096-bin average, random phase."""
    if not corpus:
        raise ValueError("corpus must not be empty")
    rate = corpus[0].sample_rate
    window = hann_window(n_fft, symmetric=False)
    acc = np.zeros(n_fft // 2 + 1)
    frames = 0
    for clip in corpus:
        if clip.sample_rate != rate:
            raise ValueError("corpus clips must share one sample rate")
        spec = stft(clip, n_fft, n_fft // 2, window)
        acc += np.abs(spec.frames).mean(axis=1)
        frames += 1
    envelope = acc / frames

    n = int(round(duration * rate))
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    env_freqs = np.arange(n_fft // 2 + 1) * rate / n_fft
    shaped = spectrum * np.interp(freqs, env_freqs, envelope)
    out = np.fft.irfft(shaped, n=n)
    out = out / max(np.abs(out).max(), 1e-12) * 0.5
    return AudioBuffer(out, rate)


def long_term_spectrum_db(audio: AudioBuffer, n_fft: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """(frequencies, average magnitude in dB) over n_fft-sample frames."""
    window = hann_window(n_fft, symmetric=False)
    spec = stft(audio, n_fft, n_fft // 2, window)
    mags = np.abs(spec.frames).mean(axis=1)
    freqs = np.arange(n_fft // 2 + 1) * audio.sample_rate / n_fft
    return freqs, 20.0 * np.log10(np.maximum(mags, 1e-12))


@dataclass
class MetricsRow:
    file: str
    condition: str
    mse: float
    mcd_db: float
    aligned_length: int


def evaluate_pair(
    reference: AudioBuffer, candidate: AudioBuffer, name: str, condition: str
) -> MetricsRow:
    """Level-normalize both signals, align, and compute both metrics."""
    ref = scale_rms_db(reference, -20.0)
    cand = scale_rms_db(candidate, -20.0)
    if cand.sample_rate != ref.sample_rate:
        cand = resample_fourier(cand, ref.sample_rate)
    value, aligned = aligned_mse(ref, cand)
    distortion = mcd(mcc(ref), mcc(cand))
    return MetricsRow(name, condition, value, distortion, aligned)


def write_metrics_csv(path: str | Path, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "condition", "mse", "mcd_db", "aligned_length"])
        for r in rows:
            writer.writerow([r.file, r.condition, f"{r.mse:.9g}", f"{r.mcd_db:.6f}",
                             r.aligned_length])

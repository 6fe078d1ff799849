"""Stateless signal processing kernels: windows, STFT/ISTFT, the mel scale
and its filterbank, resampling, and dynamic time warping.

Everything here is a pure function of its inputs and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, gcd

import numpy as np
from scipy import signal as sp_signal

from ngvoc.audio import AudioBuffer


class DegenerateWindowError(ValueError):
    """Raised when the overlap-add normalization denominator vanishes."""


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------

def hann_window(length: int, symmetric: bool = True) -> np.ndarray:
    """Hann window of ``length`` samples.

    The symmetric variant uses denominator ``length - 1`` (zero endpoints,
    suited to smoothing); the periodic variant uses ``length`` and tiles
    seamlessly, which is what the transform pair needs for overlap-add.
    """
    if length < 2:
        raise ValueError(f"window length must be >= 2, got {length}")
    m = np.arange(length)
    denom = (length - 1) if symmetric else length
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * m / denom)


# ---------------------------------------------------------------------------
# STFT / ISTFT
# ---------------------------------------------------------------------------

@dataclass
class ComplexSpectrogram:
    """Complex STFT frames, freq_bins x time_frames, with framing metadata."""

    frames: np.ndarray
    n_fft: int
    hop: int
    window_length: int
    sample_rate: int
    n_samples: int | None = None  # original signal length, for exact inversion

    def __post_init__(self):
        if self.frames.ndim != 2:
            raise ValueError("frames must be 2-D (freq_bins x time_frames)")
        if self.frames.shape[0] != self.n_fft // 2 + 1:
            raise ValueError(
                f"expected {self.n_fft // 2 + 1} frequency bins for n_fft={self.n_fft}, "
                f"got {self.frames.shape[0]}"
            )
        if self.hop < 1:
            raise ValueError("hop must be >= 1")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_fft // 2 + 1) * self.sample_rate / self.n_fft

    def magnitude(self) -> "MagnitudeSpectrogram":
        return MagnitudeSpectrogram(
            np.abs(self.frames), self.n_fft, self.hop, self.window_length,
            self.sample_rate, self.n_samples,
        )


@dataclass
class MagnitudeSpectrogram:
    """Nonnegative STFT magnitudes with the same framing metadata."""

    magnitudes: np.ndarray
    n_fft: int
    hop: int
    window_length: int
    sample_rate: int
    n_samples: int | None = None

    def __post_init__(self):
        if self.magnitudes.ndim != 2:
            raise ValueError("magnitudes must be 2-D")
        if np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be nonnegative")
        if self.hop < 1:
            raise ValueError("hop must be >= 1")

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[1]


def _full_window(window: np.ndarray, n_fft: int) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ValueError("window must be 1-D")
    if len(window) > n_fft:
        raise ValueError(f"window length {len(window)} exceeds n_fft {n_fft}")
    if len(window) == n_fft:
        return window
    full = np.zeros(n_fft)
    offset = (n_fft - len(window)) // 2
    full[offset:offset + len(window)] = window
    return full


def stft(audio: AudioBuffer, n_fft: int, hop: int, window: np.ndarray) -> ComplexSpectrogram:
    """Short-time Fourier transform with centered framing.

    The signal is treated as zero outside its support. Frame ``k`` is
    centered on sample ``k * hop``; the frame count is ``ceil(T / hop)`` and
    bin ``i`` corresponds to physical frequency ``i * sample_rate / n_fft``.
    """
    x = audio.samples
    if len(x) == 0:
        raise ValueError("cannot transform an empty signal")
    if hop > len(window):
        raise ValueError(f"hop {hop} exceeds window length {len(window)}")
    win = _full_window(window, n_fft)
    n_frames = ceil(len(x) / hop)
    pad_left = n_fft // 2
    needed = (n_frames - 1) * hop + n_fft
    padded = np.zeros(pad_left + max(needed - pad_left, len(x)))
    padded[pad_left:pad_left + len(x)] = x

    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = padded[idx] * win[None, :]
    spec = np.fft.rfft(frames, n=n_fft, axis=1).T
    return ComplexSpectrogram(spec, n_fft, hop, len(window), audio.sample_rate, len(x))


def istft(spec: ComplexSpectrogram, window: np.ndarray) -> AudioBuffer:
    """Inverse STFT via window-squared weighted overlap-add.

    Exact inversion requires the analysis window/hop pair to satisfy the
    constant-overlap-add condition; a vanishing normalization denominator
    anywhere in the reconstructed span raises ``DegenerateWindowError``.
    """
    if len(window) != spec.window_length:
        raise ValueError(
            f"window length {len(window)} does not match spectrogram metadata "
            f"({spec.window_length})"
        )
    win = _full_window(window, spec.n_fft)
    n_fft, hop = spec.n_fft, spec.hop
    n_frames = spec.n_frames
    frames = np.fft.irfft(spec.frames.T, n=n_fft, axis=1)

    total = (n_frames - 1) * hop + n_fft
    out = np.zeros(total)
    norm = np.zeros(total)
    weighted = frames * win[None, :]
    win_sq = win**2
    for k in range(n_frames):
        start = k * hop
        out[start:start + n_fft] += weighted[k]
        norm[start:start + n_fft] += win_sq

    pad_left = n_fft // 2
    n_samples = spec.n_samples if spec.n_samples is not None else n_frames * hop
    region = slice(pad_left, pad_left + n_samples)
    if norm[region].min() <= np.finfo(np.float64).tiny * max(n_frames, 1):
        raise DegenerateWindowError(
            "overlap-add normalization denominator vanishes; window/hop cannot "
            "reconstruct all samples"
        )
    result = out[region] / norm[region]
    return AudioBuffer(result, spec.sample_rate)


# ---------------------------------------------------------------------------
# Mel scale (linear below 1 kHz at 3/200 mel per Hz, logarithmic above with
# step ln(6.4)/27 per mel)
# ---------------------------------------------------------------------------

_MEL_BREAK_HZ = 1000.0
_MEL_LIN_SLOPE = 3.0 / 200.0
_MEL_BREAK = _MEL_BREAK_HZ * _MEL_LIN_SLOPE  # 15 mel
_MEL_LOG_STEP = np.log(6.4) / 27.0


def hz_to_mel(f):
    """Convert Hz to mel. Accepts scalars or arrays; strictly increasing."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be nonnegative")
    mel = np.where(
        f < _MEL_BREAK_HZ,
        f * _MEL_LIN_SLOPE,
        _MEL_BREAK + np.log(np.maximum(f, _MEL_BREAK_HZ) / _MEL_BREAK_HZ) / _MEL_LOG_STEP,
    )
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(m):
    """Inverse of :func:`hz_to_mel`."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be nonnegative")
    f = np.where(
        m < _MEL_BREAK,
        m / _MEL_LIN_SLOPE,
        _MEL_BREAK_HZ * np.exp(_MEL_LOG_STEP * (np.maximum(m, _MEL_BREAK) - _MEL_BREAK)),
    )
    return float(f) if f.ndim == 0 else f


def mel_band_frequencies(n_bands: int, fmin: float, fmax: float) -> np.ndarray:
    """``n_bands + 2`` edge points equally spaced in mel between fmin and fmax.

    Band ``i`` takes points ``(i, i+1, i+2)`` as (lower, center, upper).
    """
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    if not 0 <= fmin < fmax:
        raise ValueError(f"need 0 <= fmin < fmax, got fmin={fmin}, fmax={fmax}")
    mels = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2)
    return mel_to_hz(mels)


def band_centers(n_bands: int, fmin: float, fmax: float) -> np.ndarray:
    return mel_band_frequencies(n_bands, fmin, fmax)[1:-1]


def band_ranges(n_bands: int, fmin: float, fmax: float) -> np.ndarray:
    """(n_bands, 2) array of (lower, upper) band support edges."""
    edges = mel_band_frequencies(n_bands, fmin, fmax)
    return np.stack([edges[:-2], edges[2:]], axis=1)


@dataclass
class MelFilterbank:
    """Triangular, area-normalized mel filters over FFT bin frequencies."""

    weights: np.ndarray          # (n_mels, n_fft // 2 + 1)
    band_edges_hz: np.ndarray    # (n_mels, 3): lower, center, upper
    fmin: float
    fmax: float

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise ValueError("filter weights must be nonnegative")
        if np.any(self.weights.sum(axis=1) <= 0):
            raise ValueError("every filter row needs at least one positive weight")
        centers = self.band_edges_hz[:, 1]
        if np.any(np.diff(centers) <= 0):
            raise ValueError("band centers must be strictly increasing")

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


def mel_filterbank(
    n_mels: int, n_fft: int, sample_rate: float, fmin: float, fmax: float
) -> MelFilterbank:
    """Build the linear map from FFT power bins to mel bands.

    Each row is a triangle on the FFT bin frequencies scaled by
    ``2 / (upper - lower)`` so filters integrate to the same area.
    """
    if fmax > sample_rate / 2:
        raise ValueError(f"fmax {fmax} exceeds Nyquist {sample_rate / 2}")
    edges = mel_band_frequencies(n_mels, fmin, fmax)
    fft_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

    lower = edges[:-2][:, None]
    center = edges[1:-1][:, None]
    upper = edges[2:][:, None]
    up = (fft_freqs[None, :] - lower) / (center - lower)
    down = (upper - fft_freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(up, down)) * (2.0 / (upper - lower))

    band_edges = np.stack([edges[:-2], edges[1:-1], edges[2:]], axis=1)
    return MelFilterbank(weights, band_edges, fmin, fmax)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def resample_rational(x: np.ndarray, up: int, down: int, axis: int = -1) -> np.ndarray:
    """Polyphase rational-rate resampling with a kaiser anti-aliasing filter.

    Output length along ``axis`` is ``ceil(n * up / down)``; content above
    the new Nyquist is attenuated by well over 60 dB.
    """
    if up < 1 or down < 1:
        raise ValueError("up and down must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    g = gcd(up, down)
    up, down = up // g, down // g
    if up == down:
        return x.copy()
    return sp_signal.resample_poly(x, up, down, axis=axis, window=("kaiser", 8.6))


def resample_fourier(audio: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited (FFT domain) resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == audio.sample_rate:
        return AudioBuffer(audio.samples.copy(), audio.sample_rate)
    num = int(round(len(audio.samples) * target_rate / audio.sample_rate))
    if len(audio.samples) == 0 or num == 0:
        return AudioBuffer(np.zeros(num), target_rate)
    out = sp_signal.resample(audio.samples, num)
    return AudioBuffer(out, target_rate)


# ---------------------------------------------------------------------------
# Dynamic time warping
# ---------------------------------------------------------------------------

def rms_envelope(audio: AudioBuffer, frame_seconds: float = 0.01) -> np.ndarray:
    """Non-overlapping RMS envelope frames (default 10 ms)."""
    frame_len = max(1, int(round(frame_seconds * audio.sample_rate)))
    n = len(audio.samples)
    n_frames = ceil(n / frame_len)
    padded = np.zeros(n_frames * frame_len)
    padded[:n] = audio.samples
    blocks = padded.reshape(n_frames, frame_len)
    return np.sqrt(np.mean(blocks**2, axis=1))


def dtw_path(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal-cost monotone alignment between two feature sequences.

    ``a`` and ``b`` are (frames,) or (frames, dims). The returned (L, 2)
    index path starts at (0, 0), ends at (len(a)-1, len(b)-1), and each step
    is one of (1,0), (0,1), (1,1) under a squared-difference local cost.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64).T).T
    b = np.atleast_2d(np.asarray(b, dtype=np.float64).T).T
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("cannot align empty sequences")

    # local cost matrix: squared euclidean distance between frames
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)

    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row = cost[i - 1]
        prev = acc[i - 1]
        cur = acc[i]
        for j in range(1, m + 1):
            cur[j] = row[j - 1] + min(prev[j - 1], prev[j], cur[j - 1])

    path = [(n - 1, m - 1)]
    i, j = n, m
    while (i, j) != (1, 1):
        options = (
            (acc[i - 1, j - 1], (i - 1, j - 1)),
            (acc[i - 1, j], (i - 1, j)),
            (acc[i, j - 1], (i, j - 1)),
        )
        _, (i, j) = min(options, key=lambda t: t[0])
        path.append((i - 1, j - 1))
    path.reverse()
    return np.asarray(path, dtype=np.intp)


def dtw_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Total squared-difference cost along the optimal warping path."""
    a2 = np.atleast_2d(np.asarray(a, dtype=np.float64).T).T
    b2 = np.atleast_2d(np.asarray(b, dtype=np.float64).T).T
    path = dtw_path(a2, b2)
    return float(((a2[path[:, 0]] - b2[path[:, 1]]) ** 2).sum())


def dtw_align(
    reference: AudioBuffer, candidate: AudioBuffer, frame_seconds: float = 0.01
) -> np.ndarray:
    """Warping path between two waveforms over their RMS envelope frames."""
    if len(reference.samples) == 0 or len(candidate.samples) == 0:
        raise ValueError("cannot align empty signals")
    env_ref = rms_envelope(reference, frame_seconds)
    env_cand = rms_envelope(candidate, frame_seconds)
    return dtw_path(env_ref, env_cand)

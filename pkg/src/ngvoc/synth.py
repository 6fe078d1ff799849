"""Synthetic desk-scale test stimuli: tones, harmonic complexes, and
formant-style spoken-digit tokens for exercising the pipeline without a
recorded corpus."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import signal as sp_signal

from ngvoc.audio import AudioBuffer, scale_rms_db, write_wav

# Two-formant recipes, one per digit: (F1 Hz, F2 Hz, f0 Hz, fricative flag).
# Values are spread over the vowel space so tokens are spectrally distinct.
_DIGIT_FORMANTS = {
    0: (500, 1400, 115, True),
    1: (750, 1150, 125, False),
    2: (600, 1700, 110, True),
    3: (400, 2100, 130, False),
    4: (650, 900, 120, False),
    5: (450, 1800, 140, True),
    6: (550, 2300, 105, True),
    7: (700, 1600, 135, False),
    8: (350, 2500, 118, False),
    9: (480, 1000, 128, True),
}


def tone(frequency: float, duration: float, sample_rate: int, amplitude: float = 0.5,
         ramp: float = 0.01) -> AudioBuffer:
    t = np.arange(int(duration * sample_rate)) / sample_rate
    x = amplitude * np.sin(2 * np.pi * frequency * t)
    n_ramp = int(ramp * sample_rate)
    if n_ramp and 2 * n_ramp < len(x):
        env = np.ones(len(x))
        env[:n_ramp] = np.linspace(0, 1, n_ramp)
        env[-n_ramp:] = np.linspace(1, 0, n_ramp)
        x *= env
    return AudioBuffer(x, sample_rate)


def harmonic_complex(f0: float, duration: float, sample_rate: int,
                     n_harmonics: int = 8, amplitude: float = 0.4) -> AudioBuffer:
    t = np.arange(int(duration * sample_rate)) / sample_rate
    x = np.zeros_like(t)
    for k in range(1, n_harmonics + 1):
        if k * f0 < sample_rate / 2:
            x += np.sin(2 * np.pi * k * f0 * t) / k
    x *= amplitude / max(np.abs(x).max(), 1e-9)
    return AudioBuffer(x, sample_rate)


def _resonator(x: np.ndarray, freq: float, bandwidth: float, fs: int) -> np.ndarray:
    r = np.exp(-np.pi * bandwidth / fs)
    theta = 2 * np.pi * freq / fs
    a = [1.0, -2 * r * np.cos(theta), r * r]
    b = [1.0 - r]
    return sp_signal.lfilter(b, a, x)


def digit_token(digit: int, sample_rate: int = 24000, duration: float = 0.24,
                rng: np.random.Generator | None = None) -> AudioBuffer:
    """A vowel-like token with digit-specific formants, optionally preceded
    by a short fricative burst."""
    f1, f2, f0, fricative = _DIGIT_FORMANTS[digit % 10]
    fs = sample_rate
    n = int(duration * fs)
    t = np.arange(n) / fs

    # glottal-ish source: impulse train at f0, mildly decaying harmonics
    source = (np.sin(2 * np.pi * f0 * t)
              + 0.7 * np.sin(2 * np.pi * 2 * f0 * t)
              + 0.5 * np.sin(2 * np.pi * 3 * f0 * t))
    phase = np.cumsum(np.full(n, f0 / fs))
    source += 0.3 * sp_signal.square(2 * np.pi * phase)

    voiced = _resonator(source, f1, 90.0, fs) + 0.7 * _resonator(source, f2, 120.0, fs)
    env = np.minimum(1.0, np.minimum(t / 0.03, (duration - t) / 0.05) * 3)
    voiced *= np.clip(env, 0.0, 1.0)

    if fricative:
        if rng is None:
            rng = np.random.default_rng(digit)
        burst_n = int(0.04 * fs)
        burst = rng.standard_normal(burst_n)
        burst = _resonator(burst, min(4000.0, fs / 2 * 0.8), 1500.0, fs)
        burst *= np.linspace(1, 0, burst_n) * 0.8
        voiced[:burst_n] += burst / max(np.abs(burst).max(), 1e-9) * np.abs(voiced).max() * 0.5

    voiced /= max(np.abs(voiced).max(), 1e-9)
    return AudioBuffer(voiced * 0.7, fs)


def digit_triplet(digits: tuple[int, int, int], sample_rate: int = 24000,
                  token_duration: float = 0.24, gap: float = 0.05,
                  level_db_fs: float = -20.0) -> AudioBuffer:
    parts = []
    silence = np.zeros(int(gap * sample_rate))
    for i, d in enumerate(digits):
        parts.append(digit_token(d, sample_rate, token_duration).samples)
        if i < 2:
            parts.append(silence)
    out = AudioBuffer(np.concatenate(parts), sample_rate)
    return scale_rms_db(out, level_db_fs)


def triplet_label(digits: tuple[int, int, int]) -> str:
    return "".join(str(d) for d in digits)


def make_triplet_corpus(
    out_dir: str | Path,
    n_triplets: int = 120,
    sample_rate: int = 24000,
    seed: int = 0,
    token_duration: float = 0.24,
) -> list[str]:
    """Write n distinct synthetic digit-triplet WAVs; returns their labels."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    labels: list[str] = []
    seen = set()
    while len(labels) < n_triplets:
        digits = tuple(int(d) for d in rng.integers(0, 10, 3))
        label = triplet_label(digits)
        if label in seen:
            continue
        seen.add(label)
        labels.append(label)
        audio = digit_triplet(digits, sample_rate, token_duration)
        write_wav(out_dir / f"{label}.wav", audio, dtype="pcm16")
    return labels

"""Iterative phase retrieval: reconstruct a waveform whose STFT magnitude
matches a target, using the momentum-accelerated fast projection variant."""

from __future__ import annotations

import numpy as np

from ngvoc.audio import AudioBuffer
from ngvoc.dsp import ComplexSpectrogram, MagnitudeSpectrogram, istft, stft

_TINY = 1e-16


def griffin_lim(
    target: MagnitudeSpectrogram,
    n_iter: int,
    window: np.ndarray,
    hop: int,
    momentum: float = 0.99,
    phase_seed: int | None = None,
) -> AudioBuffer:
    """Estimate a time-domain signal with ``|STFT(x)|`` close to ``target``.

    Alternates projection onto consistent spectrograms (ISTFT then STFT)
    with projection onto the target magnitudes, accelerated by ``momentum``.
    ``phase_seed=None`` starts from zero phase, making the result fully
    deterministic; an integer seed draws a random initial phase.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {momentum}")
    if hop != target.hop or len(window) != target.window_length:
        raise ValueError(
            f"framing mismatch: got hop={hop}, window={len(window)} but target "
            f"metadata says hop={target.hop}, window={target.window_length}"
        )

    S = target.magnitudes
    if phase_seed is None:
        angles = np.ones_like(S, dtype=np.complex128)
    else:
        rng = np.random.default_rng(phase_seed)
        angles = np.exp(2j * np.pi * rng.random(S.shape))

    rebuilt = np.zeros_like(angles)
    for _ in range(n_iter):
        tprev = rebuilt
        spec = ComplexSpectrogram(
            S * angles, target.n_fft, hop, target.window_length, target.sample_rate
        )
        x = istft(spec, window)
        rebuilt = stft(x, target.n_fft, hop, window).frames
        angles = rebuilt - (momentum / (1.0 + momentum)) * tprev
        angles = angles / np.maximum(np.abs(angles), _TINY)

    final = ComplexSpectrogram(
        S * angles, target.n_fft, hop, target.window_length, target.sample_rate
    )
    return istft(final, window)


def spectral_error(
    audio: AudioBuffer, target: MagnitudeSpectrogram, window: np.ndarray
) -> float:
    """Relative Frobenius error between ``|STFT(audio)|`` and the target."""
    mags = np.abs(stft(audio, target.n_fft, target.hop, window).frames)
    frames = min(mags.shape[1], target.n_frames)
    denom = np.linalg.norm(target.magnitudes[:, :frames])
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(mags[:, :frames] - target.magnitudes[:, :frames]) / denom)

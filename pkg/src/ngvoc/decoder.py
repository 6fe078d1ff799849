"""Reconstruct a waveform from a normalized neurogram.

Pipeline: temporal downsampling (polyphase), linear dB mapping with a floor,
conversion to a power scale, per-frame nonnegative inversion of the mel
projection, phase retrieval, band-limited resampling to the requested rate,
and level scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple

import numpy as np

from ngvoc.audio import AudioBuffer, scale_rms_db
from ngvoc.dsp import (
    MagnitudeSpectrogram,
    hann_window,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    resample_fourier,
    resample_rational,
)
from ngvoc.griffinlim import griffin_lim, spectral_error
from ngvoc.neurogram import Neurogram
from ngvoc.nnls import nnls

_SILENCE_GUARD_RMS = 1e-8


@dataclass
class DecoderConfig:
    hop: int = 32
    db_floor: float = -80.0
    power_reference: float = 50.0
    n_fft: int = 512
    gl_iterations: int = 320
    gl_momentum: float = 0.99
    output_level_db_spl: float = 50.0

    def __post_init__(self):
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        if self.db_floor >= 0:
            raise ValueError("db_floor must be negative")
        if self.gl_iterations < 1:
            raise ValueError("gl_iterations must be >= 1")


class DecodeResult(NamedTuple):
    audio: AudioBuffer
    gl_spectral_error: float


def downsample_neurogram(ng: Neurogram, hop: int) -> Neurogram:
    """Rational per-row resampling of the time axis to ceil(N / hop) frames."""
    n = ng.n_frames
    n_s = ceil(n / hop)
    if n_s == n:
        return Neurogram(ng.values.copy(), ng.bin_width, ng.band_frequencies,
                         normalized=False)
    values = resample_rational(ng.values, n_s, n, axis=1)
    new_width = ng.bin_width * n / n_s
    return Neurogram(values, new_width, ng.band_frequencies, normalized=False)


def neurogram_to_db(ng: Neurogram, db_floor: float = -80.0) -> Neurogram:
    """Linear map of clipped [0, 1] activity onto [db_floor, 0] dB."""
    clipped = np.minimum(1.0, np.maximum(0.0, ng.values))
    values = db_floor + (-db_floor) * clipped
    return Neurogram(values, ng.bin_width, ng.band_frequencies, normalized=False)


def db_to_power(ng_db: Neurogram, power_reference: float = 50.0) -> Neurogram:
    """Convert dB values to a power scale relative to the reference."""
    if np.any(ng_db.values > 1e-9):
        raise ValueError("dB-scaled neurogram must be <= 0 dB")
    values = power_reference * 10.0 ** (ng_db.values / 10.0)
    return Neurogram(values, ng_db.bin_width, ng_db.band_frequencies, normalized=False)


def filterbank_for(ng: Neurogram, n_fft: int, sample_rate: float):
    """Rebuild the mel filterbank matching a neurogram's band centers.

    Centers are equally spaced in mel by construction, so the outer edges
    are recovered by extrapolating one mel gap beyond each end.
    """
    mels = hz_to_mel(ng.band_frequencies)
    gaps = np.diff(mels)
    if len(mels) < 2:
        raise ValueError("need at least two bands to recover the filterbank")
    if np.max(np.abs(gaps - gaps[0])) > 1e-6:
        raise ValueError("band centers are not equally spaced in mel")
    fmin = mel_to_hz(max(mels[0] - gaps[0], 0.0))
    fmax = mel_to_hz(mels[-1] + gaps[0])
    fmax = min(fmax, sample_rate / 2)
    return mel_filterbank(ng.n_bands, n_fft, sample_rate, fmin, fmax)


def reconstruct_magnitude(
    ng_power: Neurogram, fb, sample_rate: float, hop: int, n_fft: int = 512
) -> MagnitudeSpectrogram:
    """Invert the mel projection per frame with NNLS, then take sqrt.

    Solves argmin_{p >= 0} ||W p - n|| for each time frame independently;
    the magnitude spectrogram is the elementwise square root of the power
    estimate.
    """
    if fb.weights.shape[0] != ng_power.n_bands:
        raise ValueError(
            f"filterbank has {fb.weights.shape[0]} bands, neurogram has {ng_power.n_bands}"
        )
    n_bins = fb.weights.shape[1]
    power = np.empty((n_bins, ng_power.n_frames))
    for k in range(ng_power.n_frames):
        power[:, k] = nnls(fb.weights, ng_power.values[:, k]).x
    window_length = n_fft
    return MagnitudeSpectrogram(
        np.sqrt(power), n_fft, hop, window_length, int(round(sample_rate))
    )


def decode(
    ng: Neurogram,
    config: DecoderConfig | None = None,
    original_rate: int | None = None,
) -> DecodeResult:
    """Neurogram to waveform.

    The internal reconstruction runs at the neurogram's native rate
    (1 / bin width); resampling to ``original_rate`` and scaling to the
    output level happen last. An essentially silent reconstruction is
    returned unscaled so silence decodes to silence.
    """
    if config is None:
        config = DecoderConfig()
    if not ng.normalized:
        raise ValueError("decode expects a normalized neurogram")

    if ng.values.size == 0 or ng.values.max() <= 0.0:
        # an all-zero neurogram carries no signal at all: the dB floor would
        # otherwise reconstruct a faint hiss that level scaling then amplifies
        rate = int(round(1.0 / ng.bin_width)) if original_rate is None else original_rate
        n_out = int(round(ng.n_frames * ng.bin_width * rate))
        return DecodeResult(AudioBuffer(np.zeros(n_out), rate), 0.0)

    small = downsample_neurogram(ng, config.hop)
    db = neurogram_to_db(small, config.db_floor)
    power = db_to_power(db, config.power_reference)

    internal_rate = config.hop / small.bin_width
    fb = filterbank_for(ng, config.n_fft, internal_rate)
    magnitude = reconstruct_magnitude(power, fb, internal_rate, config.hop, config.n_fft)

    window = hann_window(config.n_fft, symmetric=False)
    wave = griffin_lim(
        magnitude, config.gl_iterations, window, config.hop, config.gl_momentum
    )
    gl_err = spectral_error(wave, magnitude, window)

    if original_rate is not None and original_rate != wave.sample_rate:
        wave = resample_fourier(wave, original_rate)

    if wave.rms() >= _SILENCE_GUARD_RMS:
        wave = scale_rms_db(wave, config.output_level_db_spl, reference="spl")
    return DecodeResult(wave, gl_err)

"""Waveform container, RMS level scaling, and WAV file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

# Calibration constant mapping digital full scale to sound pressure level:
# a 0 dB FS RMS signal is taken to be this loud. "x dB SPL" therefore means
# "(x - FULL_SCALE_SPL_DB) dB FS" unless a different constant is passed.
FULL_SCALE_SPL_DB = 100.0

_SILENCE_RMS = 1e-12


class SilentSignalError(ValueError):
    """Raised when an operation requires a non-silent signal."""


@dataclass
class AudioBuffer:
    """A mono sampled waveform. Amplitudes are dimensionless, full scale +-1."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"expected a 1-D sample array, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain NaN or Inf")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    def rms_db_fs(self) -> float:
        r = self.rms()
        if r < _SILENCE_RMS:
            raise SilentSignalError("signal is silent; its level is undefined")
        return 20.0 * np.log10(r)


def spl_to_db_fs(level_db_spl: float, full_scale_spl: float = FULL_SCALE_SPL_DB) -> float:
    return level_db_spl - full_scale_spl


def scale_rms_db(
    audio: AudioBuffer,
    target_db: float,
    reference: str = "fs",
    full_scale_spl: float = FULL_SCALE_SPL_DB,
) -> AudioBuffer:
    """Scale a waveform so its RMS sits at ``target_db``.

    ``reference`` selects the meaning of the target: "fs" is dB relative to
    digital full scale (RMS 1.0), "spl" maps through the configurable
    full-scale calibration constant.
    """
    if reference not in ("fs", "spl"):
        raise ValueError(f"unknown reference {reference!r}, expected 'fs' or 'spl'")
    target_db_fs = spl_to_db_fs(target_db, full_scale_spl) if reference == "spl" else target_db
    rms = audio.rms()
    if rms < _SILENCE_RMS:
        raise SilentSignalError("cannot scale a silent signal to a target level")
    gain = 10.0 ** (target_db_fs / 20.0) / rms
    return AudioBuffer(audio.samples * gain, audio.sample_rate)


def read_wav(path: str | Path) -> AudioBuffer:
    rate, data = wavfile.read(str(path))
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    return AudioBuffer(samples, rate)


def write_wav(path: str | Path, audio: AudioBuffer, dtype: str = "float32") -> None:
    """Write a mono WAV file; ``dtype`` is "float32" or "pcm16"."""
    if dtype == "float32":
        wavfile.write(str(path), audio.sample_rate, audio.samples.astype(np.float32))
    elif dtype == "pcm16":
        clipped = np.clip(audio.samples, -1.0, 1.0)
        wavfile.write(str(path), audio.sample_rate,
                      np.round(clipped * 32767.0).astype(np.int16))
    else:
        raise ValueError(f"unknown dtype {dtype!r}")

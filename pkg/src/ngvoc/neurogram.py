"""Neurogram construction from spike trains: time binning, per-band pooling,
Hann smoothing, min-max normalization, and the binary file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import ceil
from pathlib import Path

import numpy as np
from scipy import signal as sp_signal

from ngvoc.dsp import hann_window

NVOC_MAGIC = b"NVOC"
NVOC_VERSION = 1


@dataclass
class SpikeTrain:
    fiber_id: int
    trial_id: int
    band_index: int
    times: np.ndarray  # spike times in seconds

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)


@dataclass
class SpikeTrainSet:
    trains: list[SpikeTrain]
    duration: float
    trial_count_per_fiber: int

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        for tr in self.trains:
            if len(tr.times) and (tr.times.min() < 0 or tr.times.max() >= self.duration):
                raise ValueError(
                    f"fiber {tr.fiber_id} trial {tr.trial_id}: spike times must lie in "
                    f"[0, {self.duration})"
                )

    def total_spikes(self) -> int:
        return sum(len(tr.times) for tr in self.trains)


@dataclass
class Neurogram:
    """Pooled spike activity, n_bands x n_frames, with bin width in seconds."""

    values: np.ndarray
    bin_width: float
    band_frequencies: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.band_frequencies = np.asarray(self.band_frequencies, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("neurogram values must be 2-D (bands x frames)")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if len(self.band_frequencies) != self.values.shape[0]:
            raise ValueError("need one band frequency per row")
        if self.normalized and self.values.size:
            if self.values.min() < -1e-12 or self.values.max() > 1 + 1e-12:
                raise ValueError("normalized neurogram values must lie in [0, 1]")

    @property
    def n_bands(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.n_frames * self.bin_width


def n_bins(duration: float, bin_width: float) -> int:
    return ceil(duration / bin_width - 1e-12)


def bin_train(times: np.ndarray, bin_width: float, n_frames: int) -> np.ndarray:
    """Histogram one spike train into half-open bins [k*dt, (k+1)*dt).

    A spike exactly on a boundary lands in the later bin. Spikes past the
    last bin edge (possible only through float rounding) are clamped in.
    """
    idx = np.minimum(np.floor(np.asarray(times) / bin_width).astype(np.intp), n_frames - 1)
    return np.bincount(idx, minlength=n_frames).astype(np.int64)


def bin_spikes(trains: SpikeTrainSet, bin_width: float) -> np.ndarray:
    """Per-trial spike count matrix (n_trains x n_frames). Counts are
    conserved: each row sums to the train's spike count."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    frames = n_bins(trains.duration, bin_width)
    out = np.zeros((len(trains.trains), frames), dtype=np.int64)
    for i, tr in enumerate(trains.trains):
        if len(tr.times):
            out[i] = bin_train(tr.times, bin_width, frames)
    return out


def pool_bands(
    binned: np.ndarray,
    band_indices: np.ndarray,
    n_bands: int,
    band_frequencies: np.ndarray,
    bin_width: float,
) -> Neurogram:
    """Sum per-trial counts into their assigned band rows."""
    band_indices = np.asarray(band_indices, dtype=np.intp)
    if len(band_indices) != binned.shape[0]:
        raise ValueError("need one band index per trial")
    if np.any(band_indices < 0) or np.any(band_indices >= n_bands):
        raise ValueError("band index out of range")
    values = np.zeros((n_bands, binned.shape[1]))
    np.add.at(values, band_indices, binned)
    return Neurogram(values, bin_width, band_frequencies, normalized=False)


def smooth_neurogram(ng: Neurogram, smoothing_length: int) -> Neurogram:
    """Smooth each band along time with a normalized symmetric Hann window.

    Centered convolution with zero padding; a constant row stays constant
    away from the edges because the kernel is normalized to unit sum.
    """
    if smoothing_length < 2:
        raise ValueError("smoothing window must span at least 2 frames")
    if smoothing_length > 4 * ng.n_frames:
        raise ValueError(
            f"smoothing window of {smoothing_length} frames is too long for a "
            f"{ng.n_frames}-frame neurogram"
        )
    kernel = hann_window(smoothing_length, symmetric=True)
    kernel = kernel / kernel.sum()
    smoothed = sp_signal.fftconvolve(ng.values, kernel[None, :], mode="same", axes=1)
    return Neurogram(smoothed, ng.bin_width, ng.band_frequencies, normalized=False)


def normalize_neurogram(ng: Neurogram) -> Neurogram:
    """Scale values to [0, 1] by the global min and max.

    A constant input (including silence) maps to all zeros rather than
    dividing by zero, so silence stays silence.
    """
    lo = ng.values.min() if ng.values.size else 0.0
    hi = ng.values.max() if ng.values.size else 0.0
    if hi - lo <= 0:
        values = np.zeros_like(ng.values)
    else:
        values = (ng.values - lo) / (hi - lo)
    return Neurogram(values, ng.bin_width, ng.band_frequencies, normalized=True)


# ---------------------------------------------------------------------------
# File format: magic "NVOC", u16 version, u32 n_bands, u32 n_frames,
# f64 bin_width, f64 band frequencies, then row-major f32 values.
# Little-endian throughout.
# ---------------------------------------------------------------------------

def save_nvoc(path: str | Path, ng: Neurogram) -> None:
    with open(path, "wb") as fh:
        fh.write(NVOC_MAGIC)
        fh.write(struct.pack("<HIId", NVOC_VERSION, ng.n_bands, ng.n_frames, ng.bin_width))
        fh.write(ng.band_frequencies.astype("<f8").tobytes())
        fh.write(ng.values.astype("<f4").tobytes(order="C"))


def load_nvoc(path: str | Path) -> Neurogram:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != NVOC_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {NVOC_MAGIC!r}")
        header = fh.read(struct.calcsize("<HIId"))
        version, bands, frames, bin_width = struct.unpack("<HIId", header)
        if version != NVOC_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        freqs = np.frombuffer(fh.read(8 * bands), dtype="<f8")
        if len(freqs) != bands:
            raise ValueError(f"{path}: truncated band frequency table")
        raw = fh.read(4 * bands * frames)
        if len(raw) != 4 * bands * frames:
            raise ValueError(f"{path}: truncated value matrix")
        values = np.frombuffer(raw, dtype="<f4").reshape(bands, frames).astype(np.float64)
    normalized = bool(values.size == 0 or (values.min() >= 0.0 and values.max() <= 1.0))
    return Neurogram(values, bin_width, freqs.copy(), normalized=normalized)

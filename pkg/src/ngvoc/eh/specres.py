"""Spectral-resolution speech coding strategy (lite).

Implements the core principles of an FFT-based current-steering strategy:
15 analysis bands over 16 electrode contacts, per-band envelope extraction
from short FFT frames, a quadratic spectral peak locator that steers each
pulse between the band's electrode pair in nine quantized steps,
logarithmic amplitude compression between threshold and comfort levels, and
strictly sequential (never overlapping) biphasic pulse delivery.

Windowing details, channel-specific carriers, and clinical fitting rules of
the full strategy are intentionally out of scope; the band table and every
level constant are configurable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ngvoc.audio import AudioBuffer
from ngvoc.dsp import hann_window

# Analysis band edges in Hz; band b spans electrodes (b, b+1).
ANALYSIS_BANDS_HZ = np.array([
    (306, 442),
    (442, 578),
    (578, 646),
    (646, 782),
    (782, 918),
    (918, 1054),
    (1054, 1257),
    (1257, 1529),
    (1529, 1801),
    (1801, 2141),
    (2141, 2549),
    (2549, 3025),
    (3025, 3568),
    (3568, 4248),
    (4248, 8054),
], dtype=np.float64)

# One operating frequency per electrode: the band-edge frequencies.
ELECTRODE_FREQS_HZ = np.concatenate([ANALYSIS_BANDS_HZ[:, 0], ANALYSIS_BANDS_HZ[-1:, 1]])

SPECRES_RATE_HZ = 17400


@dataclass
class SpecresConfig:
    sample_rate: int = SPECRES_RATE_HZ
    n_fft: int = 256
    n_electrodes: int = 16
    steps: int = 9
    phase_width: float = 18e-6
    cathodic_first: bool = True
    t_level: float = 1.0             # electric threshold, normalized current
    c_level: float = 2.0             # electric comfort level
    comfort_db_fs: float = -40.0     # band envelope mapped to the comfort level
    idr_db: float = 40.0             # input dynamic range below comfort
    band_table: np.ndarray = field(default_factory=lambda: ANALYSIS_BANDS_HZ.copy())

    @property
    def n_bands(self) -> int:
        return len(self.band_table)

    @property
    def pulse_duration(self) -> float:
        return 2.0 * self.phase_width

    @property
    def cycle_duration(self) -> float:
        return self.n_bands * self.pulse_duration

    @property
    def strategy_rate(self) -> float:
        """Per-channel stimulation rate (cycles per second)."""
        return 1.0 / self.cycle_duration


@dataclass
class Electrodogram:
    """Sequential biphasic pulse train. Parallel arrays, one entry per pulse."""

    times: np.ndarray            # pulse onset, seconds
    electrode_low: np.ndarray
    electrode_high: np.ndarray
    steering_weight: np.ndarray  # quantized fraction toward electrode_high
    amplitude: np.ndarray        # normalized current, >= 0
    n_electrodes: int
    strategy_rate: float
    phase_width: float
    cathodic_first: bool = True
    steps: int = 9

    def __post_init__(self):
        if np.any(self.amplitude < 0):
            raise ValueError("pulse amplitudes must be nonnegative")
        if np.any(np.diff(self.times) < self.pulse_duration - 1e-12):
            raise ValueError("pulses overlap in time; stimulation must be sequential")
        if len(self.times) and (
            self.electrode_high.max() >= self.n_electrodes or self.electrode_low.min() < 0
        ):
            raise ValueError("electrode index out of range")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def pulse_duration(self) -> float:
        return 2.0 * self.phase_width

    @property
    def duration(self) -> float:
        if len(self.times) == 0:
            return 0.0
        return float(self.times[-1] + self.pulse_duration)

    def step_index(self) -> np.ndarray:
        return np.round(self.steering_weight * (self.steps - 1)).astype(np.intp)


def _band_bins(config: SpecresConfig) -> list[np.ndarray]:
    freqs = np.arange(config.n_fft // 2 + 1) * config.sample_rate / config.n_fft
    bins = []
    for lo, hi in config.band_table:
        sel = np.flatnonzero((freqs >= lo) & (freqs < hi))
        if len(sel) == 0:
            sel = np.array([int(np.argmin(np.abs(freqs - (lo + hi) / 2)))])
        bins.append(sel)
    return bins


def _peak_frequency(mags: np.ndarray, band_sel: np.ndarray, bin_hz: float,
                    lo: float, hi: float) -> float:
    """Dominant frequency in a band by quadratic interpolation of the
    log magnitudes around the strongest in-band bin, clamped to the band."""
    k = int(band_sel[np.argmax(mags[band_sel])])
    if 0 < k < len(mags) - 1:
        logs = np.log(np.maximum(mags[k - 1:k + 2], 1e-30))
        denom = logs[0] - 2.0 * logs[1] + logs[2]
        if denom < 0:  # genuine local maximum
            delta = 0.5 * (logs[0] - logs[2]) / denom
            delta = float(np.clip(delta, -0.5, 0.5))
        else:
            delta = 0.5 if logs[2] > logs[0] else -0.5
    else:
        delta = 0.0
    return float(np.clip((k + delta) * bin_hz, lo, hi))


def specres_encode(audio: AudioBuffer, config: SpecresConfig | None = None) -> Electrodogram:
    """Encode a waveform into a sequential pulse train.

    Per strategy cycle, every analysis band contributes exactly one biphasic
    pulse on its electrode pair; pulses are laid back to back so no two ever
    overlap. Silence produces zero-amplitude pulses at the full rate.
    """
    if config is None:
        config = SpecresConfig()
    if audio.sample_rate != config.sample_rate:
        raise ValueError(
            f"strategy runs at {config.sample_rate} Hz, got {audio.sample_rate} Hz; "
            "resample first"
        )
    x = audio.samples
    n_fft = config.n_fft
    window = hann_window(n_fft, symmetric=False)
    coherent_gain = window.sum() / 2.0
    bin_hz = config.sample_rate / n_fft
    band_sel = _band_bins(config)
    n_bands = config.n_bands

    n_cycles = max(1, int(np.ceil(audio.duration / config.cycle_duration - 1e-12)))
    cycle_starts = np.arange(n_cycles) * config.cycle_duration
    frame_ends = np.minimum(
        np.round(cycle_starts * config.sample_rate).astype(int) + 1, len(x)
    )

    # causal analysis frames, one per cycle
    frames = np.zeros((n_cycles, n_fft))
    for c, end in enumerate(frame_ends):
        start = max(0, end - n_fft)
        seg = x[start:end]
        frames[c, n_fft - len(seg):] = seg
    spectra = np.fft.rfft(frames * window[None, :], axis=1)
    mags = np.abs(spectra)

    floor_db = config.comfort_db_fs - config.idr_db
    times = np.empty(n_cycles * n_bands)
    e_low = np.empty(n_cycles * n_bands, dtype=np.intp)
    weight = np.empty(n_cycles * n_bands)
    amplitude = np.empty(n_cycles * n_bands)

    for b in range(n_bands):
        sel = band_sel[b]
        lo, hi = config.band_table[b]
        env = np.sqrt((mags[:, sel] ** 2).sum(axis=1)) / coherent_gain
        env_db = 20.0 * np.log10(np.maximum(env, 1e-12))
        frac = (env_db - floor_db) / config.idr_db
        amp = np.where(
            env_db < floor_db,
            0.0,
            config.t_level + (config.c_level - config.t_level) * np.minimum(frac, 1.0),
        )
        idx = b + n_bands * np.arange(n_cycles)
        times[idx] = cycle_starts + b * config.pulse_duration
        e_low[idx] = b
        amplitude[idx] = amp
        for c in range(n_cycles):
            if amp[c] > 0:
                f_peak = _peak_frequency(mags[c], sel, bin_hz, lo, hi)
                w = (f_peak - lo) / (hi - lo)
            else:
                w = 0.0
            step = round(w * (config.steps - 1))
            weight[idx[c]] = step / (config.steps - 1)

    order = np.argsort(times, kind="stable")
    return Electrodogram(
        times=times[order],
        electrode_low=e_low[order],
        electrode_high=e_low[order] + 1,
        steering_weight=weight[order],
        amplitude=amplitude[order],
        n_electrodes=config.n_electrodes,
        strategy_rate=config.strategy_rate,
        phase_width=config.phase_width,
        cathodic_first=config.cathodic_first,
        steps=config.steps,
    )


def electrodogram_to_csv(path: str | Path, edg: Electrodogram) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "e_low", "e_high", "weight", "amplitude"])
        for i in range(len(edg)):
            writer.writerow([
                f"{edg.times[i]:.9f}",
                int(edg.electrode_low[i]),
                int(edg.electrode_high[i]),
                f"{edg.steering_weight[i]:.6f}",
                f"{edg.amplitude[i]:.9f}",
            ])

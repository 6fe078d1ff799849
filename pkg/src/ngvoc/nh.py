"""Phenomenological normal-hearing fiber model.

Front end: fourth-order gammatone channel at the fiber's characteristic
frequency, half-wave rectification, and a 3 kHz first-order low-pass. The
drive feeds a sigmoid rate-level function with divisive onset adaptation,
and spikes are drawn by thinning an inhomogeneous Poisson process under
absolute and relative refractoriness.

This is a deliberately simple stand-in that reproduces the qualitative
population behaviors the rest of the pipeline depends on (tonotopy,
spontaneous activity, onset emphasis, refractory ISIs), not any published
biophysical rate-level data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from ngvoc.audio import AudioBuffer, FULL_SCALE_SPL_DB
from ngvoc.encoder import AnfModel, EncoderConfig, trial_rng

SPONT_RATES = {"low": 0.1, "medium": 4.0, "high": 70.0}
# per-band fiber mix: 2 low, 2 medium, 6 high spontaneous rate
SPONT_MIX = ("low", "low", "medium", "medium", "high", "high", "high", "high", "high", "high")

_DRIVE_LP_HZ = 3000.0
_ONSET_TAU_S = 0.060
_ONSET_GAIN = 3.0
_SIGMOID_SCALE_DB = 5.0  # 30 dB from threshold to saturation (~6 sigma widths)


@dataclass
class NhFiberSpec:
    characteristic_frequency: float
    spont_class: str
    spont_rate: float
    band_index: int = 0
    absolute_refractory: float = 0.7e-3
    relative_refractory_tau: float = 0.7e-3
    saturation_rate: float = 200.0
    threshold_level: float = 40.0  # dB SPL of the drive at half activation

    def __post_init__(self):
        if self.spont_rate < 0:
            raise ValueError("spont_rate must be >= 0")
        if self.absolute_refractory <= 0:
            raise ValueError("absolute_refractory must be positive")
        if self.saturation_rate <= self.spont_rate:
            raise ValueError("saturation_rate must exceed spont_rate")

    @property
    def max_rate(self) -> float:
        return _ONSET_GAIN * self.saturation_rate

    @property
    def hazard_scale(self) -> float:
        """Compensates refractory dead time (absolute period plus recovery
        tau) so the observed spontaneous rate matches the nominal rate."""
        dead = self.absolute_refractory + self.relative_refractory_tau
        return 1.0 / max(1.0 - self.spont_rate * dead, 0.5)


def erb_bandwidth(cf: float) -> float:
    return 24.7 + 0.108 * cf


def _one_pole(x: np.ndarray, cutoff_hz: float, fs: float) -> np.ndarray:
    a = np.exp(-2.0 * np.pi * cutoff_hz / fs)
    return sp_signal.lfilter([1.0 - a], [1.0, -a], x, axis=-1)


def cochlear_channel(audio: AudioBuffer, cf: float) -> np.ndarray:
    """Nonnegative per-sample drive for a fiber tuned to ``cf``.

    Gammatone filtering is done at complex baseband: demodulate by the CF
    carrier, apply four cascaded one-pole low-passes with the gammatone decay
    bandwidth (1.019 ERB), and remodulate. Unit gain at CF.
    """
    fs = audio.sample_rate
    if cf >= fs / 2:
        raise ValueError(f"characteristic frequency {cf} Hz is at or above Nyquist ({fs / 2} Hz)")
    t = np.arange(len(audio.samples)) / fs
    carrier = np.exp(-2j * np.pi * cf * t)
    z = audio.samples * carrier
    b = 1.019 * erb_bandwidth(cf)
    a = np.exp(-2.0 * np.pi * b / fs)
    for _ in range(4):
        z = sp_signal.lfilter([1.0 - a], [1.0, -a], z)
    bandpassed = np.real(z * np.conj(carrier))
    rectified = np.maximum(bandpassed, 0.0)
    return _one_pole(rectified, _DRIVE_LP_HZ, fs)


def rate_function(drive: np.ndarray, fiber: NhFiberSpec, sample_rate: float) -> np.ndarray:
    """Instantaneous firing rate (spikes/s per sample) for a drive signal.

    Rate = spont + (saturation - spont) * sigmoid(level re threshold),
    with the driven term multiplied by an onset-emphasis factor derived from
    a 60 ms leaky integrator: fresh drive is amplified up to 3x, sustained
    drive decays back to its steady-state rate.
    """
    drive = np.asarray(drive, dtype=np.float64)
    if np.any(drive < 0):
        raise ValueError("drive must be nonnegative")
    level_db = 20.0 * np.log10(np.maximum(drive, 1e-12)) + FULL_SCALE_SPL_DB
    s = 1.0 / (1.0 + np.exp(-(level_db - fiber.threshold_level) / _SIGMOID_SCALE_DB))

    alpha = np.exp(-1.0 / (sample_rate * _ONSET_TAU_S))
    adapted = sp_signal.lfilter([1.0 - alpha], [1.0, -alpha], s)
    fresh = np.clip(s - adapted, 0.0, None) / np.maximum(s, 1e-12)
    onset = 1.0 + (_ONSET_GAIN - 1.0) * np.clip(fresh, 0.0, 1.0)

    rate = fiber.spont_rate + (fiber.saturation_rate - fiber.spont_rate) * s * onset
    return np.clip(rate, 0.0, fiber.max_rate)


def _thinning_candidates(rng: np.random.Generator, rate_max: float, duration: float):
    """Candidate spike times and acceptance draws for Poisson thinning.

    The candidate count is fixed from the rate bound so the per-fiber and
    batched simulation paths consume identical RNG streams.
    """
    expected = rate_max * duration
    n = int(expected + 10.0 * np.sqrt(expected) + 20.0)
    gaps = rng.exponential(1.0 / rate_max, n)
    times = np.cumsum(gaps)
    accept = rng.random(n)
    return times, accept


def nh_simulate(
    audio: AudioBuffer,
    fiber: NhFiberSpec,
    rng: np.random.Generator,
    rate: np.ndarray | None = None,
) -> np.ndarray:
    """Draw one trial of spike times for a fiber.

    Thinned inhomogeneous Poisson process: candidates proposed at the
    fiber's rate bound, accepted with probability rate/bound times the
    refractory recovery factor. No inter-spike interval is ever shorter
    than the absolute refractory period.
    """
    if rate is None:
        drive = cochlear_channel(audio, fiber.characteristic_frequency)
        rate = rate_function(drive, fiber, audio.sample_rate)
    fs = audio.sample_rate
    duration = len(rate) / fs
    bound = fiber.max_rate * fiber.hazard_scale
    times, accept = _thinning_candidates(rng, bound, duration)

    spikes = []
    last = -np.inf
    tau = fiber.relative_refractory_tau
    t_abs = fiber.absolute_refractory
    for t, u in zip(times, accept):
        if t >= duration:
            break
        delta = t - last
        if delta < t_abs:
            continue
        recovery = 1.0 - np.exp(-(delta - t_abs) / tau)
        idx = min(int(t * fs), len(rate) - 1)
        if u < (rate[idx] / fiber.max_rate) * recovery:
            spikes.append(t)
            last = t
    return np.asarray(spikes)


def spont_class_counts(fibers_per_band: int) -> dict[str, int]:
    """Distribute a band's fiber count over the 2/2/6 low/medium/high mix."""
    counts = {"low": 0, "medium": 0, "high": 0}
    for i in range(fibers_per_band):
        counts[SPONT_MIX[i % len(SPONT_MIX)]] += 1
    return counts


class NhModel(AnfModel):
    """Normal-hearing population: per band, a 2/2/6 spontaneous-rate mix of
    fibers with CF at the band center."""

    def __init__(self, fiber_kwargs: dict | None = None):
        self.fiber_kwargs = fiber_kwargs or {}

    def population(self, config: EncoderConfig) -> list[NhFiberSpec]:
        fibers = []
        for band, cf in enumerate(config.band_centers()):
            for i in range(config.fibers_per_band):
                cls = SPONT_MIX[i % len(SPONT_MIX)]
                fibers.append(
                    NhFiberSpec(
                        characteristic_frequency=float(cf),
                        spont_class=cls,
                        spont_rate=SPONT_RATES[cls],
                        band_index=band,
                        **self.fiber_kwargs,
                    )
                )
        return fibers

    def prepare(self, audio: AudioBuffer, config: EncoderConfig) -> AudioBuffer:
        return audio

    def simulate(self, prepared: AudioBuffer, fiber: NhFiberSpec, rng) -> np.ndarray:
        return nh_simulate(prepared, fiber, rng)

    def simulate_batch(self, prepared, fibers, fiber_indices, config):
        """Vectorized thinning across all (fiber, trial) pairs.

        Produces spike times identical to looping :func:`nh_simulate` with
        the per-(fiber, trial) RNG streams; acceptance rounds run across the
        whole trial matrix at once.
        """
        audio = prepared
        fs = audio.sample_rate
        fiber_indices = list(fiber_indices)
        n_fibers = len(fiber_indices)
        n_trials = config.trials_per_fiber
        if n_fibers == 0:
            return

        rates = np.empty((n_fibers, len(audio.samples)), dtype=np.float64)
        max_rates = np.empty(n_fibers)
        bounds = np.empty(n_fibers)
        for row, fiber in enumerate(fibers):
            drive = cochlear_channel(audio, fiber.characteristic_frequency)
            rates[row] = rate_function(drive, fiber, fs)
            max_rates[row] = fiber.max_rate
            bounds[row] = fiber.max_rate * fiber.hazard_scale
        duration = rates.shape[1] / fs

        tau = np.array([f.relative_refractory_tau for f in fibers])
        t_abs = np.array([f.absolute_refractory for f in fibers])

        # draw each trial's candidates from its own stream, then stack
        cand_times, cand_accept, n_cands = [], [], []
        for row, i in enumerate(fiber_indices):
            for t in range(n_trials):
                rng = trial_rng(config.rng_seed, i, t)
                times, accept = _thinning_candidates(rng, bounds[row], duration)
                cand_times.append(times)
                cand_accept.append(accept)
                n_cands.append(len(times))
        width = max(n_cands)
        total = n_fibers * n_trials
        tmat = np.full((total, width), np.inf)
        umat = np.ones((total, width))
        for k in range(total):
            tmat[k, : n_cands[k]] = cand_times[k]
            umat[k, : n_cands[k]] = cand_accept[k]

        row_of = np.repeat(np.arange(n_fibers), n_trials)
        last = np.full(total, -np.inf)
        spikes: list[list[float]] = [[] for _ in range(total)]
        max_r = max_rates[row_of]
        tau_r = tau[row_of]
        abs_r = t_abs[row_of]

        for col in range(width):
            t = tmat[:, col]
            live = t < duration
            if not live.any():
                break
            delta = t - last
            ok = live & (delta >= abs_r)
            if not ok.any():
                continue
            idx = np.minimum((t[ok] * fs).astype(np.intp), rates.shape[1] - 1)
            r = rates[row_of[ok], idx]
            recovery = 1.0 - np.exp(-(delta[ok] - abs_r[ok]) / tau_r[ok])
            fired = umat[ok, col] < (r / max_r[ok]) * recovery
            hit = np.flatnonzero(ok)[fired]
            last[hit] = t[hit]
            for k in hit:
                spikes[k].append(t[k])

        for row, i in enumerate(fiber_indices):
            for t in range(n_trials):
                yield i, t, np.asarray(spikes[row * n_trials + t])

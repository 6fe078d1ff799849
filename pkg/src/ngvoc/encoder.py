"""Encoder orchestration: run an auditory nerve fiber model over a fiber
population and turn the raw spike trains into a smoothed, normalized
neurogram. The model is a plug point; anything that can map a stimulus and a
fiber descriptor to spike times works."""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ngvoc.audio import AudioBuffer, scale_rms_db, _SILENCE_RMS
from ngvoc.dsp import band_centers, band_ranges
from ngvoc.neurogram import (
    Neurogram,
    bin_train,
    n_bins,
    normalize_neurogram,
    smooth_neurogram,
)


class ModelSimulationError(RuntimeError):
    """A fiber simulation failed; carries the fiber/trial that broke."""


@dataclass
class EncoderConfig:
    n_bands: int = 64
    fmin: float = 150.0
    fmax: float = 10500.0
    fibers_per_band: int = 10
    trials_per_fiber: int = 20
    bin_width: float = 36e-6
    smoothing_length: int = 1500
    presentation_level_db_spl: float = 50.0
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.n_bands, self.fibers_per_band, self.trials_per_fiber,
               self.smoothing_length) < 1:
            raise ValueError("all counts must be >= 1")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")

    def band_centers(self) -> np.ndarray:
        return band_centers(self.n_bands, self.fmin, self.fmax)

    def band_ranges(self) -> np.ndarray:
        return band_ranges(self.n_bands, self.fmin, self.fmax)


def trial_rng(seed: int, fiber_index: int, trial_index: int) -> np.random.Generator:
    """Independent, order-free RNG stream for one (fiber, trial) pair.

    Derived by counter-style splitting from the master seed so that the
    execution order of fibers and trials cannot change any result.
    """
    return np.random.default_rng(np.random.SeedSequence((seed, fiber_index, trial_index)))


class AnfModel(abc.ABC):
    """Interface every hearing model plugs into the encoder with.

    ``population`` yields one descriptor per simulated fiber; each must have
    a ``band_index`` attribute placing it on the neurogram's frequency axis.
    ``prepare`` runs once per stimulus (e.g. a coding strategy front end) and
    ``simulate`` maps (prepared stimulus, fiber, RNG stream) to spike times
    in seconds.
    """

    @abc.abstractmethod
    def population(self, config: EncoderConfig) -> Sequence[Any]:
        ...

    def prepare(self, audio: AudioBuffer, config: EncoderConfig) -> Any:
        return audio

    @abc.abstractmethod
    def simulate(self, prepared: Any, fiber: Any, rng: np.random.Generator) -> np.ndarray:
        ...

    def simulate_batch(
        self,
        prepared: Any,
        fibers: Sequence[Any],
        fiber_indices: Sequence[int],
        config: EncoderConfig,
    ):
        """Yield (fiber_index_in_population, trial_index, spike_times).

        The default loops over :meth:`simulate`; models may override with a
        vectorized path but must produce identical spike times.
        """
        for i, fiber in zip(fiber_indices, fibers):
            for t in range(config.trials_per_fiber):
                rng = trial_rng(config.rng_seed, i, t)
                try:
                    yield i, t, self.simulate(prepared, fiber, rng)
                except Exception as exc:
                    raise ModelSimulationError(
                        f"{type(self).__name__}: fiber {i} trial {t} failed: {exc}"
                    ) from exc


def encode(audio: AudioBuffer, model: AnfModel, config: EncoderConfig | None = None) -> Neurogram:
    """Full pipeline: present -> simulate -> bin -> pool -> smooth -> normalize.

    Deterministic for a fixed (audio, config, seed): every (fiber, trial)
    pair gets its own counter-derived RNG stream.
    """
    if config is None:
        config = EncoderConfig()
    if audio.rms() >= _SILENCE_RMS:
        audio = scale_rms_db(audio, config.presentation_level_db_spl, reference="spl")

    fibers = model.population(config)
    prepared = model.prepare(audio, config)

    duration = audio.duration
    frames = n_bins(duration, config.bin_width)
    values = np.zeros((config.n_bands, frames))
    band_of_fiber = [getattr(f, "band_index") for f in fibers]

    try:
        results = model.simulate_batch(prepared, fibers, range(len(fibers)), config)
        for fiber_idx, trial_idx, times in results:
            times = np.asarray(times, dtype=np.float64)
            if len(times) == 0:
                continue
            times = times[(times >= 0) & (times < duration)]
            if len(times) == 0:
                continue
            values[band_of_fiber[fiber_idx]] += bin_train(times, config.bin_width, frames)
    except ModelSimulationError:
        raise
    except Exception as exc:  # keep the failing fiber/trial visible
        raise ModelSimulationError(
            f"model {type(model).__name__} failed during simulation: {exc}"
        ) from exc

    ng = Neurogram(values, config.bin_width, config.band_centers(), normalized=False)
    ng = smooth_neurogram(ng, config.smoothing_length)
    return normalize_neurogram(ng)

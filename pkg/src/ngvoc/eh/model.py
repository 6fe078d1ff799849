"""Electrical-hearing model: coding strategy front end feeding the fiber
dynamics, exposed through the encoder's model interface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ngvoc.audio import AudioBuffer
from ngvoc.dsp import resample_rational
from ngvoc.encoder import AnfModel, EncoderConfig
from ngvoc.eh.dynamics import FiberDynamicsConfig, simulate_fiber_response
from ngvoc.eh.specres import ELECTRODE_FREQS_HZ, Electrodogram, SpecresConfig, specres_encode
from ngvoc.eh.thresholds import (
    ThresholdProfile,
    remap_fiber_frequencies,
    select_fibers_per_band,
    synth_threshold_profile,
)

_SELECTION_SALT = 0x45480001  # keeps fiber selection independent of trial streams


@dataclass
class EhFiber:
    fiber_id: int
    band_index: int
    learned_frequency: float


@dataclass
class PreparedStimulus:
    electrodogram: Electrodogram
    duration: float


class EhModel(AnfModel):
    """Cochlear-implant hearing: strategy encoding once per stimulus, then
    per-fiber threshold dynamics on the shared pulse train."""

    def __init__(
        self,
        profile: ThresholdProfile | None = None,
        specres_config: SpecresConfig | None = None,
        dynamics_config: FiberDynamicsConfig | None = None,
        electrode_operating_freqs: np.ndarray | None = None,
        profile_seed: int = 1,
    ):
        if profile is None:
            profile = synth_threshold_profile(rng=np.random.default_rng(profile_seed))
        self.profile = profile
        self.specres_config = specres_config or SpecresConfig()
        self.dynamics_config = dynamics_config or FiberDynamicsConfig()
        ops = (
            np.asarray(electrode_operating_freqs, dtype=np.float64)
            if electrode_operating_freqs is not None
            else ELECTRODE_FREQS_HZ.copy()
        )
        self.operating_freqs = ops
        self.learned_freqs = remap_fiber_frequencies(profile, ops)

    def population(self, config: EncoderConfig) -> list[EhFiber]:
        rng = np.random.default_rng(
            np.random.SeedSequence((config.rng_seed, _SELECTION_SALT))
        )
        per_band = select_fibers_per_band(
            self.learned_freqs, config.band_ranges(), config.fibers_per_band, rng
        )
        fibers = []
        for band, ids in enumerate(per_band):
            for fid in ids:
                fibers.append(EhFiber(int(fid), band, float(self.learned_freqs[fid])))
        return fibers

    def prepare(self, audio: AudioBuffer, config: EncoderConfig) -> PreparedStimulus:
        target = self.specres_config.sample_rate
        if audio.sample_rate != target:
            resampled = AudioBuffer(
                resample_rational(audio.samples, target, audio.sample_rate), target
            )
        else:
            resampled = audio
        edg = specres_encode(resampled, self.specres_config)
        return PreparedStimulus(edg, audio.duration)

    def simulate(self, prepared: PreparedStimulus, fiber: EhFiber, rng) -> np.ndarray:
        return simulate_fiber_response(
            prepared.electrodogram,
            self.profile,
            fiber.fiber_id,
            self.dynamics_config,
            rng,
            duration=prepared.duration,
        )

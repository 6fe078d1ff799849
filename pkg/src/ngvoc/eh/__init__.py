from ngvoc.eh.model import EhModel
from ngvoc.eh.dynamics import FiberDynamicsConfig, simulate_fiber_response
from ngvoc.eh.specres import ANALYSIS_BANDS_HZ, Electrodogram, SpecresConfig, specres_encode
from ngvoc.eh.thresholds import (
    ThresholdProfile,
    greenwood_frequency,
    load_threshold_profile,
    remap_fiber_frequencies,
    save_threshold_profile,
    select_fibers_per_band,
    synth_threshold_profile,
)

__all__ = [
    "ANALYSIS_BANDS_HZ",
    "EhModel",
    "Electrodogram",
    "FiberDynamicsConfig",
    "SpecresConfig",
    "ThresholdProfile",
    "greenwood_frequency",
    "load_threshold_profile",
    "simulate_fiber_response",
    "remap_fiber_frequencies",
    "save_threshold_profile",
    "select_fibers_per_band",
    "specres_encode",
    "synth_threshold_profile",
]

"""Electrode-to-fiber threshold profiles, cochlear place-frequency mapping,
and the fiber selection that ties electrically driven fibers to neurogram
bands.

The full field-solving model that would compute real activation thresholds
is replaced by a synthetic profile: thresholds grow exponentially with place
distance from the steered stimulation site, which preserves the spatial
structure the dynamics model needs.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NVTP_MAGIC = b"NVTP"
NVTP_VERSION = 1

BM_LENGTH_MM = 35.0

# Greenwood place-frequency map for the human cochlea, x = 0 at the apex
GREENWOOD_A = 165.4
GREENWOOD_ALPHA = 2.1
GREENWOOD_K = 0.88


def greenwood_frequency(place):
    """Acoustic frequency at normalized cochlear place x (0 = apex, 1 = base)."""
    x = np.asarray(place, dtype=np.float64)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("place must lie in [0, 1]")
    f = GREENWOOD_A * (10.0 ** (GREENWOOD_ALPHA * x) - GREENWOOD_K)
    return float(f) if f.ndim == 0 else f


@dataclass
class ThresholdProfile:
    """Activation thresholds (n_fibers x n_virtual_channels), fiber places,
    and per-channel (electrode_low, steering step) descriptors."""

    thresholds: np.ndarray
    fiber_positions: np.ndarray
    channel_electrode_low: np.ndarray  # u16 per channel
    channel_step: np.ndarray           # u16 per channel
    steps_per_pair: int

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        self.fiber_positions = np.asarray(self.fiber_positions, dtype=np.float64)
        if self.thresholds.ndim != 2:
            raise ValueError("thresholds must be 2-D (fibers x channels)")
        if np.any(self.thresholds <= 0):
            raise ValueError("thresholds must be strictly positive")
        if len(self.fiber_positions) != self.thresholds.shape[0]:
            raise ValueError("need one position per fiber")
        if len(self.channel_electrode_low) != self.thresholds.shape[1]:
            raise ValueError("need one descriptor per channel")

    @property
    def n_fibers(self) -> int:
        return self.thresholds.shape[0]

    @property
    def n_channels(self) -> int:
        return self.thresholds.shape[1]

    @property
    def n_electrodes(self) -> int:
        return int(self.channel_electrode_low.max()) + 2

    def channel_index(self, electrode_low: int, step: int) -> int:
        return int(electrode_low) * self.steps_per_pair + int(step)

    def electrode_positions(self) -> np.ndarray:
        """Place of each electrode, taken as the best-coupled fiber of its
        pure (step 0 / final step) channels."""
        n_e = self.n_electrodes
        pos = np.empty(n_e)
        for e in range(n_e - 1):
            col = self.channel_index(e, 0)
            pos[e] = self.fiber_positions[np.argmin(self.thresholds[:, col])]
        last = self.channel_index(n_e - 2, self.steps_per_pair - 1)
        pos[-1] = self.fiber_positions[np.argmin(self.thresholds[:, last])]
        return pos


def synth_threshold_profile(
    n_fibers: int = 3200,
    n_electrodes: int = 16,
    steps: int = 9,
    spread_constant: float = 0.5,
    rng: np.random.Generator | None = None,
    jitter_sigma: float = 0.05,
) -> ThresholdProfile:
    """Synthesize a threshold profile for a uniformly spaced fiber bank.

    Electrodes span the basal portion of the cochlea, with the deepest
    contact reaching two-thirds of the way to the apex. Virtual channels
    interpolate the stimulation site between adjacent electrodes in
    ``steps`` steps (the last step of one pair duplicates the first of the
    next). Threshold = exp(distance_mm * spread_constant), minimized at the
    fiber nearest the site, with optional per-fiber lognormal jitter.
    """
    if min(n_fibers, n_electrodes, steps) < 1:
        raise ValueError("counts must be >= 1")
    fiber_pos = np.linspace(0.0, 1.0, n_fibers)
    electrode_pos = np.linspace(1.0 / 3.0, 1.0, n_electrodes)

    pairs = n_electrodes - 1
    e_low = np.repeat(np.arange(pairs, dtype=np.uint16), steps)
    step = np.tile(np.arange(steps, dtype=np.uint16), pairs)
    frac = step / max(steps - 1, 1)
    sites = electrode_pos[e_low] + frac * (electrode_pos[e_low + 1] - electrode_pos[e_low])

    dist_mm = np.abs(fiber_pos[:, None] - sites[None, :]) * BM_LENGTH_MM
    thresholds = np.exp(dist_mm * spread_constant)
    if rng is not None and jitter_sigma > 0:
        thresholds = thresholds * np.exp(jitter_sigma * rng.standard_normal(n_fibers))[:, None]
    return ThresholdProfile(thresholds, fiber_pos, e_low, step, steps)


def save_threshold_profile(path: str | Path, profile: ThresholdProfile) -> None:
    """Binary layout: magic "NVTP", u16 version, u32 n_fibers, u32 n_channels,
    f64 fiber positions, (u16 electrode_low, u16 step) descriptors, then
    row-major f64 thresholds. Little-endian."""
    with open(path, "wb") as fh:
        fh.write(NVTP_MAGIC)
        fh.write(struct.pack("<HII", NVTP_VERSION, profile.n_fibers, profile.n_channels))
        fh.write(profile.fiber_positions.astype("<f8").tobytes())
        desc = np.empty((profile.n_channels, 2), dtype="<u2")
        desc[:, 0] = profile.channel_electrode_low
        desc[:, 1] = profile.channel_step
        fh.write(desc.tobytes(order="C"))
        fh.write(profile.thresholds.astype("<f8").tobytes(order="C"))


def load_threshold_profile(path: str | Path) -> ThresholdProfile:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != NVTP_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {NVTP_MAGIC!r}")
        version, n_fibers, n_channels = struct.unpack("<HII", fh.read(struct.calcsize("<HII")))
        if version != NVTP_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        pos = np.frombuffer(fh.read(8 * n_fibers), dtype="<f8")
        if len(pos) != n_fibers:
            raise ValueError(f"{path}: truncated fiber positions (got {len(pos)} of {n_fibers})")
        desc_raw = fh.read(4 * n_channels)
        if len(desc_raw) != 4 * n_channels:
            raise ValueError(f"{path}: truncated channel descriptors")
        desc = np.frombuffer(desc_raw, dtype="<u2").reshape(n_channels, 2)
        raw = fh.read(8 * n_fibers * n_channels)
        if len(raw) != 8 * n_fibers * n_channels:
            rows_got = len(raw) // (8 * n_channels)
            raise ValueError(
                f"{path}: truncated threshold matrix (row {rows_got} of {n_fibers})"
            )
        thresholds = np.frombuffer(raw, dtype="<f8").reshape(n_fibers, n_channels)
    steps = int(desc[:, 1].max()) + 1
    if np.any(thresholds <= 0):
        bad = np.argwhere(thresholds <= 0)[0]
        raise ValueError(
            f"{path}: nonpositive threshold at fiber {bad[0]}, channel {bad[1]}"
        )
    return ThresholdProfile(
        thresholds.copy(), pos.copy(), desc[:, 0].copy(), desc[:, 1].copy(), steps
    )


def remap_fiber_frequencies(
    profile: ThresholdProfile,
    electrode_operating_freqs: np.ndarray,
    blend_width: float = 0.25,
) -> np.ndarray:
    """Per-fiber 'learned' frequency under the implant's frequency map.

    Fibers at electrode places take the electrode's operating frequency
    exactly; between electrodes, frequency is interpolated linearly in log
    space. Apically beyond the array, the offset from the natural place
    map decays over ``blend_width`` of the cochlea so the mapping blends
    back to Greenwood values.
    """
    ops = np.asarray(electrode_operating_freqs, dtype=np.float64)
    if np.any(np.diff(ops) <= 0):
        raise ValueError("electrode operating frequencies must be strictly increasing")
    epos = profile.electrode_positions()
    if len(ops) != len(epos):
        raise ValueError(f"expected {len(epos)} operating frequencies, got {len(ops)}")

    x = profile.fiber_positions
    log_learned = np.interp(x, epos, np.log(ops))

    greenwood = np.log(np.maximum(greenwood_frequency(x), 1e-6))
    lo, hi = epos[0], epos[-1]
    out_low = x < lo
    if out_low.any():
        offset = np.log(ops[0]) - np.log(greenwood_frequency(lo))
        fade = np.clip((lo - x[out_low]) / blend_width, 0.0, 1.0)
        log_learned[out_low] = greenwood[out_low] + offset * (1.0 - fade)
    out_high = x > hi
    if out_high.any():
        offset = np.log(ops[-1]) - np.log(greenwood_frequency(hi))
        fade = np.clip((x[out_high] - hi) / blend_width, 0.0, 1.0)
        log_learned[out_high] = greenwood[out_high] + offset * (1.0 - fade)
    return np.exp(log_learned)


def select_fibers_per_band(
    learned_freqs: np.ndarray,
    bands: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Draw up to ``k`` distinct fibers per band, uniformly without
    replacement among fibers whose learned frequency falls in the band.

    Bands short of ``k`` eligible fibers contribute what they have; empty
    bands are left silent with a warning.
    """
    learned = np.asarray(learned_freqs)
    out = []
    for b, (lo, hi) in enumerate(np.asarray(bands, dtype=np.float64)):
        eligible = np.flatnonzero((learned >= lo) & (learned < hi))
        if len(eligible) == 0:
            warnings.warn(f"band {b} ({lo:.0f}-{hi:.0f} Hz) has no eligible fibers; it stays silent")
            out.append(np.array([], dtype=np.intp))
        elif len(eligible) <= k:
            if len(eligible) < k:
                warnings.warn(
                    f"band {b} ({lo:.0f}-{hi:.0f} Hz) has only {len(eligible)} fibers "
                    f"(requested {k}); taking all"
                )
            out.append(np.sort(eligible))
        else:
            out.append(np.sort(rng.choice(eligible, size=k, replace=False)))
    return out

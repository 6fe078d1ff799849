"""Pulse-train-driven fiber dynamics.

A fiber spikes on a pulse when the pulse amplitude crosses its effective
threshold. The effective threshold combines, all in units of the fiber's
base threshold for the pulse's virtual channel:

  * stochasticity - a per-pulse normal perturbation (sigma fraction of the
    deterministic threshold),
  * refractoriness - infinite within the absolute period, then an
    exponential-recovery multiplier,
  * accommodation - a slow leaky integrator fed by every pulse, spike or
    not, scaled by how strongly the pulse drives this fiber,
  * adaptation - a faster leaky integrator bumped on every spike.

Independent Poisson spontaneous spikes are merged in and obey the same
refractoriness. With sigma = 0 and spontaneous rate 0 the process is fully
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ngvoc.eh.specres import Electrodogram
from ngvoc.eh.thresholds import ThresholdProfile

_CHUNK = 2048


@dataclass
class FiberDynamicsConfig:
    stochastic_sigma: float = 0.05
    spont_rate: float = 50.0
    absolute_refractory: float = 0.5e-3
    relative_refractory_tau: float = 0.7e-3
    tau_accommodation: float = 2.0
    tau_adaptation: float = 0.100
    accommodation_rate: float = 1e-5   # threshold units per pulse at unit drive
    adaptation_jump: float = 0.02      # threshold units added per spike

    def __post_init__(self):
        if self.stochastic_sigma < 0 or self.spont_rate < 0:
            raise ValueError("sigma and spontaneous rate must be >= 0")


@dataclass
class FiberDynamicsState:
    accommodation: float = 0.0
    adaptation: float = 0.0
    last_spike_time: float = -np.inf


def _recovery(delta: np.ndarray, t_abs: float, tau: float) -> np.ndarray:
    """Threshold multiplier after a spike: infinite inside the absolute
    refractory period, decaying back to 1 with time constant tau."""
    delta = np.asarray(delta, dtype=np.float64)
    out = np.full(delta.shape, np.inf)
    ok = delta >= t_abs
    denom = 1.0 - np.exp(-(delta[ok] - t_abs) / tau)
    out[ok] = 1.0 / np.maximum(denom, 1e-300)
    return out


def _pulse_channels(edg: Electrodogram, profile: ThresholdProfile) -> np.ndarray:
    if edg.steps != profile.steps_per_pair:
        raise ValueError(
            f"electrodogram uses {edg.steps} steering steps per pair but the "
            f"profile models {profile.steps_per_pair}"
        )
    ch = edg.electrode_low * profile.steps_per_pair + edg.step_index()
    if len(ch) and ch.max() >= profile.n_channels:
        raise ValueError(
            f"pulse channel {int(ch.max())} has no threshold entry "
            f"(profile has {profile.n_channels} channels)"
        )
    return ch.astype(np.intp)


def accommodation_trace(
    edg: Electrodogram, ratio: np.ndarray, config: FiberDynamicsConfig
) -> np.ndarray:
    """Per-pulse accommodation level: every pulse adds in proportion to its
    drive ratio, with exponential decay between the uniformly spaced pulses."""
    n = len(ratio)
    if n == 0:
        return np.zeros(0)
    gaps = np.diff(edg.times)
    dt = float(np.median(gaps)) if len(gaps) else edg.pulse_duration
    lam = np.exp(-dt / config.tau_accommodation)
    return lfilter([1.0], [1.0, -lam], config.accommodation_rate * ratio)


def simulate_fiber_response(
    edg: Electrodogram,
    profile: ThresholdProfile,
    fiber_id: int,
    config: FiberDynamicsConfig | None = None,
    rng: np.random.Generator | None = None,
    duration: float | None = None,
) -> np.ndarray:
    """Spike times for one fiber driven by an electrodogram.

    Event-driven: accommodation is a precomputed filter over all pulses, so
    between spikes the search for the next threshold crossing runs
    vectorized over pulse chunks, skipping chunks that provably cannot
    cross.
    """
    if config is None:
        config = FiberDynamicsConfig()
    if rng is None:
        rng = np.random.default_rng()
    if duration is None:
        duration = edg.duration

    t_pulse = edg.times
    n_pulses = len(t_pulse)
    theta_p = profile.thresholds[fiber_id][_pulse_channels(edg, profile)]
    ratio = edg.amplitude / theta_p if n_pulses else np.zeros(0)
    acc = accommodation_trace(edg, ratio, config)

    sigma = config.stochastic_sigma
    if sigma > 0 and n_pulses:
        z = rng.standard_normal(n_pulses)
    else:
        z = np.zeros(n_pulses)

    if config.spont_rate > 0:
        n_sp = rng.poisson(config.spont_rate * duration)
        spont_times = np.sort(rng.uniform(0.0, duration, n_sp))
        spont_u = rng.random(n_sp)
    else:
        spont_times = np.zeros(0)
        spont_u = np.zeros(0)

    t_abs = config.absolute_refractory
    tau_rel = config.relative_refractory_tau
    tau_ad = config.tau_adaptation
    jump = config.adaptation_jump

    # a pulse whose perturbed base threshold is positive can only cross if
    # ratio >= (1 + sigma z) + acc, because the recovery multiplier is >= 1
    # and adaptation >= 0: prune whole chunks on that necessary condition
    base = 1.0 + sigma * z
    headroom = ratio - acc - sigma * z
    n_chunks = (n_pulses + _CHUNK - 1) // _CHUNK
    chunk_can_cross = np.array([
        bool(np.any((headroom[c * _CHUNK:(c + 1) * _CHUNK] >= 1.0)
                    | (base[c * _CHUNK:(c + 1) * _CHUNK] <= 0.0)))
        for c in range(n_chunks)
    ]) if n_chunks else np.zeros(0, dtype=bool)

    def next_pulse_spike(p_start: int, last_t: float, adapt_level: float, adapt_ref: float):
        for c in range(p_start // _CHUNK, n_chunks):
            if not chunk_can_cross[c]:
                continue
            lo = max(p_start, c * _CHUNK)
            hi = min((c + 1) * _CHUNK, n_pulses)
            if lo >= hi:
                continue
            seg = slice(lo, hi)
            tp = t_pulse[seg]
            rec = _recovery(tp - last_t, t_abs, tau_rel)
            ad = adapt_level * np.exp(-(tp - adapt_ref) / tau_ad) if adapt_level else 0.0
            need = base[seg] * rec + acc[seg] + ad
            need[tp - last_t < t_abs] = np.inf  # nothing fires inside the absolute period
            hit = np.flatnonzero(ratio[seg] >= need)
            if len(hit):
                return lo + int(hit[0])
        return None

    spikes: list[float] = []
    last = -np.inf
    adapt = 0.0
    adapt_t = 0.0
    p0 = 0
    s0 = 0

    while True:
        cand_p = next_pulse_spike(p0, last, adapt, adapt_t)
        t_p = t_pulse[cand_p] if cand_p is not None else np.inf

        # first surviving spontaneous candidate before the pulse crossing
        t_s = np.inf
        s = s0
        while s < len(spont_times):
            t = spont_times[s]
            if t >= t_p:
                break
            delta = t - last
            if delta >= t_abs and spont_u[s] < 1.0 - np.exp(-(delta - t_abs) / tau_rel):
                t_s = t
                break
            s += 1

        if t_s < t_p:
            event = t_s
            s0 = s + 1
            # pulses up to the spontaneous spike stay resolved; rescan after it
            p0 = int(np.searchsorted(t_pulse, event, side="right"))
        elif cand_p is not None and t_p < duration:
            event = t_p
            p0 = cand_p + 1
            s0 = int(np.searchsorted(spont_times, event, side="right"))
        else:
            break

        adapt = adapt * np.exp(-(event - adapt_t) / tau_ad) + jump
        adapt_t = event
        last = event
        spikes.append(float(event))

    return np.asarray(spikes)

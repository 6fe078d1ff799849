import numpy as np
import pytest

from ngvoc.eh.dynamics import FiberDynamicsConfig, simulate_fiber_response
from ngvoc.eh.specres import Electrodogram, SpecresConfig
from ngvoc.eh.thresholds import synth_threshold_profile


def _profile():
    return synth_threshold_profile(n_fibers=200, rng=None)


def _pulse_train(amplitudes, channel=(4, 0), rate_hz=None, weights=None):
    """Uniform train on one virtual channel (e_low, step)."""
    config = SpecresConfig()
    n = len(amplitudes)
    dt = config.pulse_duration if rate_hz is None else 1.0 / rate_hz
    e_low, step = channel
    w = step / 8 if weights is None else weights
    return Electrodogram(
        times=np.arange(n) * dt,
        electrode_low=np.full(n, e_low, dtype=np.intp),
        electrode_high=np.full(n, e_low + 1, dtype=np.intp),
        steering_weight=np.full(n, w, dtype=np.float64),
        amplitude=np.asarray(amplitudes, dtype=np.float64),
        n_electrodes=16,
        strategy_rate=1.0 / dt,
        phase_width=config.phase_width,
        cathodic_first=True,
        steps=9,
    )


def _best_fiber(profile, channel=(4, 0)):
    col = profile.channel_index(*channel)
    return int(np.argmin(profile.thresholds[:, col])), col


class TestSpontaneous:
    def test_rate_50_under_zero_stimulation(self):
        profile = _profile()
        fiber, _ = _best_fiber(profile)
        config = FiberDynamicsConfig()
        edg = _pulse_train(np.zeros(int(10.0 / SpecresConfig().pulse_duration)))
        total = 0
        for t in range(20):
            rng = np.random.default_rng(1000 + t)
            total += len(simulate_fiber_response(edg, profile, fiber, config, rng, duration=10.0))
        rate = total / (10.0 * 20)
        assert abs(rate - 50.0) <= 5.0

    def test_min_isi_100k_spikes(self):
        profile = _profile()
        fiber, _ = _best_fiber(profile)
        config = FiberDynamicsConfig()
        edg = _pulse_train(np.zeros(100))
        isis = []
        t = 0
        while sum(len(i) for i in isis) < 1e5 and t < 150:
            rng = np.random.default_rng(t)
            spikes = simulate_fiber_response(edg, profile, fiber, config, rng, duration=20.0)
            isis.append(np.diff(spikes))
            t += 1
        all_isis = np.concatenate(isis)
        assert len(all_isis) >= 5e4
        assert all_isis.min() >= config.absolute_refractory


class TestDeterministic:
    def _quiet(self):
        return FiberDynamicsConfig(stochastic_sigma=0.0, spont_rate=0.0)

    def test_single_suprathreshold_pulse(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        edg = _pulse_train([2.0 * theta])
        spikes = simulate_fiber_response(edg, profile, fiber, self._quiet(), duration=0.1)
        assert len(spikes) == 1

    def test_subthreshold_pulse_no_spike(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        edg = _pulse_train([0.5 * theta])
        spikes = simulate_fiber_response(edg, profile, fiber, self._quiet(), duration=0.1)
        assert len(spikes) == 0

    def test_fully_deterministic(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        rng = np.random.default_rng(0)
        amps = theta * rng.uniform(0.8, 1.5, 2000)
        edg = _pulse_train(amps)
        a = simulate_fiber_response(edg, profile, fiber, self._quiet())
        b = simulate_fiber_response(edg, profile, fiber, self._quiet())
        np.testing.assert_array_equal(a, b)

    def test_adaptation_lowers_firing_over_time(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        # sustained just-suprathreshold train at the per-channel cycle rate
        rate = SpecresConfig().strategy_rate
        n = int(0.3 * rate)
        edg = _pulse_train(np.full(n, 1.2 * theta), rate_hz=rate)
        spikes = simulate_fiber_response(edg, profile, fiber, self._quiet())
        assert len(spikes) > 5
        windows = np.histogram(spikes, bins=np.arange(0.0, 0.11, 0.02))[0]
        assert windows[0] > 0
        # windowed firing over the first 100 ms trends down
        assert windows[-1] < windows[0]
        assert np.argmax(windows) == 0

    def test_amplitude_scaling_monotone(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        rng = np.random.default_rng(5)
        base_amps = theta * rng.uniform(0.5, 1.4, 1500)
        counts = []
        for alpha in (1.0, 1.3, 1.8):
            edg = _pulse_train(base_amps * alpha)
            counts.append(len(simulate_fiber_response(edg, profile, fiber, self._quiet())))
        assert counts[0] <= counts[1] <= counts[2]

    def test_refractory_blocks_consecutive_pulses(self):
        profile = _profile()
        fiber, col = _best_fiber(profile)
        theta = profile.thresholds[fiber, col]
        # 10 strong pulses only 36 us apart: absolute refractory (0.5 ms)
        # allows just the first to fire
        edg = _pulse_train(np.full(10, 3.0 * theta))
        spikes = simulate_fiber_response(edg, profile, fiber, self._quiet())
        assert len(spikes) == 1


class TestTonotopy:
    def test_nearest_fibers_fire_most(self):
        profile = synth_threshold_profile(n_fibers=400, rng=None)
        config = FiberDynamicsConfig(stochastic_sigma=0.0, spont_rate=0.0)
        channel = (8, 0)
        col = profile.channel_index(*channel)
        best = int(np.argmin(profile.thresholds[:, col]))
        theta = profile.thresholds[best, col]
        edg = _pulse_train(np.full(500, 1.5 * theta), channel=channel)
        counts = np.array([
            len(simulate_fiber_response(edg, profile, f, config))
            for f in range(0, 400, 10)
        ])
        fired = np.flatnonzero(counts)
        assert len(fired) > 0
        sampled_best = np.argmin(np.abs(np.arange(0, 400, 10) - best))
        assert counts[sampled_best] == counts.max()
        # distant fibers stay silent
        assert counts[0] == 0 and counts[-1] == 0

    def test_missing_channel_rejected(self):
        profile = synth_threshold_profile(n_fibers=50, n_electrodes=4, steps=9)
        edg = _pulse_train([1.0], channel=(4, 0))
        with pytest.raises(ValueError, match="channel"):
            simulate_fiber_response(edg, profile, 0, FiberDynamicsConfig(), np.random.default_rng(0))

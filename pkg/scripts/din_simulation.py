"""Staircase convergence statistics for simulated listeners across a range
of true thresholds and psychometric slopes.

Usage: python scripts/din_simulation.py [--runs 200]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ngvoc.din.staircase import StaircaseConfig, compute_srt, new_staircase, staircase_next


def simulate(threshold, slope, runs, rng):
    srts = []
    for _ in range(runs):
        state = new_staircase(StaircaseConfig())
        while not state.complete:
            if slope > 0:
                p = 1.0 / (1.0 + np.exp(-(state.current_snr - threshold) / slope))
                correct = bool(rng.random() < p)
            else:
                correct = state.current_snr >= threshold
            state = staircase_next(state, correct)
        srts.append(compute_srt(state))
    return np.asarray(srts)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--runs", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'threshold':>10} {'slope':>6} {'mean SRT':>9} {'sd':>6} {'bias':>6}")
    for threshold in (-14.0, -10.0, -6.0, -2.0):
        for slope in (0.0, 1.0, 2.0):
            srts = simulate(threshold, slope, args.runs, rng)
            print(f"{threshold:>10.1f} {slope:>6.1f} {srts.mean():>9.2f} "
                  f"{srts.std():>6.2f} {srts.mean() - threshold:>6.2f}")


if __name__ == "__main__":
    main()

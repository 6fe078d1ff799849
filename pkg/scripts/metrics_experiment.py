"""Compare reconstruction quality of the two hearing models on a synthetic
spoken-digit corpus: per-file MSE and MCD, medians per model.

Usage: python scripts/metrics_experiment.py [--n 10] [--out report.csv]
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ngvoc.decoder import DecoderConfig, decode
from ngvoc.encoder import EncoderConfig, encode
from ngvoc.eh import EhModel
from ngvoc.metrics import evaluate_pair, write_metrics_csv
from ngvoc.nh import NhModel
from ngvoc.synth import digit_token


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=10, help="number of digit tokens")
    parser.add_argument("--out", default="metrics_report.csv")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fibers", type=int, default=4)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--gl-iterations", type=int, default=60)
    args = parser.parse_args()

    fs = 24000
    clean = [digit_token(d % 10, fs, duration=0.3) for d in range(args.n)]
    config = EncoderConfig(fibers_per_band=args.fibers, trials_per_fiber=args.trials,
                           rng_seed=args.seed)
    dec = DecoderConfig(gl_iterations=args.gl_iterations)

    rows = []
    models = {"nh": NhModel(), "eh": EhModel()}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, ref in enumerate(clean):
            for label, model in models.items():
                ng = encode(ref, model, config)
                recon = decode(ng, dec, original_rate=fs).audio
                row = evaluate_pair(ref, recon, f"digit{i % 10}_{i}.wav", label)
                rows.append(row)
                print(f"digit {i % 10} [{label}]  mse={row.mse:.6g}  mcd={row.mcd_db:.3f} dB")

    write_metrics_csv(args.out, rows)
    for label in models:
        sub = [r for r in rows if r.condition == label]
        print(f"{label}: median MSE {np.median([r.mse for r in sub]):.6g}, "
              f"median MCD {np.median([r.mcd_db for r in sub]):.3f} dB")
    print(f"report written to {args.out}")


if __name__ == "__main__":
    main()

"""Run a test signal through both hearing models and write the results.

Usage: python scripts/vocode_demo.py [input.wav] [--out-dir demo_out]
Without an input file a 1 kHz tone is synthesized.
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ngvoc.audio import read_wav, scale_rms_db, write_wav
from ngvoc.decoder import DecoderConfig, decode
from ngvoc.encoder import EncoderConfig, encode
from ngvoc.eh import EhModel
from ngvoc.neurogram import save_nvoc
from ngvoc.nh import NhModel
from ngvoc.synth import tone


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("input", nargs="?", help="input WAV (default: 1 kHz tone)")
    parser.add_argument("--out-dir", default="demo_out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fibers", type=int, default=10)
    parser.add_argument("--trials", type=int, default=20)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if args.input:
        audio = read_wav(args.input)
        name = Path(args.input).stem
    else:
        audio = tone(1000.0, 0.5, 24000)
        name = "tone1k"
    write_wav(out / f"{name}_input.wav", scale_rms_db(audio, -20.0))

    config = EncoderConfig(fibers_per_band=args.fibers, trials_per_fiber=args.trials,
                           rng_seed=args.seed)
    for label, model in (("nh", NhModel()), ("eh", EhModel())):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ng = encode(audio, model, config)
        save_nvoc(out / f"{name}_{label}.nvoc", ng)
        result = decode(ng, DecoderConfig(), original_rate=audio.sample_rate)
        write_wav(out / f"{name}_{label}.wav", result.audio)
        peak_band = int(np.argmax(ng.values.mean(axis=1)))
        print(f"{label}: neurogram {ng.n_bands}x{ng.n_frames}, "
              f"strongest band {peak_band} "
              f"({ng.band_frequencies[peak_band]:.0f} Hz), "
              f"spectral error {result.gl_spectral_error:.3f} "
              f"-> {out / f'{name}_{label}.wav'}")


if __name__ == "__main__":
    main()

"""Synthesize the 120 digit-triplet recordings and prepare the full test
corpus (unprocessed + both vocoded conditions).

With the real vocoder pipelines this takes a while; --fast swaps in simple
spectral stand-ins, which is enough for exercising the test service.

Usage: python scripts/build_din_corpus.py --out din_data [--fast]
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ngvoc.audio import AudioBuffer
from ngvoc.decoder import DecoderConfig, decode
from ngvoc.encoder import EncoderConfig, encode
from ngvoc.din.corpus import prepare_stimuli
from ngvoc.synth import make_triplet_corpus


def real_vocoder(model_name, seed, fibers, trials, gl_iterations):
    from ngvoc.eh import EhModel
    from ngvoc.nh import NhModel

    model = NhModel() if model_name == "nh" else EhModel()
    config = EncoderConfig(fibers_per_band=fibers, trials_per_fiber=trials,
                           rng_seed=seed)
    dec = DecoderConfig(gl_iterations=gl_iterations)

    def vocode(audio):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ng = encode(audio, model, config)
        return decode(ng, dec, original_rate=audio.sample_rate).audio

    return vocode


def fast_stand_in(cutoff_hz):
    from scipy.signal import lfilter

    def vocode(audio):
        a = np.exp(-2 * np.pi * cutoff_hz / audio.sample_rate)
        return AudioBuffer(lfilter([1 - a], [1, -a], audio.samples), audio.sample_rate)

    return vocode


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="din_data")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sample-rate", type=int, default=24000)
    parser.add_argument("--fast", action="store_true",
                        help="spectral stand-ins instead of the full pipelines")
    parser.add_argument("--fibers", type=int, default=4)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--gl-iterations", type=int, default=60)
    args = parser.parse_args()

    out = Path(args.out)
    triplet_dir = out / "triplets"
    labels = make_triplet_corpus(triplet_dir, n_triplets=120,
                                 sample_rate=args.sample_rate, seed=args.seed)
    print(f"synthesized {len(labels)} triplets in {triplet_dir}")

    if args.fast:
        vocoders = {"nh_vocoded": fast_stand_in(5000.0),
                    "eh_vocoded": fast_stand_in(2500.0)}
    else:
        vocoders = {
            "nh_vocoded": real_vocoder("nh", args.seed, args.fibers, args.trials,
                                       args.gl_iterations),
            "eh_vocoded": real_vocoder("eh", args.seed, args.fibers, args.trials,
                                       args.gl_iterations),
        }

    corpus = prepare_stimuli(triplet_dir, out / "corpus", vocoders,
                             seed=args.seed, progress=print)
    print(f"corpus complete: {corpus.file_count()} files in {out / 'corpus'}")
    print(f"serve it with: ngvoc din-serve --corpus {out / 'corpus'} "
          f"--data-dir {out / 'sessions'}")


if __name__ == "__main__":
    main()

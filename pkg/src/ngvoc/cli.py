"""Command-line interface tying the pipeline together for batch use.

Configuration precedence: built-in defaults (the reference processing
configuration), then values from --config (JSON), then explicit flags.
Exit codes: 0 success, 1 processing failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from ngvoc.audio import read_wav, write_wav
from ngvoc.decoder import DecoderConfig, decode
from ngvoc.encoder import EncoderConfig, encode
from ngvoc.neurogram import load_nvoc, save_nvoc

EXIT_OK = 0
EXIT_PROCESSING = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {p} is not valid JSON: {exc}")


def _merge_config(cls, file_values: dict, section: str, flag_values: dict):
    """defaults <- config-file section <- explicit CLI flags"""
    values = dict(file_values.get(section, {}))
    values.update({k: v for k, v in flag_values.items() if v is not None})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise CliError(f"unknown {section} config keys: {sorted(unknown)}")
    return cls(**values)


def _build_model(name: str, seed: int):
    if name == "nh":
        from ngvoc.nh import NhModel
        return NhModel()
    if name == "eh":
        from ngvoc.eh import EhModel
        return EhModel(profile_seed=seed)
    raise CliError(f"unknown model {name!r}, expected 'nh' or 'eh'")


def _read_input(path: str):
    p = Path(path)
    if not p.exists():
        raise CliError(f"input file not found: {p}")
    try:
        return read_wav(p)
    except Exception as exc:
        raise CliError(f"cannot read {p}: {exc}")


def cmd_encode(args, file_config) -> int:
    audio = _read_input(args.input)
    config = _merge_config(EncoderConfig, file_config, "encoder", {
        "n_bands": args.bands,
        "fibers_per_band": args.fibers,
        "trials_per_fiber": args.trials,
        "rng_seed": args.seed,
    })
    model = _build_model(args.model, config.rng_seed)
    ng = encode(audio, model, config)
    save_nvoc(args.out, ng)
    activity = ng.values.sum()
    print(f"{args.out}: {ng.n_bands} bands x {ng.n_frames} frames, "
          f"bin width {ng.bin_width * 1e6:.1f} us, duration {ng.duration:.3f} s, "
          f"total normalized activity {activity:.1f}")
    return EXIT_OK


def cmd_decode(args, file_config) -> int:
    p = Path(args.input)
    if not p.exists():
        raise CliError(f"input file not found: {p}")
    ng = load_nvoc(p)
    config = _merge_config(DecoderConfig, file_config, "decoder", {
        "gl_iterations": args.iterations,
    })
    result = decode(ng, config, original_rate=args.rate)
    write_wav(args.out, result.audio)
    print(f"{args.out}: {result.audio.duration:.3f} s at {result.audio.sample_rate} Hz, "
          f"final spectral error {result.gl_spectral_error:.4f}")
    return EXIT_OK


def cmd_vocode(args, file_config) -> int:
    audio = _read_input(args.input)
    enc_config = _merge_config(EncoderConfig, file_config, "encoder", {
        "n_bands": args.bands,
        "fibers_per_band": args.fibers,
        "trials_per_fiber": args.trials,
        "rng_seed": args.seed,
    })
    dec_config = _merge_config(DecoderConfig, file_config, "decoder", {})
    model = _build_model(args.model, enc_config.rng_seed)
    ng = encode(audio, model, enc_config)
    result = decode(ng, dec_config, original_rate=audio.sample_rate)
    write_wav(args.out, result.audio)
    print(f"{args.out}: vocoded through {args.model} model, "
          f"spectral error {result.gl_spectral_error:.4f}")
    return EXIT_OK


def cmd_metrics(args, file_config) -> int:
    from ngvoc.metrics import evaluate_pair, write_metrics_csv

    ref_dir, recon_dir = Path(args.reference_dir), Path(args.reconstructed_dir)
    for d in (ref_dir, recon_dir):
        if not d.is_dir():
            raise CliError(f"not a directory: {d}")
    refs = sorted(ref_dir.glob("*.wav"))
    if not refs:
        raise CliError(f"no WAV files in {ref_dir}")
    rows = []
    for ref_path in refs:
        recon_path = recon_dir / ref_path.name
        if not recon_path.exists():
            raise CliError(f"missing reconstruction for {ref_path.name} in {recon_dir}")
        rows.append(evaluate_pair(read_wav(ref_path), read_wav(recon_path),
                                  ref_path.name, args.condition))
    write_metrics_csv(args.out, rows)
    mses = sorted(r.mse for r in rows)
    mcds = sorted(r.mcd_db for r in rows)
    print(f"{args.out}: {len(rows)} files, median MSE {mses[len(mses) // 2]:.6g}, "
          f"median MCD {mcds[len(mcds) // 2]:.3f} dB")
    return EXIT_OK


def cmd_din_prepare(args, file_config) -> int:
    from ngvoc.din.corpus import DEFAULT_SNR_GRID, prepare_stimuli

    enc_config = _merge_config(EncoderConfig, file_config, "encoder", {
        "n_bands": args.bands,
        "fibers_per_band": args.fibers,
        "trials_per_fiber": args.trials,
        "rng_seed": args.seed,
    })
    dec_config = _merge_config(DecoderConfig, file_config, "decoder", {})

    def vocoder(model_name: str):
        model = _build_model(model_name, enc_config.rng_seed)

        def run(audio):
            ng = encode(audio, model, enc_config)
            return decode(ng, dec_config, original_rate=audio.sample_rate).audio

        return run

    vocoders = {}
    if not args.skip_vocoded:
        vocoders = {"nh_vocoded": vocoder("nh"), "eh_vocoded": vocoder("eh")}
    corpus = prepare_stimuli(
        args.triplet_dir,
        args.out,
        vocoders,
        snr_grid=DEFAULT_SNR_GRID,
        seed=args.seed if args.seed is not None else 0,
        expected_triplets=args.expected_triplets,
        progress=print if args.verbose else None,
    )
    print(f"{args.out}: {corpus.file_count()} files "
          f"({len(corpus.triplets)} triplets x {len(corpus.snr_grid)} SNRs x "
          f"{len(corpus.conditions)} conditions)")
    return EXIT_OK


def cmd_din_serve(args, file_config) -> int:
    from ngvoc.din.service import DinServiceConfig, run_service

    config = DinServiceConfig.from_sources(
        args.config,
        corpus_dir=args.corpus,
        data_dir=args.data_dir,
        port=args.port,
    )
    print(f"serving digits-in-noise test on {config.host}:{config.port} "
          f"(corpus {config.corpus_dir})")
    run_service(config)
    return EXIT_OK


def cmd_din_simulate(args, file_config) -> int:
    from ngvoc.din.staircase import StaircaseConfig, compute_srt, new_staircase, staircase_next

    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    srts = []
    for _ in range(args.runs):
        state = new_staircase(StaircaseConfig())
        while not state.complete:
            if args.slope > 0:
                p = 1.0 / (1.0 + np.exp(-(state.current_snr - args.threshold) / args.slope))
                correct = bool(rng.random() < p)
            else:
                correct = state.current_snr >= args.threshold
            state = staircase_next(state, correct)
        srts.append(compute_srt(state))
    srts = np.asarray(srts)
    print(f"{args.runs} simulated runs, listener threshold {args.threshold:+.1f} dB: "
          f"SRT mean {srts.mean():+.3f} dB, sd {srts.std():.3f} dB")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngvoc",
        description="neurogram vocoder: encode, decode, evaluate, and run the "
                    "digits-in-noise service",
    )
    parser.add_argument("--config", help="JSON config file with encoder/decoder sections")
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for batch commands (currently advisory)")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="WAV to neurogram file")
    enc.add_argument("input")
    enc.add_argument("--model", choices=("nh", "eh"), default="nh")
    enc.add_argument("--out", required=True)
    enc.add_argument("--bands", type=int, default=None)
    enc.add_argument("--fibers", type=int, default=None)
    enc.add_argument("--trials", type=int, default=None)
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="neurogram file to WAV")
    dec.add_argument("input")
    dec.add_argument("--out", required=True)
    dec.add_argument("--rate", type=int, default=None, help="output sample rate")
    dec.add_argument("--iterations", type=int, default=None)
    dec.set_defaults(func=cmd_decode)

    voc = sub.add_parser("vocode", help="encode then decode in one step")
    voc.add_argument("input")
    voc.add_argument("--model", choices=("nh", "eh"), default="nh")
    voc.add_argument("--out", required=True)
    voc.add_argument("--bands", type=int, default=None)
    voc.add_argument("--fibers", type=int, default=None)
    voc.add_argument("--trials", type=int, default=None)
    voc.set_defaults(func=cmd_vocode)

    met = sub.add_parser("metrics", help="batch MSE/MCD report")
    met.add_argument("reference_dir")
    met.add_argument("reconstructed_dir")
    met.add_argument("--condition", default="default")
    met.add_argument("--out", required=True)
    met.set_defaults(func=cmd_metrics)

    prep = sub.add_parser("din-prepare", help="build the test stimulus corpus")
    prep.add_argument("triplet_dir")
    prep.add_argument("--out", required=True)
    prep.add_argument("--expected-triplets", type=int, default=120)
    prep.add_argument("--skip-vocoded", action="store_true",
                      help="prepare only the unprocessed condition")
    prep.add_argument("--bands", type=int, default=None)
    prep.add_argument("--fibers", type=int, default=None)
    prep.add_argument("--trials", type=int, default=None)
    prep.set_defaults(func=cmd_din_prepare)

    serve = sub.add_parser("din-serve", help="run the test HTTP service")
    serve.add_argument("--corpus", default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=cmd_din_serve)

    sim = sub.add_parser("din-simulate", help="staircase statistics for a model listener")
    sim.add_argument("--threshold", type=float, default=-10.0)
    sim.add_argument("--slope", type=float, default=0.0,
                     help="psychometric slope in dB (0 = deterministic)")
    sim.add_argument("--runs", type=int, default=100)
    sim.set_defaults(func=cmd_din_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_config = _load_config_file(args.config)
        return args.func(args, file_config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_PROCESSING
    except Exception as exc:
        print(f"processing failed: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())

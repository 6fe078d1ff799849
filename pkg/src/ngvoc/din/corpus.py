"""Offline stimulus preparation for the digits-in-noise test: mixing every
triplet with fresh noise crops over the SNR grid, vocoding, normalizing, and
the manifest that makes the corpus reloadable."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ngvoc.audio import AudioBuffer, read_wav, scale_rms_db, write_wav
from ngvoc.metrics import mix_at_snr, speech_shaped_noise

MANIFEST_NAME = "manifest.json"
UNPROCESSED = "unprocessed"
DEFAULT_SNR_GRID = tuple(float(s) for s in range(-20, 11, 2))  # 16 conditions

Vocoder = Callable[[AudioBuffer], AudioBuffer]


@dataclass
class DinStimulusCorpus:
    root: Path
    triplets: list[str]
    snr_grid: list[float]
    conditions: list[str]
    normalize_db_fs: float = -20.0

    def file_for(self, triplet: str, condition: str, snr: float) -> Path:
        return self.root / condition / _snr_dirname(snr) / f"{triplet}.wav"

    def validate_complete(self) -> None:
        missing = []
        for cond in self.conditions:
            for snr in self.snr_grid:
                for triplet in self.triplets:
                    if not self.file_for(triplet, cond, snr).exists():
                        missing.append(f"{cond}/{_snr_dirname(snr)}/{triplet}.wav")
        if missing:
            preview = ", ".join(missing[:5])
            raise FileNotFoundError(
                f"corpus at {self.root} is incomplete: {len(missing)} files missing "
                f"(e.g. {preview})"
            )

    def file_count(self) -> int:
        return len(self.triplets) * len(self.snr_grid) * len(self.conditions)


def _snr_dirname(snr: float) -> str:
    return f"snr_{snr:+.0f}dB".replace("+", "p").replace("-", "m")


def prepare_stimuli(
    triplet_dir: str | Path,
    out_dir: str | Path,
    vocoders: dict[str, Vocoder],
    snr_grid: tuple[float, ...] = DEFAULT_SNR_GRID,
    noise: AudioBuffer | None = None,
    seed: int = 0,
    normalize_db_fs: float = -20.0,
    expected_triplets: int | None = 120,
    progress: Callable[[str], None] | None = None,
) -> DinStimulusCorpus:
    """Build the full stimulus corpus.

    Every triplet is mixed with a freshly sampled noise crop at each SNR to
    form the unprocessed condition; each vocoder in ``vocoders`` (name ->
    callable) then processes the same mixtures into its own condition. All
    files are normalized to the presentation level and a manifest is
    written last.
    """
    triplet_dir = Path(triplet_dir)
    out_dir = Path(out_dir)
    wavs = sorted(triplet_dir.glob("*.wav"))
    if expected_triplets is not None and len(wavs) != expected_triplets:
        names = ", ".join(w.name for w in wavs[:5]) or "none"
        raise FileNotFoundError(
            f"expected {expected_triplets} triplet recordings in {triplet_dir}, "
            f"found {len(wavs)} (first: {names})"
        )
    if not wavs:
        raise FileNotFoundError(f"no triplet recordings in {triplet_dir}")

    rng = np.random.default_rng(seed)
    clips = {w.stem: read_wav(w) for w in wavs}
    triplets = sorted(clips)

    if noise is None:
        total = sum(c.duration for c in clips.values())
        noise = speech_shaped_noise(list(clips.values()), max(10.0, total / 4), rng)

    conditions = [UNPROCESSED] + list(vocoders)
    corpus = DinStimulusCorpus(out_dir, triplets, list(snr_grid), conditions,
                               normalize_db_fs)

    for snr in snr_grid:
        for cond in conditions:
            (out_dir / cond / _snr_dirname(snr)).mkdir(parents=True, exist_ok=True)
        for triplet in triplets:
            mixed = mix_at_snr(clips[triplet], noise, snr, rng, normalize_db_fs)
            write_wav(corpus.file_for(triplet, UNPROCESSED, snr), mixed, dtype="pcm16")
            for name, vocode in vocoders.items():
                out = vocode(mixed)
                if out.rms() > 0:
                    out = scale_rms_db(out, normalize_db_fs)
                write_wav(corpus.file_for(triplet, name, snr), out, dtype="pcm16")
        if progress is not None:
            progress(f"prepared {len(triplets) * len(conditions)} files at {snr:+.0f} dB SNR")

    manifest = {
        "triplets": triplets,
        "snr_grid": list(snr_grid),
        "conditions": conditions,
        "normalize_db_fs": normalize_db_fs,
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    return corpus


def load_corpus(root: str | Path) -> DinStimulusCorpus:
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {root}")
    manifest = json.loads(manifest_path.read_text())
    corpus = DinStimulusCorpus(
        root,
        list(manifest["triplets"]),
        [float(s) for s in manifest["snr_grid"]],
        list(manifest["conditions"]),
        float(manifest.get("normalize_db_fs", -20.0)),
    )
    corpus.validate_complete()
    return corpus

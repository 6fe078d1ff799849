"""Neurogram vocoder: encode audio through auditory nerve fiber models into
neurograms and reconstruct audible waveforms from them."""

__version__ = "0.1.0"

from ngvoc.audio import AudioBuffer, read_wav, scale_rms_db, write_wav
from ngvoc.decoder import DecoderConfig, decode
from ngvoc.encoder import AnfModel, EncoderConfig, encode
from ngvoc.neurogram import Neurogram, load_nvoc, save_nvoc

__all__ = [
    "AnfModel",
    "AudioBuffer",
    "DecoderConfig",
    "EncoderConfig",
    "Neurogram",
    "__version__",
    "decode",
    "encode",
    "load_nvoc",
    "read_wav",
    "save_nvoc",
    "scale_rms_db",
    "write_wav",
]

"""Mono WAV file I/O: PCM 16-bit and IEEE float-32.

Samples are promoted to float64 on read (PCM 16-bit normalized to roughly
[-1, 1]); the on-disk format is chosen at write time.
"""

import os

import numpy as np
from scipy.io import wavfile

from .signals import Waveform

__all__ = ["read_wav", "write_wav"]

PCM16_FULL_SCALE = 32767.0


def read_wav(path: str | os.PathLike) -> Waveform:
    """Read a mono WAV file; rejects multi-channel input."""
    sample_rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_FULL_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype} "
                         "(expected PCM 16-bit or IEEE float)")
    return Waveform(samples, int(sample_rate))


def write_wav(path: str | os.PathLike, w: Waveform, fmt: str = "float32") -> None:
    """Write a mono WAV file as IEEE float-32 or PCM 16-bit (clipped to [-1, 1])."""
    if fmt == "float32":
        wavfile.write(path, w.sample_rate, w.samples.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(w.samples, -1.0, 1.0)
        wavfile.write(path, w.sample_rate,
                      np.round(clipped * PCM16_FULL_SCALE).astype(np.int16))
    else:
        raise ValueError(f"unsupported WAV format {fmt!r} (expected 'float32' or 'pcm16')")

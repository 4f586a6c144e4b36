"""Time-domain waveform container and elementary signal algebra.

All numerical work is done in float64 regardless of the on-disk sample
format; the projection solves downstream are too ill-conditioned for
float32.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Waveform",
    "MixtureSpec",
    "add",
    "scale",
    "inner",
    "energy",
    "mix_at_snr",
]

NOISE_SCALING_MODES = ("full-signal-power",)


@dataclass(frozen=True, eq=False)
class Waveform:
    """A finite single-channel signal: float64 samples plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"waveform samples must be 1-D, got shape {samples.shape}")
        if samples.size < 1:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite (no NaN/Inf)")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class MixtureSpec:
    """How to scale noise against speech when synthesizing a mixture."""

    target_snr_db: float
    noise_scaling_mode: str = "full-signal-power"

    def __post_init__(self):
        if not math.isfinite(self.target_snr_db):
            raise ValueError("target_snr_db must be finite")
        if self.noise_scaling_mode not in NOISE_SCALING_MODES:
            raise ValueError(
                f"unknown noise_scaling_mode {self.noise_scaling_mode!r}; "
                f"expected one of {NOISE_SCALING_MODES}"
            )


def _check_compatible(a: Waveform, b: Waveform, op: str) -> None:
    if len(a) != len(b):
        raise ValueError(f"{op}: length mismatch ({len(a)} vs {len(b)})")
    if a.sample_rate != b.sample_rate:
        raise ValueError(f"{op}: sample rate mismatch ({a.sample_rate} vs {b.sample_rate})")


def add(a: Waveform, b: Waveform) -> Waveform:
    """Elementwise sum of two equal-length, equal-rate waveforms."""
    _check_compatible(a, b, "add")
    return Waveform(a.samples + b.samples, a.sample_rate)


def scale(a: Waveform, c: float) -> Waveform:
    """Multiply every sample by a finite scalar."""
    c = float(c)
    if not math.isfinite(c):
        raise ValueError(f"scale factor must be finite, got {c!r}")
    return Waveform(a.samples * c, a.sample_rate)


def inner(a: Waveform, b: Waveform) -> float:
    """Euclidean inner product of two equal-length waveforms."""
    _check_compatible(a, b, "inner")
    return float(np.dot(a.samples, b.samples))


def energy(a: Waveform) -> float:
    """Total energy, i.e. the squared Euclidean norm of the samples."""
    return float(np.dot(a.samples, a.samples))


def mix_at_snr(s: Waveform, n: Waveform, spec: MixtureSpec) -> tuple[Waveform, Waveform]:
    """Scale ``n`` so the s-to-n power ratio hits the target, then mix.

    Returns ``(y, n_scaled)`` with ``y = s + n_scaled`` and
    ``10*log10(energy(s) / energy(n_scaled)) == spec.target_snr_db``.
    SNR is measured on full-signal power; there is no voice-activity
    weighting.
    """
    _check_compatible(s, n, "mix_at_snr")
    e_s, e_n = energy(s), energy(n)
    if e_s == 0.0 or e_n == 0.0:
        raise ValueError("mix_at_snr requires both signals to have nonzero energy")
    c = math.sqrt(e_s / (e_n * 10.0 ** (spec.target_snr_db / 10.0)))
    n_scaled = scale(n, c)
    return add(s, n_scaled), n_scaled

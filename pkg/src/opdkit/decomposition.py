"""Split an enhanced signal into target, noise-error, and artifact-error parts.

With P_s the projector onto delayed copies of the clean speech s and P_sn
the projector onto delayed copies of both s and the noise n:

    s_target = P_s s_hat
    e_noise  = P_sn s_hat - P_s s_hat
    e_artif  = s_hat - P_sn s_hat

so the three components reconstruct s_hat exactly.  The artifact part is
the portion of the enhancement error that no linear combination of delayed
speech/noise copies can explain.  Decomposition is computed over the whole
utterance, not in frames.
"""

import os
from dataclasses import dataclass

import numpy as np

from .projection import DEFAULT_MAX_DELAY, ProjectionBasis, build_basis, project
from .signals import Waveform, energy
from .wavio import write_wav

__all__ = [
    "Decomposition",
    "Decomposer",
    "decompose",
    "recompose",
    "make_decomposition",
    "export_components",
    "ARTIFACT_FREE_ENERGY_RATIO",
    "COMPONENT_SUFFIXES",
]

# e_artif below this fraction of the total signal energy is numerical dust;
# the decomposition is flagged artifact-free so SAR reports +inf instead of
# a ratio against round-off noise.
ARTIFACT_FREE_ENERGY_RATIO = 1e-12

COMPONENT_SUFFIXES = {
    "s_target": ".target.wav",
    "e_noise": ".enoise.wav",
    "e_artif": ".eartif.wav",
}


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Target / noise-error / artifact-error triple for one enhanced signal."""

    s_target: Waveform
    e_noise: Waveform
    e_artif: Waveform
    max_delay: int
    regularization_events: tuple[str, ...]
    artifact_free: bool

    @property
    def sample_rate(self) -> int:
        return self.s_target.sample_rate


def make_decomposition(s_target: Waveform, e_noise: Waveform, e_artif: Waveform,
                       max_delay: int,
                       regularization_events: tuple[str, ...] = ()) -> Decomposition:
    """Assemble a Decomposition, computing the artifact-free flag from the parts."""
    total = s_target.samples + e_noise.samples + e_artif.samples
    total_energy = float(np.dot(total, total))
    artifact_free = energy(e_artif) <= ARTIFACT_FREE_ENERGY_RATIO * total_energy
    return Decomposition(
        s_target=s_target,
        e_noise=e_noise,
        e_artif=e_artif,
        max_delay=max_delay,
        regularization_events=regularization_events,
        artifact_free=artifact_free,
    )


class Decomposer:
    """Reusable projection bases for one (speech, noise) reference pair.

    Building the two Gram systems dominates the cost of a decomposition, so
    parameter sweeps that re-decompose many modified signals against the
    same references should share one Decomposer.
    """

    def __init__(self, s: Waveform, n: Waveform, max_delay: int = DEFAULT_MAX_DELAY):
        self.basis_speech: ProjectionBasis = build_basis([s], max_delay)
        self.basis_joint: ProjectionBasis = build_basis([s, n], max_delay)
        self.max_delay = max_delay

    @property
    def regularization_events(self) -> tuple[str, ...]:
        return (self.basis_speech.regularization_events
                + self.basis_joint.regularization_events)

    def decompose(self, s_hat: Waveform) -> Decomposition:
        p_s = project(self.basis_speech, s_hat)
        p_sn = project(self.basis_joint, s_hat)
        e_noise = Waveform(p_sn.samples - p_s.samples, s_hat.sample_rate)
        e_artif = Waveform(s_hat.samples - p_sn.samples, s_hat.sample_rate)
        return make_decomposition(p_s, e_noise, e_artif, self.max_delay,
                                  self.regularization_events)


def decompose(s_hat: Waveform, s: Waveform, n: Waveform,
              max_delay: int = DEFAULT_MAX_DELAY) -> Decomposition:
    """One-shot decomposition of ``s_hat`` against references ``s`` and ``n``."""
    if len(s_hat) != len(s) or s_hat.sample_rate != s.sample_rate:
        raise ValueError("decompose: s_hat and s must have equal length and sample rate")
    return Decomposer(s, n, max_delay).decompose(s_hat)


def recompose(d: Decomposition) -> Waveform:
    """Sum of the three components; reconstructs the decomposed signal."""
    return Waveform(d.s_target.samples + d.e_noise.samples + d.e_artif.samples,
                    d.sample_rate)


def export_components(d: Decomposition, out_dir: str | os.PathLike, stem: str,
                      fmt: str = "float32") -> dict[str, str]:
    """Write the three components as WAV files; returns component -> path."""
    paths = {}
    for name, suffix in COMPONENT_SUFFIXES.items():
        path = os.path.join(out_dir, stem + suffix)
        write_wav(path, getattr(d, name), fmt=fmt)
        paths[name] = path
    return paths

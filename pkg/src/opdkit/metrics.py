"""Energy-ratio metrics over a decomposition, in dB.

    SDR = 10 log10( ||s_target||^2 / ||e_noise + e_artif||^2 )
    SNR = 10 log10( ||s_target||^2 / ||e_noise||^2 )
    SAR = 10 log10( ||s_target + e_noise||^2 / ||e_artif||^2 )

The SAR numerator is the projection of the enhanced signal onto the joint
speech-noise subspace, which also admits a closed-form prediction of how
much adding back a scaled observation improves SAR (see
:func:`sar_improvement_closed_form`).
"""

import math
from dataclasses import dataclass

import numpy as np

from .decomposition import ARTIFACT_FREE_ENERGY_RATIO, Decomposition
from .signals import Waveform, energy

__all__ = [
    "MetricsReport",
    "NoTargetError",
    "compute_metrics",
    "sar_improvement_closed_form",
    "db_to_str",
]


class NoTargetError(ValueError):
    """The decomposition has (numerically) no target component; SDR/SNR undefined."""


@dataclass(frozen=True)
class MetricsReport:
    """SDR/SNR/SAR in dB (possibly +inf) plus the underlying energies."""

    sdr_db: float
    snr_db: float
    sar_db: float
    target_energy: float
    noise_energy: float
    artifact_energy: float
    projected_energy: float

    @property
    def energies(self) -> tuple[float, float, float, float]:
        return (self.target_energy, self.noise_energy,
                self.artifact_energy, self.projected_energy)

    def as_dict(self) -> dict:
        """JSON-ready mapping; infinite dB values become the string 'inf'."""
        return {
            "sdr_db": _db_json(self.sdr_db),
            "snr_db": _db_json(self.snr_db),
            "sar_db": _db_json(self.sar_db),
            "energies": {
                "target": self.target_energy,
                "noise": self.noise_energy,
                "artifact": self.artifact_energy,
                "projected": self.projected_energy,
            },
        }


def db_to_str(value: float) -> str:
    """Full-precision text form of a dB value; 'inf' / '-inf' when infinite."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def _db_json(value: float):
    return db_to_str(value) if math.isinf(value) else float(value)


def _ratio_db(num: float, den: float, dust: float) -> float:
    # Denominators at or below numerical dust count as zero error energy.
    if den <= dust:
        return math.inf
    return 10.0 * math.log10(num / den)


def compute_metrics(d: Decomposition) -> MetricsReport:
    """SDR/SNR/SAR of a decomposition.

    Error energies below ``ARTIFACT_FREE_ENERGY_RATIO`` of the total signal
    energy are treated as exactly zero, so a perfect enhancement reports
    +inf on all three metrics instead of a ratio against round-off noise.
    SAR specifically honors the decomposition's artifact-free flag.
    """
    e_target = energy(d.s_target)
    e_noise = energy(d.e_noise)
    e_artif = energy(d.e_artif)
    projected = d.s_target.samples + d.e_noise.samples
    e_projected = float(np.dot(projected, projected))
    total = e_projected + e_artif
    dust = ARTIFACT_FREE_ENERGY_RATIO * total

    if e_target <= dust:
        raise NoTargetError(
            "no-target: target component energy is numerically zero; SDR/SNR undefined"
        )

    sar = math.inf if d.artifact_free else 10.0 * math.log10(e_projected / e_artif)
    return MetricsReport(
        sdr_db=_ratio_db(e_target, e_noise + e_artif, dust),
        snr_db=_ratio_db(e_target, e_noise, dust),
        sar_db=sar,
        target_energy=e_target,
        noise_energy=e_noise,
        artifact_energy=e_artif,
        projected_energy=e_projected,
    )


def sar_improvement_closed_form(d: Decomposition, y: Waveform, omega_obs: float) -> float:
    """Predicted SAR gain (dB) from adding ``omega_obs * y`` to the enhanced signal.

    Because the observation lies in the speech-noise subspace, adding it
    back leaves the artifact component untouched and only grows the
    projected energy, giving

        SARi = 10 log10[ 1 + (w^2 ||y||^2 + 2 w <p, y>) / ||p||^2 ]

    with ``p = s_target + e_noise`` (the projected enhanced signal) and
    ``w = omega_obs``.  The result can be negative when ``<p, y> < 0``.
    """
    omega = float(omega_obs)
    if not math.isfinite(omega) or omega < 0:
        raise ValueError(f"omega_obs must be finite and >= 0, got {omega_obs!r}")
    if len(y) != len(d.s_target) or y.sample_rate != d.sample_rate:
        raise ValueError("sar_improvement_closed_form: y incompatible with decomposition")
    p = d.s_target.samples + d.e_noise.samples
    e_projected = float(np.dot(p, p))
    if e_projected == 0.0:
        raise ValueError("sar_improvement_closed_form: projected signal has zero energy")
    cross = float(np.dot(p, y.samples))
    argument = 1.0 + (omega * omega * energy(y) + 2.0 * omega * cross) / e_projected
    if argument <= 0.0:
        # only reachable when p is (anti)parallel to y and omega cancels it
        return -math.inf
    return 10.0 * math.log10(argument)

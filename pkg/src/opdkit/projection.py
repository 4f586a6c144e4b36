"""Orthogonal projection onto subspaces spanned by delayed reference copies.

A reference delayed by ``tau`` is zero-padded at the head and truncated to
the original length ``T``, so every delayed copy lives in the same R^T as
the signals being projected and orthogonality statements are exact.  The
projector onto the span of delays ``0 .. L-1`` of one or two references is
never materialized as a T-by-T matrix: a Gram system over the delayed
copies is solved for combination coefficients and the projection is
synthesized as FIR filtering of the references.

Correlations are computed with FFTs of length >= T + L - 1.  Because the
delayed copies are truncated at T rather than extended, the Gram matrix
differs from the plain Toeplitz correlation matrix by products of the
reference tails that fall off the end; that correction is applied exactly
(see ``_gram_block``).
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.fft import next_fast_len, rfft, irfft
from scipy.linalg import LinAlgError, cho_factor, cho_solve, toeplitz

from .signals import Waveform, energy

__all__ = [
    "DelayConvention",
    "ProjectionBasis",
    "SingularProjectionError",
    "build_basis",
    "project",
    "project_dense_oracle",
    "delay_signal",
    "delayed_matrix",
]

DEFAULT_MAX_DELAY = 512

# Diagonal loading factor used only when the plain Cholesky factorization of
# the Gram matrix fails: load = GRAM_REG_LAMBDA * trace(gram) / dim.
GRAM_REG_LAMBDA = 1e-10

# Guards for the dense verification oracle, which materializes the full
# delayed-copy matrix.
DENSE_ORACLE_MAX_LENGTH = 8192
DENSE_ORACLE_MAX_COLUMNS = 64


class SingularProjectionError(RuntimeError):
    """Gram system could not be factorized even after diagonal loading."""


@dataclass(frozen=True)
class DelayConvention:
    """Delayed copies are zero-padded at the head and truncated to length T."""

    padding: str = "zero-pad-head"
    effective_length: int = 0


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Factorized representation of a delayed-reference subspace.

    ``gram[i*L + t, j*L + u]`` is the inner product of reference ``i``
    delayed by ``t`` with reference ``j`` delayed by ``u``.  The Cholesky
    factor kept alongside may include diagonal loading; the amount actually
    added is recorded in ``regularization`` (0.0 when none was needed).
    """

    references: tuple[Waveform, ...]
    max_delay: int
    gram: np.ndarray
    convention: DelayConvention
    sample_rate: int
    regularization: float
    regularization_events: tuple[str, ...]
    _factor: tuple = field(repr=False, default=None)
    _ref_ffts: tuple = field(repr=False, default=None)
    _nfft: int = field(repr=False, default=0)

    @property
    def length(self) -> int:
        return len(self.references[0])


def delay_signal(x: np.ndarray, tau: int) -> np.ndarray:
    """Shift ``x`` right by ``tau`` samples, zero-padding the head, same length."""
    if tau == 0:
        return np.asarray(x, dtype=np.float64).copy()
    out = np.zeros(len(x))
    out[tau:] = x[: len(x) - tau]
    return out


def delayed_matrix(x: np.ndarray, max_delay: int) -> np.ndarray:
    """T-by-L matrix whose columns are ``x`` delayed by 0 .. L-1 samples."""
    T = len(x)
    A = np.zeros((T, max_delay))
    for tau in range(max_delay):
        A[tau:, tau] = x[: T - tau]
    return A


def _tail_overhang(x: np.ndarray, L: int) -> np.ndarray:
    """(L, L-1) matrix H with H[tau, m-1] = x[T-1+m-tau] for 1 <= m <= tau.

    Row ``tau`` holds (reversed) the tail samples of ``x`` that truncation
    drops when the signal is delayed by ``tau``.
    """
    rev_tail = x[::-1][:L]
    return toeplitz(rev_tail, np.zeros(L))[:, 1:]


def _gram_block(a: np.ndarray, b: np.ndarray, L: int, nfft: int) -> np.ndarray:
    """L-by-L block of inner products between delayed copies of a and b.

    The full (untruncated) correlations form a Toeplitz matrix; truncation
    at T removes, for entry (tau, tau'), the products of the last
    min(tau, tau') overhanging samples, which factor as an outer product of
    tail matrices.
    """
    full = irfft(rfft(a, nfft) * np.conj(rfft(b, nfft)), nfft)
    pos = full[:L]  # lag d = 0 .. L-1: sum_w a[w] * b[w - d]
    col = np.concatenate(([pos[0]], full[-(L - 1):][::-1])) if L > 1 else pos[:1]
    ext = toeplitz(col, pos)
    if L == 1:
        return ext
    return ext - _tail_overhang(a, L) @ _tail_overhang(b, L).T


def _validate_references(references: Sequence[Waveform], max_delay: int) -> None:
    if not 1 <= len(references) <= 2:
        raise ValueError(f"expected 1 or 2 references, got {len(references)}")
    T = len(references[0])
    rate = references[0].sample_rate
    for i, ref in enumerate(references):
        if len(ref) != T:
            raise ValueError(f"reference {i}: length mismatch ({len(ref)} vs {T})")
        if ref.sample_rate != rate:
            raise ValueError(f"reference {i}: sample rate mismatch ({ref.sample_rate} vs {rate})")
        if energy(ref) == 0.0:
            raise ValueError(f"reference {i} is all-zero")
    if not 1 <= max_delay <= T:
        raise ValueError(f"max_delay must satisfy 1 <= L <= T={T}, got {max_delay}")


def build_basis(references: Sequence[Waveform], max_delay: int) -> ProjectionBasis:
    """Build the Gram system for the span of delayed reference copies.

    Parameters
    ----------
    references : one or two equal-length, equal-rate, nonzero waveforms
    max_delay : number of delay taps L; delays 0 .. L-1 are included

    The Gram matrix is factorized once (Cholesky).  If factorization fails,
    a diagonal loading of ``GRAM_REG_LAMBDA * trace / dim`` is added and the
    event is recorded; if it still fails, ``SingularProjectionError`` is
    raised rather than silently absorbing the problem.
    """
    _validate_references(references, max_delay)
    refs = tuple(references)
    k, L = len(refs), max_delay
    T = len(refs[0])
    nfft = next_fast_len(T + L - 1)
    arrays = [r.samples for r in refs]

    gram = np.empty((k * L, k * L))
    for i in range(k):
        for j in range(i, k):
            block = _gram_block(arrays[i], arrays[j], L, nfft)
            gram[i * L:(i + 1) * L, j * L:(j + 1) * L] = block
            if i != j:
                gram[j * L:(j + 1) * L, i * L:(i + 1) * L] = block.T
    # enforce exact symmetry against FFT round-off
    gram = 0.5 * (gram + gram.T)

    regularization = 0.0
    events: tuple[str, ...] = ()
    try:
        factor = cho_factor(gram)
    except LinAlgError:
        regularization = GRAM_REG_LAMBDA * np.trace(gram) / (k * L)
        loaded = gram + regularization * np.eye(k * L)
        try:
            factor = cho_factor(loaded)
        except LinAlgError as exc:
            raise SingularProjectionError(
                f"Gram matrix ({k * L}x{k * L}) is singular even after diagonal "
                f"loading of {regularization:g}"
            ) from exc
        events = (f"gram-regularized: diagonal loading {regularization:g} "
                  f"(L={L}, refs={k})",)

    ref_ffts = tuple(rfft(a, nfft) for a in arrays)
    return ProjectionBasis(
        references=refs,
        max_delay=L,
        gram=gram,
        convention=DelayConvention(effective_length=T),
        sample_rate=refs[0].sample_rate,
        regularization=regularization,
        regularization_events=events,
        _factor=factor,
        _ref_ffts=ref_ffts,
        _nfft=nfft,
    )


def project(basis: ProjectionBasis, x: Waveform) -> Waveform:
    """Orthogonal projection of ``x`` onto the basis span.

    Solves the Gram system for the coefficients of the delayed copies and
    synthesizes their combination by FFT convolution.  The residual
    ``x - project(basis, x)`` is orthogonal to every delayed copy up to
    round-off.
    """
    T = basis.length
    if len(x) != T:
        raise ValueError(f"project: length mismatch ({len(x)} vs basis length {T})")
    if x.sample_rate != basis.sample_rate:
        raise ValueError(f"project: sample rate mismatch ({x.sample_rate} vs {basis.sample_rate})")

    k, L, nfft = len(basis.references), basis.max_delay, basis._nfft
    fx = rfft(x.samples, nfft)
    rhs = np.empty(k * L)
    for i, ref_fft in enumerate(basis._ref_ffts):
        # <ref delayed by tau, x> needs no truncation correction: x itself
        # is not delayed, so no products fall outside [0, T).
        rhs[i * L:(i + 1) * L] = irfft(fx * np.conj(ref_fft), nfft)[:L]

    coeffs = cho_solve(basis._factor, rhs)
    out = np.zeros(T)
    for i, ref_fft in enumerate(basis._ref_ffts):
        out += irfft(ref_fft * rfft(coeffs[i * L:(i + 1) * L], nfft), nfft)[:T]
    return Waveform(out, basis.sample_rate)


def project_dense_oracle(references: Sequence[Waveform], max_delay: int,
                         x: Waveform) -> Waveform:
    """Reference implementation of :func:`project` by explicit least squares.

    Materializes the delayed-copy matrix and solves with an SVD-backed
    least-squares routine, sharing no code path with the fast Gram solver.
    Guarded to small problems (T <= 8192, k*L <= 64).
    """
    _validate_references(references, max_delay)
    T = len(references[0])
    if len(x) != T:
        raise ValueError(f"dense oracle: length mismatch ({len(x)} vs {T})")
    if x.sample_rate != references[0].sample_rate:
        raise ValueError("dense oracle: sample rate mismatch")
    n_cols = len(references) * max_delay
    if T > DENSE_ORACLE_MAX_LENGTH or n_cols > DENSE_ORACLE_MAX_COLUMNS:
        raise ValueError(
            f"dense oracle guard exceeded: T={T} (max {DENSE_ORACLE_MAX_LENGTH}), "
            f"columns={n_cols} (max {DENSE_ORACLE_MAX_COLUMNS})"
        )
    A = np.hstack([delayed_matrix(r.samples, max_delay) for r in references])
    coeffs, *_ = np.linalg.lstsq(A, x.samples, rcond=None)
    return Waveform(A @ coeffs, x.sample_rate)

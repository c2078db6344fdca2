"""Diagonal spectral calculus for a positive self-adjoint operator.

Everything in this package lives in the eigenbasis of a single operator A
with simple discrete spectrum 0 < lambda_0 <= lambda_1 <= ... acting
diagonally on coefficient vectors.  The analytic semigroup S(t) = exp(-tA),
fractional powers A^theta and resolvents (lam - A)^{-1} are then diagonal
multipliers, which keeps every operation exact up to rounding.

The concrete instance used throughout is the one dimensional cable operator
A = -d^2/dx^2 + 1 on [0, L] with reflecting (zero flux) endpoints.  Its
eigenpairs are

    lambda_n = 1 + (n pi / L)^2,
    e_0(x)   = 1/sqrt(L),
    e_n(x)   = sqrt(2/L) cos(n pi x / L),   n >= 1,

an orthonormal cosine family.  Grid values sampled at midpoints of a uniform
partition are mapped to coefficients by an orthogonal cosine transform, so
analysis and synthesis are mutually inverse to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.fft import dct, idct


@dataclass(frozen=True)
class CosineBasis:
    """Neumann cosine family on [0, L]."""

    L: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"interval length must be positive, got {self.L}")


@dataclass(frozen=True)
class SpectralOperator:
    """Positive diagonal operator given by its eigenvalue sequence.

    Parameters
    ----------
    eigenvalues : ndarray
        Strictly positive, nondecreasing, finite; one entry per retained mode.
    basis : CosineBasis, optional
        Present when the operator comes from a concrete boundary value
        problem and grid transforms are meaningful.
    """

    eigenvalues: np.ndarray
    basis: Optional[CosineBasis] = None

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("eigenvalues must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if lam[0] <= 0:
            raise ValueError(f"spectrum must be positive, got min {lam[0]}")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nondecreasing")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class SpectralVector:
    """Element of the state space H, stored as basis coefficients."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ValueError("coefficients must be 1-d")
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        """Norm in H, the l2 norm of the coefficients (Parseval)."""
        return float(np.linalg.norm(self.coeffs))

    @property
    def dim(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True)
class DiagonalHS:
    """Diagonal Hilbert-Schmidt multiplier, one factor g_n per mode."""

    multipliers: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.multipliers, dtype=float)
        if g.ndim != 1:
            raise ValueError("multipliers must be 1-d")
        if not np.all(np.isfinite(g)):
            raise ValueError("multipliers must be finite")
        object.__setattr__(self, "multipliers", g)

    def hs_norm(self) -> float:
        """Hilbert-Schmidt norm sqrt(sum g_n^2)."""
        return float(np.linalg.norm(self.multipliers))

    @property
    def dim(self) -> int:
        return self.multipliers.size


@dataclass(frozen=True)
class SemigroupConstants:
    """Smoothing and resolvent constants of the diagonal calculus.

    iota bounds t^theta ||A^theta S(t)|| over t > 0 and upsilon is the
    norm of A^{-theta}.  sector_angle / sector_bound record an empirical
    resolvent bound ||(lam - A)^{-1}|| <= M / |lam| sampled outside the
    sector of half opening sector_angle.
    """

    theta: Optional[float] = None
    iota: Optional[float] = None
    upsilon: Optional[float] = None
    sector_angle: Optional[float] = None
    sector_bound: Optional[float] = None


def build_cable_operator(L: float, N: int) -> SpectralOperator:
    """Cable operator -u'' + u on [0, L] with zero flux ends, N modes.

    Parameters
    ----------
    L : float
        Interval length, positive.
    N : int
        Number of retained modes, at least 1.

    Returns
    -------
    SpectralOperator
        Eigenvalues lambda_n = 1 + (n pi / L)^2 for n = 0..N-1 with the
        orthonormal cosine basis attached.
    """
    if not (np.isfinite(L) and L > 0):
        raise ValueError(f"interval length must be positive, got {L}")
    if N < 1:
        raise ValueError(f"need at least one mode, got {N}")
    n = np.arange(N, dtype=float)
    lam = 1.0 + (n * np.pi / L) ** 2
    return SpectralOperator(lam, CosineBasis(float(L)))


def _coeffs(x) -> np.ndarray:
    if isinstance(x, SpectralVector):
        return x.coeffs
    c = np.asarray(x, dtype=float)
    if c.ndim != 1:
        raise ValueError("expected a 1-d coefficient vector")
    return c


def _check_dim(op: SpectralOperator, c: np.ndarray) -> None:
    if c.size != op.dim:
        raise ValueError(f"dimension mismatch: operator has {op.dim} modes, vector has {c.size}")


def semigroup_apply(op: SpectralOperator, t: float, x) -> SpectralVector:
    """Apply S(t) = exp(-tA): coefficients are damped by exp(-lambda_n t).

    Requires t >= 0; the semigroup is not defined for negative times.
    """
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"semigroup time must be finite and nonnegative, got {t}")
    c = _coeffs(x)
    _check_dim(op, c)
    return SpectralVector(np.exp(-op.eigenvalues * t) * c)


def fractional_power_apply(op: SpectralOperator, theta: float, x) -> SpectralVector:
    """Apply A^theta; negative theta smooths, positive theta roughens."""
    if not np.isfinite(theta):
        raise ValueError(f"power must be finite, got {theta}")
    c = _coeffs(x)
    _check_dim(op, c)
    return SpectralVector(op.eigenvalues**theta * c)


def resolvent_apply(op: SpectralOperator, lam: complex, x) -> np.ndarray:
    """Apply (lam - A)^{-1}; lam must stay away from the spectrum.

    Returns a complex coefficient array since lam may be complex.
    """
    lam = complex(lam)
    gaps = np.abs(lam - op.eigenvalues)
    if np.min(gaps) == 0.0:
        raise ValueError(f"{lam} is an eigenvalue, resolvent undefined")
    c = _coeffs(x)
    _check_dim(op, c)
    return c / (lam - op.eigenvalues)


def operator_norm_semigroup(op: SpectralOperator, theta: float, t: float) -> float:
    """Exact operator norm ||A^theta S(t)|| = max_n lambda_n^theta exp(-lambda_n t).

    For theta > 0 the norm blows up as t -> 0, so t must be positive; at
    theta = 0 the value at t = 0 is 1.
    """
    if not np.isfinite(theta) or theta < 0:
        raise ValueError(f"power must be finite and nonnegative, got {theta}")
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and nonnegative, got {t}")
    if t == 0:
        if theta == 0:
            return 1.0
        raise ValueError("||A^theta S(t)|| is unbounded at t = 0 for theta > 0")
    lam = op.eigenvalues
    return float(np.max(lam**theta * np.exp(-lam * t)))


def smoothing_envelope(theta: float, t) -> np.ndarray:
    """Envelope (theta/e)^theta t^{-theta} dominating ||A^theta S(t)||."""
    t = np.asarray(t, dtype=float)
    if theta == 0:
        return np.ones_like(t)
    return (theta / math.e) ** theta * t ** (-theta)


def semigroup_constants(op: SpectralOperator, theta: float) -> SemigroupConstants:
    """Smoothing constant iota(theta) and inverse-power norm upsilon(theta).

    iota(theta) = max_n sup_{t>0} t^theta lambda_n^theta exp(-lambda_n t).
    Substituting z = lambda_n t shows each mode attains (theta/e)^theta at
    z = theta, so the max equals the envelope constant exactly; at theta = 0
    the sup is 1.  upsilon(theta) = ||A^{-theta}|| = lambda_min^{-theta}.
    """
    if not np.isfinite(theta) or theta < 0:
        raise ValueError(f"power must be finite and nonnegative, got {theta}")
    iota = 1.0 if theta == 0 else (theta / math.e) ** theta
    upsilon = op.lambda_min ** (-theta)
    return SemigroupConstants(theta=float(theta), iota=float(iota), upsilon=float(upsilon))


def sector_bound(
    op: SpectralOperator,
    varpi: float,
    samples: int = 200,
) -> SemigroupConstants:
    """Empirical resolvent bound outside the sector of half opening varpi.

    Samples lam on the rays arg(lam) = +-varpi and on the negative real
    axis, with moduli log spaced over [lambda_min/100, 100*lambda_max], and
    returns the observed supremum of |lam| * ||(lam - A)^{-1}||.  The angle
    must satisfy 0 < varpi < pi/2 so that the sector contains the spectrum
    with room to spare.
    """
    if not (0 < varpi < np.pi / 2):
        raise ValueError(f"sector angle must lie in (0, pi/2), got {varpi}")
    if samples < 2:
        raise ValueError("need at least two sample moduli")
    radii = np.geomspace(op.lambda_min / 100.0, 100.0 * op.lambda_max, samples)
    rays = [np.exp(1j * varpi), np.exp(-1j * varpi), -1.0 + 0j]
    lam_samples = np.concatenate([radii * ray for ray in rays])
    # distance of each sample point to the spectrum, worst mode wins
    gaps = np.abs(lam_samples[:, None] - op.eigenvalues[None, :])
    resolvent_norms = 1.0 / np.min(gaps, axis=1)
    bound = float(np.max(np.abs(lam_samples) * resolvent_norms))
    return SemigroupConstants(sector_angle=float(varpi), sector_bound=bound)


def sample_grid(op: SpectralOperator, M: int) -> np.ndarray:
    """Midpoints x_j = (j + 1/2) L / M of a uniform M-cell partition of [0, L].

    These are the collocation points of the orthogonal cosine transform used
    by analyze/synthesize.
    """
    basis = _require_basis(op)
    if M < op.dim:
        raise ValueError(f"grid must have at least {op.dim} points, got {M}")
    j = np.arange(M, dtype=float)
    return (j + 0.5) * basis.L / M


def analyze(op: SpectralOperator, samples) -> SpectralVector:
    """Coefficients of a grid function against the cosine basis.

    Parameters
    ----------
    samples : array_like
        Values taken at ``sample_grid(op, M)`` with M >= number of modes.

    Notes
    -----
    Uses the orthonormal type-II cosine transform, whose kernel evaluated at
    midpoints coincides with the basis functions, so the map is an exact
    orthogonal projection rather than a quadrature: for band-limited data
    the round trip with synthesize is the identity to rounding and the
    coefficient norm equals the discrete L^2([0, L]) norm of the samples.
    """
    basis = _require_basis(op)
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1:
        raise ValueError("samples must be 1-d")
    M = f.size
    if M < op.dim:
        raise ValueError(f"need at least {op.dim} samples, got {M}")
    y = dct(f, type=2, norm="ortho")
    return SpectralVector(y[: op.dim] * math.sqrt(basis.L / M))


def synthesize(op: SpectralOperator, x, M: Optional[int] = None) -> np.ndarray:
    """Grid values of a coefficient vector at ``sample_grid(op, M)``."""
    basis = _require_basis(op)
    c = _coeffs(x)
    _check_dim(op, c)
    if M is None:
        M = op.dim
    if M < op.dim:
        raise ValueError(f"grid must have at least {op.dim} points, got {M}")
    y = np.zeros(M)
    y[: op.dim] = c / math.sqrt(basis.L / M)
    return idct(y, type=2, norm="ortho")


def _require_basis(op: SpectralOperator) -> CosineBasis:
    if op.basis is None:
        raise ValueError("operator has no attached basis, grid transforms unavailable")
    return op.basis

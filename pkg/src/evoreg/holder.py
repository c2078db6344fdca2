"""Weighted Hölder spaces of functions on (0, T] with a blow-up at 0.

A trajectory f belongs to the weighted class with exponents (beta, sigma),
0 < sigma < beta <= 1, when

  (i)   t^{1-beta} f(t) has a limit as t -> 0,
  (ii)  the weighted difference quotient

            Q(s, t) = s^{1-beta+sigma} ||f(t) - f(s)|| / (t - s)^sigma

        is bounded over 0 <= s < t <= T,
  (iii) the running modulus w(t) = sup of Q over pairs below t vanishes
        as t -> 0.

The norm is sup_t t^{1-beta} ||f(t)|| plus the supremum of Q.  Membership
gives the pointwise consequences ||f(t)|| <= ||f|| t^{beta-1} and
||f(t) - f(s)|| <= w(t) (t-s)^sigma s^{beta-sigma-1}, which is what the
solver bounds in this package ultimately rest on.

This module evaluates the discrete analogues of these quantities on a
finite node set, provides closed-form member families for calibration, and
checks the pointwise inequalities against a computed report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

_BLOCK = 256  # pair scans work on row blocks to bound memory


@dataclass(frozen=True)
class Trajectory:
    """Vector-valued function sampled on increasing nodes in [0, T].

    times must be strictly increasing and contained in [0, T]; a node at
    t = 0 is allowed (initial value), all others must be positive.  values
    holds one coefficient row per node.
    """

    times: np.ndarray
    values: np.ndarray
    T: float
    warnings: tuple = ()

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or v.ndim != 2 or v.shape[0] != t.size:
            raise ValueError("times must be 1-d and values must have one row per node")
        if t.size < 1:
            raise ValueError("trajectory needs at least one node")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if t[0] < 0 or t[-1] > self.T * (1 + 1e-12):
            raise ValueError(f"times must lie in [0, {self.T}]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def node_count(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def node_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def positive_part(self) -> "Trajectory":
        """Drop a leading t = 0 node if present."""
        if self.times[0] == 0.0:
            return Trajectory(self.times[1:], self.values[1:], self.T, self.warnings)
        return self


@dataclass(frozen=True)
class HolderReport:
    """Discrete weighted-norm data of a trajectory."""

    beta: float
    sigma: float
    sup_term: float
    holder_term: float
    norm: float
    modulus: np.ndarray  # running sup of Q over pairs up to each node
    limit_at_zero: Optional[np.ndarray]
    limit_exists: Optional[bool]
    degenerate: bool = False


@dataclass(frozen=True)
class PointwiseBounds:
    """Outcome of checking the membership inequalities on all node pairs."""

    growth_ratio: float      # max ||f(t)|| / (norm * t^{beta-1})
    increment_ratio: float   # max ||df|| / (norm * (t-s)^sigma * s^{beta-sigma-1})
    modulus_ratio: float     # same with the running modulus in place of the norm
    pairs_checked: int
    passed: bool


def _check_exponents(beta: float, sigma: float, allow_sigma_zero: bool = False) -> None:
    lo_ok = sigma > 0 or (allow_sigma_zero and sigma == 0)
    if not (lo_ok and sigma < beta <= 1):
        raise ValueError(
            f"exponents must satisfy 0 < sigma < beta <= 1, got sigma={sigma}, beta={beta}"
        )


def weighted_holder_norm(
    traj: Trajectory,
    beta: float,
    sigma: float,
    *,
    allow_sigma_zero: bool = False,
) -> HolderReport:
    """Discrete weighted norm, modulus and limit data of a trajectory.

    The sup term maximizes t^{1-beta} ||f(t)|| over the nodes and the Hölder
    term maximizes the weighted quotient Q over all node pairs.  modulus[k]
    is the running maximum of Q over every pair at or below node k, so it is
    nondecreasing by construction and its final entry equals the Hölder
    term; condition (iii) corresponds to small entries at the early nodes.

    The limit of t^{1-beta} f(t) at 0 is extrapolated from the three
    smallest positive nodes with a power-law model v* + c t^p; existence is
    declared when the fit from nodes (1,2,3) and the fit from nodes (2,3,4)
    agree to 1e-3 relative.  With fewer than four positive nodes existence
    is left undetermined, and with fewer than two nodes the report is
    flagged degenerate with zero Hölder term.

    allow_sigma_zero admits the limiting exponent sigma = 0, where the
    quotient loses its denominator; the public gate stays 0 < sigma.
    """
    _check_exponents(beta, sigma, allow_sigma_zero)
    t = traj.times
    v = traj.values
    # t^{1-beta} with the 0^0 = 1 convention covers beta = 1 at a t = 0 node
    sup_weights = t ** (1.0 - beta)
    sup_term = float(np.max(sup_weights * traj.node_norms()))

    n = t.size
    if n < 2:
        return HolderReport(
            beta=beta, sigma=sigma, sup_term=sup_term, holder_term=0.0,
            norm=sup_term, modulus=np.zeros(n), limit_at_zero=None,
            limit_exists=None, degenerate=True,
        )

    pair_weight = t ** (1.0 - beta + sigma)
    row_max = _pair_row_max(t, v, pair_weight, sigma)
    modulus = np.maximum.accumulate(row_max)
    holder_term = float(modulus[-1])

    limit, exists = _extrapolate_limit(traj, beta)
    return HolderReport(
        beta=beta, sigma=sigma, sup_term=sup_term, holder_term=holder_term,
        norm=sup_term + holder_term, modulus=modulus, limit_at_zero=limit,
        limit_exists=exists, degenerate=False,
    )


def _pair_row_max(t: np.ndarray, v: np.ndarray, s_weight: np.ndarray, sigma: float) -> np.ndarray:
    """row_max[k] = max_{j<k} s_weight[j] * ||v[k]-v[j]|| / (t[k]-t[j])^sigma."""
    n = t.size
    sq = np.einsum("ij,ij->i", v, v)
    row_max = np.zeros(n)
    for k0 in range(1, n, _BLOCK):
        k1 = min(k0 + _BLOCK, n)
        # squared distances via the Gram trick, clipped against rounding
        g = v[k0:k1] @ v.T
        d2 = sq[k0:k1, None] + sq[None, :] - 2.0 * g
        np.clip(d2, 0.0, None, out=d2)
        dt = t[k0:k1, None] - t[None, :]
        quot = np.where(dt > 0, s_weight[None, :] * np.sqrt(d2) / np.where(dt > 0, dt, 1.0) ** sigma, 0.0)
        row_max[k0:k1] = quot.max(axis=1)
    return row_max


def _extrapolate_limit(traj: Trajectory, beta: float):
    pos = traj.positive_part()
    t = pos.times[:4]
    v = pos.values[:4] * t[:, None] ** (1.0 - beta)
    if t.size < 3:
        return None, None
    fit1 = _power_fit(t[:3], v[:3])
    if t.size < 4:
        return fit1, None
    fit2 = _power_fit(t[1:4], v[1:4])
    scale = max(float(np.max(np.linalg.norm(v[:4], axis=1))), 1e-30)
    exists = bool(np.linalg.norm(fit1 - fit2) <= 1e-3 * scale)
    return fit1, exists


def _power_fit(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Limit of the model v(t) = v* + c t^p through three nodes.

    p comes from a scalar root find on the ratio of difference norms, then
    v* follows componentwise.  Exact for data of pure power form.
    """
    d1 = v[1] - v[0]
    d2 = v[2] - v[1]
    n1 = float(np.linalg.norm(d1))
    n2 = float(np.linalg.norm(d2))
    scale = max(float(np.max(np.linalg.norm(v, axis=1))), 1e-300)
    if n1 <= 1e-14 * scale and n2 <= 1e-14 * scale:
        return v[0].copy()  # already flat to rounding
    target = n2 / max(n1, 1e-300)

    def ratio(p: float) -> float:
        a, b, c = t[0] ** p, t[1] ** p, t[2] ** p
        return (c - b) / max(b - a, 1e-300)

    lo, hi = 1e-3, 50.0
    if not (ratio(lo) < target < ratio(hi)) and not (ratio(hi) < target < ratio(lo)):
        # no power profile matches; fall back to the nearest node value
        return v[0].copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (ratio(mid) - target) * (ratio(lo) - target) <= 0:
            hi = mid
        else:
            lo = mid
    p = 0.5 * (lo + hi)
    denom = t[1] ** p - t[0] ** p
    c = (v[1] - v[0]) / denom
    return v[0] - c * t[0] ** p


def pointwise_bounds_check(
    traj: Trajectory,
    report: HolderReport,
    slack: float = 1e-9,
) -> PointwiseBounds:
    """Verify the membership inequalities implied by a norm report.

    Checks, over all nodes and node pairs with s > 0,

        ||f(t)||        <= norm * t^{beta-1},
        ||f(t) - f(s)|| <= norm * (t-s)^sigma * s^{beta-sigma-1},
        ||f(t) - f(s)|| <= modulus[t] * (t-s)^sigma * s^{beta-sigma-1},

    and reports the worst observed ratios.  A report whose norm does not
    actually dominate the trajectory (for instance after tampering with it)
    fails the check.
    """
    beta, sigma = report.beta, report.sigma
    t = traj.times
    v = traj.values
    norms = traj.node_norms()

    with np.errstate(divide="ignore"):
        growth_bound = report.norm * t ** (beta - 1.0)
    growth_ratio = float(np.max(_safe_div(norms, growth_bound)))

    n = t.size
    inc_ratio = 0.0
    mod_ratio = 0.0
    pairs = 0
    sq = np.einsum("ij,ij->i", v, v)
    with np.errstate(divide="ignore"):
        s_pow = t ** (beta - sigma - 1.0)  # inf at a t = 0 node, bound is vacuous there
    for k0 in range(1, n, _BLOCK):
        k1 = min(k0 + _BLOCK, n)
        g = v[k0:k1] @ v.T
        d2 = sq[k0:k1, None] + sq[None, :] - 2.0 * g
        np.clip(d2, 0.0, None, out=d2)
        d = np.sqrt(d2)
        dt = t[k0:k1, None] - t[None, :]
        lower = np.where(dt > 0, dt, 1.0) ** sigma * s_pow[None, :]
        ratio = np.where(dt > 0, _safe_div(d, lower), 0.0)
        pairs += int(np.count_nonzero(dt > 0))
        inc_ratio = max(inc_ratio, float(np.max(ratio)) / max(report.norm, 1e-300))
        mod_k = report.modulus[k0:k1, None]
        mod_ratio = max(mod_ratio, float(np.max(_safe_div(ratio, mod_k))))
    passed = max(growth_ratio, inc_ratio, mod_ratio) <= 1.0 + slack
    return PointwiseBounds(
        growth_ratio=growth_ratio, increment_ratio=inc_ratio,
        modulus_ratio=mod_ratio, pairs_checked=pairs, passed=passed,
    )


def _safe_div(num, den):
    den = np.asarray(den, dtype=float)
    out = np.divide(num, np.where(den == 0, 1.0, den))
    big = np.where(np.asarray(num) > 0, np.inf, 0.0)
    return np.where(den == 0, big, np.where(np.isinf(den), 0.0, out))


MEMBER_SHAPES = ("power", "cusp", "sine", "edge")


@dataclass(frozen=True)
class HolderMember:
    """Closed-form member f(t) = t^{beta-1} g(t) d of the weighted class.

    For the first three shapes g is continuous with g(0) = 0 and
    sigma-Hölder on [0, T], so f carries the generic blow-up profile of
    the class in a fixed direction d; "edge" takes g identically 1, the
    canonical pure-blow-up member t^{beta-1} d.
    """

    beta: float
    sigma: float
    shape: str
    direction: np.ndarray
    T: float
    degenerate_replaced: bool = False

    def profile(self, t) -> np.ndarray:
        """Scalar factor t^{beta-1} g(t); t must be positive."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) and self.beta < 1:
            raise ValueError("member with beta < 1 blows up at t = 0, evaluate on t > 0 only")
        return t ** (self.beta - 1.0) * self._g(t)

    def _g(self, t: np.ndarray) -> np.ndarray:
        s = self.sigma
        if self.shape == "power":
            expo = 2.0 * s if self.degenerate_replaced else s
            return t**expo
        if self.shape == "cusp":
            half = self.T / 2.0
            return np.abs(t - half) ** s - half**s
        if self.shape == "sine":
            return np.sin(np.pi * t / (2.0 * self.T)) ** s
        if self.shape == "edge":
            return np.ones_like(t)
        raise AssertionError(self.shape)

    def __call__(self, t) -> np.ndarray:
        """Values at times t, one row per time."""
        prof = np.atleast_1d(self.profile(t))
        return prof[:, None] * self.direction[None, :]


def make_member(
    beta: float,
    sigma: float,
    shape: str,
    direction,
    T: float,
) -> HolderMember:
    """Closed-form calibration member of the (beta, sigma) class.

    Shapes: "power" g = t^sigma, "cusp" g = |t - T/2|^sigma - (T/2)^sigma,
    "sine" g = sin(pi t / 2T)^sigma, "edge" g = 1.  The power shape with
    beta < 1 and beta - 1 + sigma = 0 would collapse to a constant; that
    case is replaced by g = t^{2 sigma} (still sigma-Hölder with g(0) = 0)
    and flagged on the returned member.
    """
    _check_exponents(beta, sigma)
    if shape not in MEMBER_SHAPES:
        raise ValueError(f"unknown member shape {shape!r}, pick one of {MEMBER_SHAPES}")
    if not (np.isfinite(T) and T > 0):
        raise ValueError(f"horizon must be positive, got {T}")
    d = np.asarray(direction, dtype=float)
    if d.ndim != 1 or d.size == 0 or not np.all(np.isfinite(d)):
        raise ValueError("direction must be a finite nonempty vector")
    degenerate = shape == "power" and beta < 1.0 and abs(beta - 1.0 + sigma) < 1e-12
    return HolderMember(
        beta=float(beta), sigma=float(sigma), shape=shape, direction=d,
        T=float(T), degenerate_replaced=degenerate,
    )


def sample_member(member: HolderMember, times) -> Trajectory:
    """Trajectory of a member on the positive nodes of a time set."""
    t = np.asarray(times, dtype=float)
    t = t[t > 0]
    return Trajectory(t, member(t), T=member.T)


def embedding_factor(beta: float, gamma: float, sigma: float, T: float) -> float:
    """Norm factor T^{gamma-beta} of the inclusion of the gamma-class
    into the beta-class for sigma < beta < gamma <= 1."""
    if not (0 < sigma < beta < gamma <= 1):
        raise ValueError(
            f"need 0 < sigma < beta < gamma <= 1, got sigma={sigma}, beta={beta}, gamma={gamma}"
        )
    if not (np.isfinite(T) and T > 0):
        raise ValueError(f"horizon must be positive, got {T}")
    return float(T ** (gamma - beta))

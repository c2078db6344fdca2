"""Exact per-mode sampling of stochastic convolutions and moment checks.

The noise term W_G(t) = int_0^t S(t-s) G(s) dW(s) is Gaussian mode by mode,
so each coefficient follows an Ornstein-Uhlenbeck recursion that can be
sampled without time-discretization error once the multiplier g_n is frozen
at the midpoint of each step:

  X_n(t_{k+1}) = exp(-lam_n h) X_n(t_k) + eta,
  Var eta = g_n(m_k)^2 (1 - exp(-2 lam_n h)) / (2 lam_n).

The recursion is distribution-exact for constant g_n; for time-varying
multipliers the only approximation is the freezing, and all acceptance
comparisons run against the isometry oracle

  E||W_G(t)||^2 = sum_n int_0^t exp(-2 lam_n (t-s)) g_n(s)^2 ds,

never against the sampler itself.

Replicas draw from counter-based streams keyed by (master seed, replica
index); reductions happen in replica order over fixed-size batches, so the
results are bitwise independent of worker parallelism.  EVOREG_THREADS
caps the batch pool.
"""

from __future__ import annotations

import os
import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .deterministic import ForcingSpec, GateCheck, solve_mild_deterministic
from .holder import HolderReport, Trajectory, weighted_holder_norm
from .mesh import GradedMesh, uniform_mesh
from .spectral import SpectralOperator

_BATCH = 256  # replica batch size; fixed so reductions are layout-stable

NOISE_PRESETS = ("smooth-decay", "constant", "cylindrical-white")


def validate_H4(beta: float, sigma: float) -> GateCheck:
    """Exponent gate for the noise multiplier class.

    Requires 0 < sigma < beta - 1/2 (hence 1/2 < beta <= 1).
    """
    bad = []
    if not (0 < sigma < beta - 0.5 <= 0.5):
        bad.append(
            f"need 0 < sigma < beta - 1/2 <= 1/2, got sigma={sigma}, "
            f"beta - 1/2 = {beta - 0.5}"
        )
    return GateCheck(ok=not bad, violations=tuple(bad))


def feasible_alpha_interval(beta: float, sigma: float) -> tuple[float, float]:
    """Interval of alpha compatible with both the forcing gate and the
    combined-solution requirement alpha <= 1/2 - sigma."""
    return (1.0 + sigma) / 4.0, min(beta / 2.0, 0.5 - sigma)


@dataclass(frozen=True)
class NoiseSpec:
    """Diagonal noise multiplier family s -> (g_n(s))_n.

    handle(t_array) returns one row of multipliers per time.  cylindrical
    marks the flagged white-noise comparison mode (g constant across modes,
    not square-summable as N grows); it bypasses the exponent gate and is
    rejected by the moment-estimate verifiers.
    """

    handle: Callable[[np.ndarray], np.ndarray]
    beta: float
    sigma: float
    time_invariant: bool = False
    cylindrical: bool = False
    description: str = ""

    def __post_init__(self) -> None:
        if not self.cylindrical:
            validate_H4(self.beta, self.sigma).raise_if_failed()

    def sample(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        vals = np.asarray(self.handle(t), dtype=float)
        if vals.shape[0] != t.size:
            raise ValueError("noise handle must return one row per time")
        return vals


def make_noise(
    preset: str,
    op: SpectralOperator,
    beta: float,
    sigma: float,
    scale: float = 1.0,
) -> NoiseSpec:
    """Named multiplier families.

    smooth-decay:      g_n(s) = scale * lam_n^{-1} s^{beta-1}
    constant:          g_n(s) = scale * lam_n^{-1}
    cylindrical-white: g_n(s) = scale (flagged comparison mode)
    """
    lam = op.eigenvalues
    if preset == "smooth-decay":
        decay = scale / lam

        def handle(t, _d=decay, _b=beta):
            t = np.asarray(t, dtype=float)
            if np.any(t <= 0) and _b < 1.0:
                raise ValueError("smooth-decay multiplier requires t > 0")
            return t[:, None] ** (_b - 1.0) * _d[None, :]

        return NoiseSpec(handle, beta, sigma, time_invariant=(beta == 1.0),
                         description=preset)
    if preset == "constant":
        decay = scale / lam

        def handle(t, _d=decay):
            t = np.asarray(t, dtype=float)
            return np.broadcast_to(_d, (t.size, _d.size)).copy()

        return NoiseSpec(handle, beta, sigma, time_invariant=True,
                         description=preset)
    if preset == "cylindrical-white":
        n = op.dim

        def handle(t, _n=n, _s=scale):
            t = np.asarray(t, dtype=float)
            return np.full((t.size, _n), _s)

        return NoiseSpec(handle, beta, sigma, time_invariant=True,
                         cylindrical=True, description=preset)
    raise ValueError(f"unknown noise preset {preset!r}; choose from {NOISE_PRESETS}")


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    replicas: int
    seed: int

    def __post_init__(self) -> None:
        if self.replicas < 2:
            raise ValueError("std_error needs at least 2 replicas")


@dataclass(frozen=True)
class PathSample:
    """One sampled path, optionally with its driving Wiener increments."""

    trajectory: Trajectory
    increments: Optional[np.ndarray]  # (K, N) per-mode Wiener increments
    stream: tuple[int, int]


def _stream_pair(stream) -> tuple[int, int]:
    if isinstance(stream, (tuple, list)) and len(stream) == 2:
        return int(stream[0]), int(stream[1])
    return int(stream), 0


def _replica_rng(master_seed: int, replica: int) -> np.random.Generator:
    key = np.array([master_seed, replica], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _step_tables(op: SpectralOperator, noise: NoiseSpec, mesh: GradedMesh):
    """Per-step decay, innovation scale, and joint-coupling coefficients.

    Returns (decay, sd, c1, c2) with shapes (K, N): the innovation is
    eta = sd * N(0,1), or equivalently c1 * dW + c2 * N(0,1) jointly with
    the step's Wiener increment dW ~ N(0, h).
    """
    t = mesh.nodes
    h = mesh.steps
    mid = 0.5 * (t[:-1] + t[1:])
    g = noise.sample(mid)
    if g.shape != (mesh.K, op.dim):
        raise ValueError(
            f"noise handle returned shape {g.shape}, expected {(mesh.K, op.dim)}"
        )
    bad = ~np.isfinite(g)
    if np.any(bad):
        k = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise ValueError(f"non-finite noise multiplier at midpoint t={mid[k]!r} (step {k})")
    lam = op.eigenvalues
    z = h[:, None] * lam[None, :]
    decay = np.exp(-z)
    em1 = -np.expm1(-z)
    em2 = -np.expm1(-2.0 * z)
    var = g**2 * em2 / (2.0 * lam[None, :])
    sd = np.sqrt(var)
    cov = g * em1 / lam[None, :]  # Cov(eta, dW), dW ~ N(0, h)
    c1 = cov / h[:, None]
    c2 = np.sqrt(np.maximum(var - cov**2 / h[:, None], 0.0))
    return decay, sd, c1, c2


def sample_stochastic_convolution(
    op: SpectralOperator,
    noise: NoiseSpec,
    mesh: GradedMesh,
    stream,
    record_increments: bool = False,
) -> PathSample:
    """Sample W_G at the mesh nodes from one counter-based stream.

    stream is (master_seed, replica_index) or a bare master seed.  With
    record_increments the per-step Wiener increments are drawn jointly with
    the innovations (correct cross-covariance g (1 - e^{-lam h})/lam) and
    returned for weak-form residual checks.
    """
    seed, replica = _stream_pair(stream)
    decay, sd, c1, c2 = _step_tables(op, noise, mesh)
    K, N = mesh.K, op.dim
    rng = _replica_rng(seed, replica)
    X = np.zeros((K + 1, N))
    if record_increments:
        Z = rng.standard_normal((2, K, N))
        dW = np.sqrt(mesh.steps)[:, None] * Z[0]
        eta = c1 * dW + c2 * Z[1]
    else:
        dW = None
        eta = sd * rng.standard_normal((K, N))
    for k in range(K):
        X[k + 1] = decay[k] * X[k] + eta[k]
    traj = Trajectory(mesh.nodes, X, T=mesh.T)
    return PathSample(trajectory=traj, increments=dW, stream=(seed, replica))


def sample_paths(
    op: SpectralOperator,
    noise: NoiseSpec,
    mesh: GradedMesh,
    count: int,
    master_seed: int,
    xi=None,
    forcing: Optional[ForcingSpec] = None,
) -> list[Trajectory]:
    """Ensemble of full solution paths S(t)xi + deterministic part + W_G."""
    det = None
    if xi is not None or forcing is not None:
        xi0 = np.zeros(op.dim) if xi is None else xi
        det = solve_mild_deterministic(op, xi0, forcing, mesh).values
    out = []
    for r in range(count):
        sample = sample_stochastic_convolution(op, noise, mesh, (master_seed, r))
        vals = sample.trajectory.values
        if det is not None:
            vals = vals + det
        out.append(Trajectory(mesh.nodes, vals, T=mesh.T))
    return out


def ito_isometry_oracle(op: SpectralOperator, noise: NoiseSpec, t: float) -> float:
    """E||W_G(t)||^2 = sum_n int_0^t e^{-2 lam_n (t-s)} g_n(s)^2 ds.

    Closed form per mode for time-invariant multipliers, adaptive
    quadrature otherwise.  t = 0 returns 0 (empty integral).
    """
    t = float(t)
    if t < 0 or not np.isfinite(t):
        raise ValueError("isometry oracle needs t >= 0")
    if t == 0.0:
        return 0.0
    lam = op.eigenvalues
    if noise.time_invariant:
        g = noise.sample(np.array([t]))[0]
        return float(np.sum(g**2 * (-np.expm1(-2.0 * lam * t)) / (2.0 * lam)))
    total = 0.0
    for n in range(op.dim):
        lam_n = lam[n]

        def integrand(s, _n=n, _l=lam_n):
            g = float(noise.sample(np.array([s]))[0, _n])
            return np.exp(-2.0 * _l * (t - s)) * g * g

        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            val, _ = quad(integrand, 0.0, t, epsabs=1e-12, epsrel=1e-10, limit=200)
        if not np.isfinite(val):
            raise ValueError(f"noise integrand diverges for mode {n}")
        total += val
    return float(total)


@dataclass(frozen=True)
class MCNorms:
    """Per-node Monte Carlo moment estimates over the replica ensemble."""

    times: np.ndarray
    alpha1: float
    nu: Optional[float]
    replicas: int
    master_seed: int
    mean_norm: np.ndarray       # E ||X(t_k)||
    se_norm: np.ndarray
    mean_alpha1: np.ndarray     # E ||A^{alpha1} X(t_k)||
    se_alpha1: np.ndarray
    mean_sq: np.ndarray         # E ||X(t_k)||^2
    se_sq: np.ndarray
    mean_nu: Optional[np.ndarray]
    se_nu: Optional[np.ndarray]

    def node_estimate(self, quantity: str, index: int = -1) -> MCEstimate:
        table = {
            "norm": (self.mean_norm, self.se_norm),
            "alpha1": (self.mean_alpha1, self.se_alpha1),
            "sq": (self.mean_sq, self.se_sq),
        }
        if self.mean_nu is not None:
            table["nu"] = (self.mean_nu, self.se_nu)
        if quantity not in table:
            raise ValueError(f"unknown quantity {quantity!r}")
        m, s = table[quantity]
        return MCEstimate(float(m[index]), float(s[index]),
                          self.replicas, self.master_seed)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("EVOREG_THREADS")
        threads = int(env) if env else 1
    return max(1, threads)


def _mc_batch(decay, sd, det, lo, hi, seed, weights):
    """Per-node norm statistics for replicas lo..hi-1.

    weights is a list of per-mode multiplier vectors (lam^theta); the
    returned tuple holds, per weight, the batch size, mean and centered
    second moment of the weighted norms, plus the same for the squared
    plain norm.  Centered moments avoid the cancellation a raw sum of
    squares would leave on concentrated (or deterministic) data.
    """
    K, N = decay.shape
    B = hi - lo
    Z = np.empty((B, K, N))
    for b, r in enumerate(range(lo, hi)):
        Z[b] = _replica_rng(seed, r).standard_normal((K, N))
    state = np.zeros((B, N))
    norms = [np.empty((B, K + 1)) for _ in weights]
    sqn = np.empty((B, K + 1))
    total = state + det[0]
    for i, w in enumerate(weights):
        norms[i][:, 0] = np.linalg.norm(total * w, axis=1)
    sqn[:, 0] = np.linalg.norm(total, axis=1) ** 2
    for k in range(K):
        state = state * decay[k] + sd[k] * Z[:, k, :]
        total = state + det[k + 1]
        for i, w in enumerate(weights):
            norms[i][:, k + 1] = np.linalg.norm(total * w, axis=1)
        sqn[:, k + 1] = np.linalg.norm(total, axis=1) ** 2
    out = []
    for arr in norms + [sqn]:
        mean = np.mean(arr, axis=0)
        m2 = np.sum((arr - mean) ** 2, axis=0)
        out.append((B, mean, m2))
    return out


def mc_expected_norms(
    op: SpectralOperator,
    noise: NoiseSpec,
    forcing: Optional[ForcingSpec],
    xi,
    mesh: GradedMesh,
    replicas: int,
    alpha1: float,
    master_seed: int = 0,
    nu: Optional[float] = None,
    threads: Optional[int] = None,
) -> MCNorms:
    """Estimate E||X(t)||, E||A^{alpha1}X(t)|| and E||X(t)||^2 per node.

    X = S(t)xi + deterministic convolution + W_G; the deterministic part is
    computed once and shared by all replicas.  Replicas are processed in
    fixed-size batches reduced in index order, so the estimates are bitwise
    reproducible for any thread count (threads defaults to EVOREG_THREADS).
    """
    if replicas < 100:
        raise ValueError("moment estimation requires at least 100 replicas")
    if not noise.cylindrical and not (0 <= alpha1 <= 0.5 - noise.sigma + 1e-12):
        raise ValueError(
            f"need 0 <= alpha1 <= 1/2 - sigma = {0.5 - noise.sigma}, got {alpha1}"
        )
    if nu is not None and not (0 < nu < 0.5):
        raise ValueError(f"need 0 < nu < 1/2, got {nu}")

    if xi is not None or forcing is not None:
        xi0 = np.zeros(op.dim) if xi is None else xi
        det = solve_mild_deterministic(op, xi0, forcing, mesh).values
    else:
        det = np.zeros((mesh.K + 1, op.dim))
    decay, sd, _, _ = _step_tables(op, noise, mesh)

    lam = op.eigenvalues
    weights = [np.ones(op.dim), lam**alpha1]
    if nu is not None:
        weights.append(lam**nu)

    spans = [(lo, min(lo + _BATCH, replicas)) for lo in range(0, replicas, _BATCH)]
    workers = _resolve_threads(threads)

    def run(span):
        return _mc_batch(decay, sd, det, span[0], span[1], master_seed, weights)

    if workers == 1 or len(spans) == 1:
        parts = [run(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, spans))

    n_stat = len(weights) + 1
    counts = [0] * n_stat
    means = [np.zeros(mesh.K + 1) for _ in range(n_stat)]
    m2s = [np.zeros(mesh.K + 1) for _ in range(n_stat)]
    for part in parts:  # replica-order merge of (count, mean, M2) triples
        for i, (nb, mb, m2b) in enumerate(part):
            n = counts[i]
            tot = n + nb
            delta = mb - means[i]
            means[i] = means[i] + delta * (nb / tot)
            m2s[i] = m2s[i] + m2b + delta**2 * (n * nb / tot)
            counts[i] = tot

    def finish(i):
        var = m2s[i] / (replicas - 1)
        return means[i], np.sqrt(var / replicas)

    mean_norm, se_norm = finish(0)
    mean_a1, se_a1 = finish(1)
    mean_nu = se_nu = None
    if nu is not None:
        mean_nu, se_nu = finish(2)
    mean_sq, se_sq = finish(n_stat - 1)
    return MCNorms(
        times=mesh.nodes, alpha1=alpha1, nu=nu, replicas=replicas,
        master_seed=master_seed, mean_norm=mean_norm, se_norm=se_norm,
        mean_alpha1=mean_a1, se_alpha1=se_a1, mean_sq=mean_sq, se_sq=se_sq,
        mean_nu=mean_nu, se_nu=se_nu,
    )


@dataclass(frozen=True)
class HolderEstimate:
    """Regression estimate of a path ensemble's Hölder exponent."""

    exponent: float
    band: tuple[float, float]  # bootstrap 90% interval
    lags: np.ndarray
    lag_times: np.ndarray
    statistics: np.ndarray
    n_paths: int
    n_nodes: int
    seed: int


def estimate_holder_exponent(
    paths: Sequence[Trajectory],
    epsilon: float,
    T: float,
    bootstrap: int = 200,
    seed: int = 0,
) -> HolderEstimate:
    """Fit the increment-scaling exponent of an ensemble on [epsilon, T].

    For each dyadic lag the statistic is the worst (over starting nodes)
    root-mean-square over paths of the increment norm; the exponent is the
    log-log regression slope over lags spanning at least three octaves.
    The max over starts keeps a single rough window from being averaged
    away, while the RMS over paths removes the chi-square spread a plain
    max would pick up on Gaussian ensembles.  Requires >= 10 paths on a
    common uniform grid with >= 16 nodes inside [epsilon, T].
    """
    if len(paths) < 10:
        raise ValueError("exponent estimation requires at least 10 paths")
    t0 = paths[0].times
    for p in paths[1:]:
        if not np.array_equal(p.times, t0):
            raise ValueError("paths must share a common time grid")
    mask = (t0 >= epsilon - 1e-12) & (t0 <= T + 1e-12)
    sub = t0[mask]
    if sub.size < 16:
        raise ValueError(
            f"need at least 16 nodes in [{epsilon}, {T}], found {sub.size}"
        )
    d = np.diff(sub)
    dt = float(np.mean(d))
    if np.max(np.abs(d - dt)) > 1e-8 * dt:
        raise ValueError("exponent estimation requires uniform node spacing")

    max_lag = 1
    while 2 * max_lag <= (sub.size - 1) // 2:
        max_lag *= 2
    lags = []
    ell = 1
    while ell <= max_lag:
        lags.append(ell)
        ell *= 2
    if len(lags) < 4:
        raise ValueError("need lags spanning at least 3 octaves (>= 33 nodes)")
    lags = np.array(lags)

    vals = np.stack([p.values[mask] for p in paths])  # (P, n, N)
    sq_by_lag = []
    for ell in lags:
        diff = vals[:, ell:, :] - vals[:, :-ell, :]
        sq_by_lag.append(np.sum(diff**2, axis=2))  # (P, n-ell)

    def slope_for(weights_idx) -> tuple[float, np.ndarray]:
        stats = np.empty(lags.size)
        for i, sq in enumerate(sq_by_lag):
            stats[i] = np.sqrt(np.max(np.mean(sq[weights_idx], axis=0)))
        if np.any(stats <= 0):
            raise ValueError("degenerate (zero) increments; exponent undefined")
        coef = np.polyfit(np.log(lags * dt), np.log(stats), 1)
        return float(coef[0]), stats

    P = len(paths)
    exponent, stats = slope_for(np.arange(P))
    rng = np.random.default_rng(seed)
    boot = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = rng.integers(0, P, size=P)
        boot[b] = slope_for(idx)[0]
    lo, hi = np.percentile(boot, [5.0, 95.0])
    return HolderEstimate(
        exponent=exponent, band=(float(lo), float(hi)), lags=lags,
        lag_times=lags * dt, statistics=stats, n_paths=P,
        n_nodes=int(sub.size), seed=seed,
    )


def weak_residual(
    op: SpectralOperator,
    sample: PathSample,
    noise: NoiseSpec,
    forcing: Optional[ForcingSpec],
    mode: int,
) -> np.ndarray:
    """Per-node defect of the tested-against-eigenvector solution identity.

    r(t_k) = |X_n(t_k) - X_n(0) - int_0^{t_k} (F_n - lam_n X_n) ds
             - sum_{j<k} g_n(m_j) dW_j|

    with the time integral by the trapezoid rule on the path's own nodes
    and the recorded Wiener increments of the very path.  The quadrature
    makes the defect O(h) for noisy paths and O(h^2) when the martingale
    term vanishes.
    """
    if sample.increments is None:
        raise ValueError("path was sampled without an increment record")
    traj = sample.trajectory
    K = traj.node_count - 1
    if sample.increments.shape != (K, op.dim):
        raise ValueError(
            f"increment record has shape {sample.increments.shape}, "
            f"expected {(K, op.dim)}"
        )
    if not (0 <= mode < op.dim):
        raise ValueError(f"mode index {mode} out of range")
    t = traj.times
    lam_n = op.eigenvalues[mode]
    x = traj.values[:, mode]
    drift = -lam_n * x
    if forcing is not None:
        drift = drift + lam_n**forcing.alpha * forcing.sample(t)[:, mode]
    integral = cumulative_trapezoid(drift, t, initial=0.0)
    mid = 0.5 * (t[:-1] + t[1:])
    g = noise.sample(mid)[:, mode]
    martingale = np.concatenate(([0.0], np.cumsum(g * sample.increments[:, mode])))
    return np.abs(x - x[0] - integral - martingale)


@dataclass(frozen=True)
class StochVerification:
    """Moment-estimate and path-regularity evaluation for noisy runs."""

    mc: MCNorms
    c_hat: float
    ratio: np.ndarray
    xi_term: float
    noise_norm: float
    forcing_norm: Optional[float]    # None when F is absent
    mean_report: HolderReport        # weighted norm of t -> E||A^{a}X(t)||
    exponent: HolderEstimate
    alpha1: float
    gamma: float
    epsilon: float
    nu: float
    nu_increment_max: float
    nu_finite: bool

    @property
    def c_hat_finite(self) -> bool:
        return bool(np.isfinite(self.c_hat))

    @property
    def mean_norm_finite(self) -> bool:
        return bool(np.isfinite(self.mean_report.norm))

    @property
    def exponent_ok(self) -> bool:
        return self.exponent.exponent >= self.gamma

    @property
    def passed(self) -> bool:
        return (self.c_hat_finite and self.mean_norm_finite
                and self.exponent_ok and self.nu_finite)


@dataclass(frozen=True)
class BoundConstant:
    """Empirical moment-bound constant and its ingredients."""

    c_hat: float
    ratio: np.ndarray
    xi_term: float
    noise_norm: float
    forcing_norm: Optional[float]
    mc: MCNorms


def empirical_bound_constant(
    op: SpectralOperator,
    noise: NoiseSpec,
    forcing: Optional[ForcingSpec],
    xi,
    mesh: GradedMesh,
    replicas: int,
    alpha1: float,
    master_seed: int = 0,
    nu: Optional[float] = None,
    threads: Optional[int] = None,
) -> BoundConstant:
    """sup over nodes of E||X(t)|| divided by the moment-estimate envelope
    ||A^beta xi|| [+ ||A^{-alpha}F|| t^{beta-alpha}] + ||G|| t^{beta-1/2}.

    The weighted norms are discrete norms on the mesh's positive nodes;
    0/0 nodes (zero data) count as 0.
    """
    mc = mc_expected_norms(op, noise, forcing, xi, mesh, replicas, alpha1,
                           master_seed=master_seed, nu=nu, threads=threads)
    lam = op.eigenvalues
    xi0 = np.zeros(op.dim) if xi is None else np.asarray(xi, dtype=float)
    xi_term = float(np.linalg.norm(lam**noise.beta * xi0))
    pos_t = mesh.nodes[mesh.nodes > 0]
    noise_traj = Trajectory(pos_t, noise.sample(pos_t), T=mesh.T)
    noise_norm = weighted_holder_norm(noise_traj, noise.beta, noise.sigma).norm
    denom = xi_term + noise_norm * mesh.nodes ** (noise.beta - 0.5)
    forcing_norm = None
    if forcing is not None:
        f_traj = Trajectory(pos_t, forcing.sample(pos_t), T=mesh.T)
        forcing_norm = weighted_holder_norm(f_traj, forcing.beta, forcing.sigma).norm
        denom = denom + forcing_norm * mesh.nodes ** (forcing.beta - forcing.alpha)
    num = mc.mean_norm
    ratio = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0),
                     np.where(num > 0, np.inf, 0.0))
    return BoundConstant(c_hat=float(np.max(ratio)), ratio=ratio,
                         xi_term=xi_term, noise_norm=noise_norm,
                         forcing_norm=forcing_norm, mc=mc)


def _verify_core(
    op: SpectralOperator,
    noise: NoiseSpec,
    forcing: Optional[ForcingSpec],
    xi,
    mesh: GradedMesh,
    replicas: int,
    alpha1: float,
    gamma: float,
    epsilon: float,
    nu: float,
    master_seed: int,
    path_count: int,
    path_nodes: int,
    threads: Optional[int],
) -> StochVerification:
    if noise.cylindrical:
        raise ValueError(
            "cylindrical noise is a flagged comparison mode; moment-estimate "
            "verification requires square-summable multipliers"
        )
    validate_H4(noise.beta, noise.sigma).raise_if_failed()
    if not (0 < gamma < noise.sigma):
        raise ValueError(f"need 0 < gamma < sigma = {noise.sigma}, got {gamma}")
    if not (0 < epsilon <= mesh.T):
        raise ValueError(f"need 0 < epsilon <= T = {mesh.T}, got {epsilon}")
    if not (0 < nu < 0.5):
        raise ValueError(f"need 0 < nu < 1/2, got {nu}")

    bound = empirical_bound_constant(op, noise, forcing, xi, mesh, replicas,
                                     alpha1, master_seed=master_seed, nu=nu,
                                     threads=threads)
    mc = bound.mc
    lam = op.eigenvalues
    xi0 = np.zeros(op.dim) if xi is None else np.asarray(xi, dtype=float)
    xi_term = bound.xi_term
    noise_norm = bound.noise_norm
    forcing_norm = bound.forcing_norm
    pos_idx = mesh.nodes > 0
    pos_t = mesh.nodes[pos_idx]
    ratio = bound.ratio
    c_hat = bound.c_hat

    mean_traj = Trajectory(pos_t, mc.mean_alpha1[pos_idx], T=mesh.T)
    mean_report = weighted_holder_norm(mean_traj, noise.beta, noise.sigma)

    path_mesh = uniform_mesh(mesh.T, path_nodes)
    paths = sample_paths(op, noise, path_mesh, path_count, master_seed,
                         xi=xi0, forcing=forcing)
    scaled = [
        Trajectory(p.times, p.values * lam[None, :] ** alpha1, T=mesh.T)
        for p in paths
    ]
    exponent = estimate_holder_exponent(scaled, epsilon, mesh.T, seed=master_seed)

    keep = path_mesh.nodes >= epsilon - 1e-12
    inc_max = 0.0
    finite = True
    for p in paths:
        rough = p.values[keep] * lam[None, :] ** nu
        finite = finite and bool(np.all(np.isfinite(rough)))
        if rough.shape[0] > 1:
            inc = np.linalg.norm(np.diff(rough, axis=0), axis=1)
            inc_max = max(inc_max, float(np.max(inc)))

    return StochVerification(
        mc=mc, c_hat=c_hat, ratio=ratio, xi_term=xi_term,
        noise_norm=noise_norm, forcing_norm=forcing_norm,
        mean_report=mean_report, exponent=exponent, alpha1=alpha1,
        gamma=gamma, epsilon=epsilon, nu=nu, nu_increment_max=inc_max,
        nu_finite=finite,
    )


def verify_stochastic(
    op: SpectralOperator,
    noise: NoiseSpec,
    xi,
    mesh: GradedMesh,
    replicas: int,
    alpha1: float,
    gamma: float,
    epsilon: float,
    nu: float = 0.45,
    master_seed: int = 0,
    path_count: int = 64,
    path_nodes: int = 512,
    threads: Optional[int] = None,
) -> StochVerification:
    """Pure-noise moment estimate: no external forcing.

    Evaluates the empirical constant C_hat = sup_t of
    E||X(t)|| / (||A^beta xi|| + ||G|| t^{beta-1/2}), the weighted-class
    norm of t -> E||A^{alpha1}X(t)||, the path Hölder exponent of
    A^{alpha1}X on [epsilon, T] against gamma, and finiteness of A^nu X.
    """
    return _verify_core(op, noise, None, xi, mesh, replicas, alpha1, gamma,
                        epsilon, nu, master_seed, path_count, path_nodes, threads)


def verify_combined(
    op: SpectralOperator,
    noise: NoiseSpec,
    forcing: ForcingSpec,
    xi,
    mesh: GradedMesh,
    replicas: int,
    gamma: float,
    epsilon: float,
    nu: float = 0.45,
    master_seed: int = 0,
    path_count: int = 64,
    path_nodes: int = 512,
    threads: Optional[int] = None,
) -> StochVerification:
    """Forced-plus-noise moment estimate.

    Same report as verify_stochastic with alpha1 replaced by the forcing
    exponent alpha and the denominator extended by the forcing norm term
    ||A^{-alpha}F|| t^{beta-alpha} (sum of the three sources).  Requires
    the joint exponent window: alpha must satisfy both the forcing gate
    and alpha <= 1/2 - sigma; an empty window is refused with the interval.
    """
    if forcing is None:
        raise ValueError("combined verification needs a forcing term")
    if (forcing.beta, forcing.sigma) != (noise.beta, noise.sigma):
        raise ValueError(
            "forcing and noise must share the weighted-class exponents: "
            f"forcing has ({forcing.beta}, {forcing.sigma}), "
            f"noise has ({noise.beta}, {noise.sigma})"
        )
    lo, hi = feasible_alpha_interval(forcing.beta, forcing.sigma)
    if not lo < hi:
        raise ValueError(
            f"no alpha satisfies (1+sigma)/4 < alpha <= min(beta/2, 1/2-sigma): "
            f"the interval ({lo}, {hi}] is empty for beta={forcing.beta}, "
            f"sigma={forcing.sigma}"
        )
    if forcing.alpha > 0.5 - forcing.sigma + 1e-12:
        raise ValueError(
            f"need alpha <= 1/2 - sigma = {0.5 - forcing.sigma}, "
            f"got alpha = {forcing.alpha}; feasible interval ({lo}, {hi}]"
        )
    return _verify_core(op, noise, forcing, xi, mesh, replicas, forcing.alpha,
                        gamma, epsilon, nu, master_seed, path_count,
                        path_nodes, threads)

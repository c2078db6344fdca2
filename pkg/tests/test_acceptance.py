"""End-to-end acceptance checks, one test per criterion.

Each test prints a single summary line; the pytest -v listing doubles as
the pass/fail sheet.  Tolerances and replica counts are fixed here and
treated as part of the contract: loosening them is not a fix.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

from evoreg import (
    ForcingSpec,
    GradedMesh,
    NoiseSpec,
    PathSample,
    SpectralOperator,
    Trajectory,
    build_cable_operator,
    empirical_bound_constant,
    estimate_holder_exponent,
    fractional_power_apply,
    ito_isometry_oracle,
    make_noise,
    mc_expected_norms,
    operator_norm_semigroup,
    resolvent_apply,
    sample_paths,
    sample_stochastic_convolution,
    semigroup_apply,
    smoothing_envelope,
    solve_mild_deterministic,
    uniform_mesh,
    verify_deterministic,
    weak_residual,
    weighted_holder_norm,
)
from evoreg.config import (
    build_forcing,
    build_initial,
    build_mesh,
    build_noise,
    build_operator,
    load_config,
)
from oracles import brownian_paths, quad_mild_oracle


def summary(n, ok, text):
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {text}")
    assert ok


def test_criterion_1_semigroup_and_power_algebra():
    op = build_cable_operator(np.pi, 256)
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        x = rng.standard_normal(256)
        t, s = rng.uniform(0.0, 1.0, size=2)
        a = semigroup_apply(op, t + s, x).coeffs
        b = semigroup_apply(op, t, semigroup_apply(op, s, x).coeffs).coeffs
        worst = max(worst, np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300))
        t1, t2 = rng.uniform(-1.0, 1.0, size=2)
        p = fractional_power_apply(op, t1 + t2, x).coeffs
        q = fractional_power_apply(op, t1, fractional_power_apply(op, t2, x).coeffs).coeffs
        worst = max(worst, np.linalg.norm(p - q) / max(np.linalg.norm(p), 1e-300))
        lam = rng.uniform(0.5, 50.0) * np.exp(1j * rng.uniform(0.4, 5.9))
        y = resolvent_apply(op, lam, x)
        back = lam * y - op.eigenvalues * y
        worst = max(worst, np.linalg.norm(back - x) / np.linalg.norm(x))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    summary(1, ok, f"semigroup/power/resolvent algebra: worst rel {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_smoothing_envelope():
    # log-spaced synthetic spectrum keeps the discrete maximizer within
    # 1.5% of every continuous one, so near-equality is testable
    op = SpectralOperator(np.geomspace(0.01, 2e4, 512))
    tgrid = np.geomspace(1e-4, 10.0, 100)
    t0 = time.perf_counter()
    ok = True
    worst_gap = 0.0
    for theta in (0.25, 0.5, 1.0):
        env = smoothing_envelope(theta, tgrid)
        norms = np.array([operator_norm_semigroup(op, theta, t) for t in tgrid])
        ok = ok and bool(np.all(norms <= env * (1 + 1e-12)))
        interior = (theta / tgrid >= op.lambda_min) & (theta / tgrid <= op.lambda_max)
        gap = np.max(1.0 - norms[interior] / env[interior])
        worst_gap = max(worst_gap, float(gap))
        ok = ok and gap <= 1e-3
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 1.0
    summary(2, ok, f"envelope dominates, equality gap {worst_gap:.2e} at interior maximizers, {elapsed:.2f}s")


def test_criterion_3_deterministic_estimate(configs_dir):
    t0 = time.perf_counter()
    rows = []
    ok = True
    for name in ("det_single_beta1", "det_single_beta07", "det_multimode"):
        cfg = load_config(configs_dir / f"{name}.toml")
        op = build_operator(cfg)
        xi = build_initial(cfg, op)
        forcing = build_forcing(cfg, op)
        mesh = build_mesh(cfg)
        assert mesh.K == 2000 and mesh.r == 2.0
        base = verify_deterministic(op, xi, forcing, mesh, cfg.exponents.sigma)
        fine = verify_deterministic(op, xi, forcing, mesh.refined(2), cfg.exponents.sigma)
        drift = abs(fine.sup_ratio - base.sup_ratio) / base.sup_ratio
        rows.append(f"{name}: sup {base.sup_ratio:.4f} drift {drift:.2%}")
        ok = ok and base.sup_ratio <= 1.02 and drift <= 0.02
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    summary(3, ok, "; ".join(rows) + f", {elapsed:.1f}s")


def test_criterion_4_solver_accuracy():
    beta, alpha = 0.7, 0.35
    forcing = ForcingSpec(lambda t: t[:, None] ** (beta - 1.0), alpha, beta, 0.2)
    op = SpectralOperator(np.array([1.0]))

    def max_rel_err(K):
        mesh = GradedMesh(1.0, K, 2.0)
        traj = solve_mild_deterministic(op, np.zeros(1), forcing, mesh)
        idx = np.unique(np.concatenate([
            np.arange(1, 13), np.arange(50, K + 1, K // 20), [K]
        ]))
        oracle = np.array([
            quad_mild_oracle(1.0, alpha, beta, lambda s: 1.0, t)
            for t in mesh.nodes[idx]
        ])
        return float(np.max(np.abs(traj.values[idx, 0] - oracle) / np.abs(oracle)))

    err2000 = max_rel_err(2000)
    err1000 = max_rel_err(1000)
    factor = err1000 / err2000
    ok = err2000 <= 1e-6 and factor >= 3.0
    summary(4, ok, f"rel err {err2000:.2e} at K=2000, reduction x{factor:.1f} under doubling")


def test_criterion_5_ito_isometry(cable3):
    t0 = time.perf_counter()
    R = 10_000
    white = make_noise("cylindrical-white", cable3, beta=1.0, sigma=0.25)
    mc = mc_expected_norms(cable3, white, None, None, uniform_mesh(1.0, 16), R, alpha1=0.0, master_seed=7)
    est = mc.node_estimate("sq")
    target = ito_isometry_oracle(cable3, white, 1.0)
    z3 = abs(est.mean - target) / est.std_error
    ok = z3 <= 3.0 and abs(target - 0.777748) < 1e-6

    op64 = build_cable_operator(np.pi, 64)
    g = 1.0 / op64.eigenvalues
    # independent route: force the per-mode adaptive quadrature
    quad_noise = NoiseSpec(lambda t: np.broadcast_to(g, (t.size, 64)).copy(),
                           0.8, 0.2, time_invariant=False)
    closed = make_noise("constant", op64, beta=0.8, sigma=0.2)
    mc64 = mc_expected_norms(op64, closed, None, None, uniform_mesh(1.0, 32), R, alpha1=0.0, master_seed=11)
    est64 = mc64.node_estimate("sq")
    target64 = ito_isometry_oracle(op64, quad_noise, 1.0)
    z64 = abs(est64.mean - target64) / est64.std_error
    elapsed = time.perf_counter() - t0
    ok = ok and z64 <= 3.0 and elapsed < 30.0
    summary(5, ok, f"N=3 z={z3:.2f} vs 0.777749; N=64 z={z64:.2f} vs quadrature, {elapsed:.1f}s")


def test_criterion_6_moment_bound_stability(configs_dir):
    cfg = load_config(configs_dir / "stoch_pure_noise.toml")
    op = build_operator(cfg)
    noise = build_noise(cfg, op)
    mesh = build_mesh(cfg)
    assert (cfg.exponents.beta, cfg.exponents.sigma, cfg.exponents.alpha1) == (0.8, 0.2, 0.3)

    def c_hat(mesh_, replicas):
        return empirical_bound_constant(
            op, noise, None, None, mesh_, replicas, alpha1=0.3, master_seed=cfg.master_seed
        )

    base = c_hat(mesh, cfg.replicas)
    k2 = c_hat(mesh.refined(2), cfg.replicas)
    r10 = c_hat(mesh, 10 * cfg.replicas)
    dk = abs(k2.c_hat - base.c_hat) / base.c_hat
    dr = abs(r10.c_hat - base.c_hat) / base.c_hat
    ok = np.isfinite(base.c_hat) and dk <= 0.10 and dr <= 0.10

    pos = mesh.nodes > 0
    curve = Trajectory(mesh.nodes[pos], base.mc.mean_alpha1[pos], T=mesh.T)
    rep = weighted_holder_norm(curve, 0.8, 0.2)
    decade = rep.modulus[9] / rep.modulus[-1]
    ok = ok and np.isfinite(rep.norm) and decade <= 0.5
    summary(6, ok, f"C_hat {base.c_hat:.4f} (K->2K {dk:.2%}, R->10R {dr:.2%}); "
                   f"mean-curve norm {rep.norm:.3f}, first-decade modulus ratio {decade:.3f}")


def test_criterion_7_path_regularity():
    t0 = time.perf_counter()
    # deterministic cusp |t - 1/2|^0.3
    t = np.linspace(0.0, 1.0, 513)
    cusp = [Trajectory(t, np.abs(t - 0.5) ** 0.3, T=1.0) for _ in range(10)]
    e_cusp = estimate_holder_exponent(cusp, 0.1, 1.0, seed=1).exponent
    # sampled scalar Brownian motion
    e_bm = estimate_holder_exponent(brownian_paths(64, 512, 1.0, 42), 0.1, 1.0, seed=2).exponent
    # cable ensemble, smoothed state
    op = build_cable_operator(np.pi, 64)
    noise = make_noise("smooth-decay", op, beta=0.8, sigma=0.2)
    mesh = uniform_mesh(1.0, 512)
    w = op.eigenvalues**0.3
    ens = [Trajectory(p.times, p.values * w, T=1.0)
           for p in sample_paths(op, noise, mesh, 64, master_seed=11)]
    e_cable = estimate_holder_exponent(ens, 0.1, 1.0, seed=3).exponent
    # flagged white-noise comparison at N=256, unweighted state
    op256 = build_cable_operator(np.pi, 256)
    white = make_noise("cylindrical-white", op256, beta=1.0, sigma=0.25)
    comp = sample_paths(op256, white, mesh, 64, master_seed=9)
    e_white = estimate_holder_exponent(comp, 0.1, 1.0, seed=4).exponent
    elapsed = time.perf_counter() - t0
    ok = (
        abs(e_cusp - 0.3) <= 0.05
        and abs(e_bm - 0.5) <= 0.1
        and e_cable >= 0.15
        and 0.15 <= e_white <= 0.35
        and elapsed < 300.0
    )
    summary(7, ok, f"cusp {e_cusp:.3f}, brownian {e_bm:.3f}, cable {e_cable:.3f}, "
                   f"white-noise comparison {e_white:.3f} (near 1/4), {elapsed:.1f}s")


def test_criterion_8_weak_residual_rates():
    op = SpectralOperator(np.array([1.0]))
    noise = make_noise("cylindrical-white", op, beta=1.0, sigma=0.25)
    Ks = np.array([64, 128, 256, 512])
    means = []
    for K in Ks:
        mesh = uniform_mesh(1.0, int(K))
        maxima = [
            np.max(weak_residual(
                op,
                sample_stochastic_convolution(op, noise, mesh, (42, r), record_increments=True),
                noise, None, 0,
            ))
            for r in range(16)
        ]
        means.append(np.mean(maxima))
    slope = -np.polyfit(np.log(Ks), np.log(means), 1)[0]

    zero_noise = NoiseSpec(lambda t: np.zeros((t.size, 1)), 0.8, 0.2)
    cancel = []
    for K in Ks:
        mesh = uniform_mesh(1.0, int(K))
        det = solve_mild_deterministic(op, np.array([1.0]), None, mesh)
        sample = PathSample(det, np.zeros((int(K), 1)), (0, 0))
        cancel.append(np.max(weak_residual(op, sample, zero_noise, None, 0)))
    slope2 = -np.polyfit(np.log(Ks), np.log(cancel), 1)[0]
    ok = 0.9 <= slope <= 1.1 and slope2 >= 1.8
    summary(8, ok, f"noisy residual rate {slope:.3f} in [0.9, 1.1]; cancellation rate {slope2:.2f} >= 1.8")


def test_criterion_9_reproducibility(configs_dir, tmp_path):
    env_base = dict(os.environ)
    blobs = {}
    for sub, name in (("verify-stoch", "stoch_pure_noise"), ("isometry", "isometry_cable3")):
        per_sub = []
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "8")):
            out = tmp_path / f"{name}-{tag}"
            env = dict(env_base, EVOREG_THREADS=threads)
            r = subprocess.run(
                [sys.executable, "-m", "evoreg.cli", sub,
                 "--config", str(configs_dir / f"{name}.toml"),
                 "--out", str(out), "--format", "json"],
                capture_output=True, text=True, env=env, timeout=600,
            )
            assert r.returncode == 0, r.stderr
            per_sub.append((out / "report.json").read_bytes())
        blobs[sub] = per_sub
    ok = all(b[0] == b[1] == b[2] for b in blobs.values())
    seeds = {sub: json.loads(b[0])["seed"] for sub, b in blobs.items()}
    summary(9, ok, f"byte-identical reports across reruns and thread counts (seeds {seeds})")

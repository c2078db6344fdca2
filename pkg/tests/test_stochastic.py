"""Exact noise discretization, moment estimators and path statistics."""

import numpy as np
import pytest

from evoreg import (
    ForcingSpec,
    NoiseSpec,
    PathSample,
    SpectralOperator,
    Trajectory,
    build_cable_operator,
    estimate_holder_exponent,
    ito_isometry_oracle,
    make_noise,
    mc_expected_norms,
    sample_paths,
    sample_stochastic_convolution,
    solve_mild_deterministic,
    uniform_mesh,
    validate_H4,
    verify_combined,
    weak_residual,
)
from evoreg.stochastic import feasible_alpha_interval
from oracles import brownian_paths, ou_variance

SINGLE = SpectralOperator(np.array([1.0]))


def unit_noise(op, beta=1.0, sigma=0.25):
    return make_noise("cylindrical-white", op, beta=beta, sigma=sigma)


def test_gate_examples():
    assert validate_H4(0.8, 0.2).ok        # 0.2 < 0.3
    assert not validate_H4(0.8, 0.35).ok   # 0.35 >= 0.3
    assert not validate_H4(0.5, 0.1).ok    # beta - 1/2 = 0
    with pytest.raises(ValueError, match="beta - 1/2"):
        validate_H4(0.8, 0.35).raise_if_failed()
    with pytest.raises(ValueError):
        NoiseSpec(lambda t: np.ones((t.size, 1)), 0.8, 0.35)
    # the flagged comparison mode bypasses the gate
    NoiseSpec(lambda t: np.ones((t.size, 1)), 0.8, 0.35, cylindrical=True)


def test_zero_multipliers_give_zero_path():
    noise = NoiseSpec(lambda t: np.zeros((t.size, 1)), 0.8, 0.2)
    sample = sample_stochastic_convolution(SINGLE, noise, uniform_mesh(1.0, 64), (0, 0))
    assert np.all(sample.trajectory.values == 0.0)


def test_ou_variance_single_mode():
    # lam=1, g=1, t=1: Var = (1-e^{-2})/2, MC within 3 SE at 1e4 replicas
    R = 10_000
    noise = unit_noise(SINGLE)
    mesh = uniform_mesh(1.0, 16)
    finals = np.array([
        sample_stochastic_convolution(SINGLE, noise, mesh, (11, r)).trajectory.values[-1, 0]
        for r in range(R)
    ])
    var_hat = np.var(finals, ddof=1)
    target = ou_variance(1.0, 1.0, 1.0)
    assert target == pytest.approx(0.432332, abs=5e-7)
    se = target * np.sqrt(2.0 / (R - 1))  # variance-of-variance for Gaussians
    assert abs(var_hat - target) < 3.0 * se
    # mean is zero to 3 SE too
    assert abs(np.mean(finals)) < 3.0 * np.sqrt(target / R)


def test_disjoint_increments_uncorrelated():
    R = 4000
    noise = unit_noise(SINGLE)
    mesh = uniform_mesh(1.0, 4)
    a = np.empty(R)
    b = np.empty(R)
    for r in range(R):
        x = sample_stochastic_convolution(SINGLE, noise, mesh, (5, r)).trajectory.values[:, 0]
        # innovations over [0, 1/4] and [1/2, 3/4] given the marching identity
        a[r] = x[1]
        b[r] = x[3] - np.exp(-0.25) * x[2]
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 4.0 / np.sqrt(R)


def test_gaussianity_of_marginal():
    R = 8000
    noise = unit_noise(SINGLE)
    mesh = uniform_mesh(1.0, 8)
    finals = np.array([
        sample_stochastic_convolution(SINGLE, noise, mesh, (3, r)).trajectory.values[-1, 0]
        for r in range(R)
    ])
    z = (finals - finals.mean()) / finals.std(ddof=1)
    skew = np.mean(z**3)
    kurt = np.mean(z**4) - 3.0
    assert abs(skew) < 4.0 * np.sqrt(6.0 / R)
    assert abs(kurt) < 4.0 * np.sqrt(24.0 / R)


def test_isometry_closed_form_cable3(cable3):
    # frozen value: sum over lam in {1,2,5} of (1-e^{-2 lam})/(2 lam)
    noise = unit_noise(cable3)
    val = ito_isometry_oracle(cable3, noise, 1.0)
    direct = sum((1.0 - np.exp(-2.0 * l)) / (2.0 * l) for l in (1.0, 2.0, 5.0))
    assert val == pytest.approx(direct, rel=1e-14)
    assert val == pytest.approx(0.7777489086665338, rel=1e-13)  # frozen
    assert val == pytest.approx(0.777748, abs=1e-6)
    assert ito_isometry_oracle(cable3, noise, 0.0) == 0.0


def test_isometry_quadrature_matches_closed_form(cable3):
    # same constant multipliers routed through adaptive quadrature
    g = 1.0 / cable3.eigenvalues
    quad_noise = NoiseSpec(
        lambda t: np.broadcast_to(g, (t.size, 3)).copy(), 0.8, 0.2, time_invariant=False
    )
    closed_noise = make_noise("constant", cable3, beta=0.8, sigma=0.2)
    a = ito_isometry_oracle(cable3, quad_noise, 1.0)
    b = ito_isometry_oracle(cable3, closed_noise, 1.0)
    assert a == pytest.approx(b, rel=1e-9)


def test_isometry_long_time_limit():
    # g_n = lam_n^{-1}: E||W_G(inf)||^2 = sum lam_n^{-2} / (2 lam_n)
    op = build_cable_operator(np.pi, 8)
    noise = make_noise("constant", op, beta=0.8, sigma=0.2)
    limit = np.sum(op.eigenvalues**-2 / (2.0 * op.eigenvalues))
    assert ito_isometry_oracle(op, noise, 50.0) == pytest.approx(limit, rel=1e-12)


def test_isometry_mc_agreement():
    op = build_cable_operator(np.pi, 3)
    noise = unit_noise(op)
    mesh = uniform_mesh(1.0, 16)
    for R in (1000, 10_000):
        mc = mc_expected_norms(op, noise, None, None, mesh, R, alpha1=0.0, master_seed=7)
        est = mc.node_estimate("sq")
        oracle = ito_isometry_oracle(op, noise, 1.0)
        assert abs(est.mean - oracle) <= 3.0 * est.std_error


def test_mc_mean_equals_plain_path_average():
    # one batch: the estimator must reproduce the average of individually
    # sampled paths bitwise (same streams, same summation order)
    op = build_cable_operator(np.pi, 4)
    noise = make_noise("constant", op, beta=0.8, sigma=0.2)
    mesh = uniform_mesh(1.0, 32)
    R = 100
    mc = mc_expected_norms(op, noise, None, None, mesh, R, alpha1=0.0, master_seed=13)
    norms = np.empty((R, mesh.K + 1))
    for r in range(R):
        s = sample_stochastic_convolution(op, noise, mesh, (13, r))
        norms[r] = np.linalg.norm(s.trajectory.values, axis=1)
    assert np.array_equal(mc.mean_norm, np.sum(norms, axis=0) / R)


def test_mc_jensen_consistency():
    op = build_cable_operator(np.pi, 4)
    noise = make_noise("smooth-decay", op, beta=0.8, sigma=0.2)
    mc = mc_expected_norms(op, noise, None, None, uniform_mesh(1.0, 32), 200, alpha1=0.3)
    assert np.all(mc.mean_norm <= np.sqrt(mc.mean_sq) * (1 + 1e-12))


def test_mc_threads_bitwise_identical():
    op = build_cable_operator(np.pi, 8)
    noise = make_noise("smooth-decay", op, beta=0.8, sigma=0.2)
    mesh = uniform_mesh(1.0, 32)
    one = mc_expected_norms(op, noise, None, None, mesh, 600, alpha1=0.2, threads=1)
    eight = mc_expected_norms(op, noise, None, None, mesh, 600, alpha1=0.2, threads=8)
    assert np.array_equal(one.mean_norm, eight.mean_norm)
    assert np.array_equal(one.se_norm, eight.se_norm)
    assert np.array_equal(one.mean_sq, eight.mean_sq)


def test_deterministic_data_passes_through():
    # G = 0 with xi and forcing: estimates equal the solver values, se = 0
    noise = NoiseSpec(lambda t: np.zeros((t.size, 1)), 0.8, 0.2)
    forcing = ForcingSpec(lambda t: t[:, None] ** (-0.3), 0.35, 0.7, 0.2)
    mesh = uniform_mesh(1.0, 32)
    xi = np.array([0.5])
    mc = mc_expected_norms(SINGLE, noise, forcing, xi, mesh, 120, alpha1=0.2)
    det = solve_mild_deterministic(SINGLE, xi, forcing, mesh)
    assert np.allclose(mc.mean_norm, np.linalg.norm(det.values, axis=1), atol=1e-14)
    assert np.all(mc.se_norm <= 1e-14)  # zero up to rounding of the replica mean


def test_mc_guards():
    noise = unit_noise(SINGLE)
    mesh = uniform_mesh(1.0, 8)
    with pytest.raises(ValueError, match="replicas"):
        mc_expected_norms(SINGLE, noise, None, None, mesh, 50, alpha1=0.0)
    smooth = NoiseSpec(lambda t: np.ones((t.size, 1)), 0.8, 0.2)
    with pytest.raises(ValueError, match="alpha1"):
        mc_expected_norms(SINGLE, smooth, None, None, mesh, 100, alpha1=0.4)
    with pytest.raises(ValueError, match="nu"):
        mc_expected_norms(SINGLE, smooth, None, None, mesh, 100, alpha1=0.0, nu=0.6)


def test_noise_midpoint_divergence_detected():
    # beta < 1 smooth-decay multipliers stay finite at midpoints, but a
    # handle returning inf is caught with the offending step named
    bad = NoiseSpec(
        lambda t: np.where(t[:, None] < 0.1, np.inf, 1.0), 0.8, 0.2
    )
    with pytest.raises(ValueError, match="step 0"):
        sample_stochastic_convolution(SINGLE, bad, uniform_mesh(1.0, 16), (0, 0))


def test_feasible_interval_examples():
    lo, hi = feasible_alpha_interval(1.0, 0.1)
    assert (lo, hi) == (0.275, 0.4)
    lo, hi = feasible_alpha_interval(1.0, 0.3)
    assert lo == pytest.approx(0.325) and hi == pytest.approx(0.2)
    assert not lo < hi  # empty window


def test_combined_verification_refusals(cable3):
    noise = make_noise("smooth-decay", cable3, beta=1.0, sigma=0.3)
    mesh = uniform_mesh(1.0, 64)
    forcing = ForcingSpec(lambda t: np.ones((t.size, 3)), 0.5, 1.0, 0.3)
    with pytest.raises(ValueError, match="empty"):
        verify_combined(cable3, noise, forcing, None, mesh, 100, 0.05, 0.1)
    mixed = make_noise("smooth-decay", cable3, beta=0.8, sigma=0.2)
    with pytest.raises(ValueError, match="share"):
        verify_combined(cable3, mixed, forcing, None, mesh, 100, 0.05, 0.1)
    white = unit_noise(cable3, beta=1.0, sigma=0.1)
    ok = ForcingSpec(lambda t: np.ones((t.size, 3)), 0.4, 1.0, 0.1)
    with pytest.raises(ValueError, match="comparison mode"):
        verify_combined(cable3, white, ok, None, mesh, 100, 0.05, 0.1)


def test_exponent_estimator_cusp():
    t = np.linspace(0.0, 1.0, 513)
    f = np.abs(t - 0.5) ** 0.3
    paths = [Trajectory(t, f, T=1.0) for _ in range(10)]
    est = estimate_holder_exponent(paths, 0.1, 1.0, seed=1)
    assert est.exponent == pytest.approx(0.3, abs=0.05)


def test_exponent_estimator_brownian():
    est = estimate_holder_exponent(brownian_paths(64, 512, 1.0, 21), 0.1, 1.0, seed=2)
    assert est.exponent == pytest.approx(0.5, abs=0.1)
    assert est.band[0] <= est.exponent <= est.band[1]


def test_exponent_estimator_smooth_line():
    t = np.linspace(0.0, 1.0, 513)
    paths = [Trajectory(t, 2.0 * t, T=1.0) for _ in range(10)]
    est = estimate_holder_exponent(paths, 0.1, 1.0, seed=3)
    assert est.exponent == pytest.approx(1.0, abs=1e-6)


def test_exponent_estimator_guards():
    t = np.linspace(0.0, 1.0, 513)
    paths = [Trajectory(t, t, T=1.0) for _ in range(10)]
    with pytest.raises(ValueError, match="10 paths"):
        estimate_holder_exponent(paths[:5], 0.1, 1.0)
    short = [Trajectory(t[:16], t[:16], T=1.0) for _ in range(10)]
    with pytest.raises(ValueError, match="octaves"):
        estimate_holder_exponent(short, 0.0, 1.0)
    tiny = [Trajectory(t[:12], t[:12], T=1.0) for _ in range(10)]
    with pytest.raises(ValueError, match="16 nodes"):
        estimate_holder_exponent(tiny, 0.0, 1.0)
    other = [Trajectory(t + 1e-6, t, T=2.0) for _ in range(10)]
    with pytest.raises(ValueError, match="common"):
        estimate_holder_exponent(paths[:9] + other[:1], 0.1, 1.0)
    graded = np.linspace(0.0, 1.0, 513) ** 2
    g = [Trajectory(graded[1:], graded[1:], T=1.0) for _ in range(10)]
    with pytest.raises(ValueError, match="uniform"):
        estimate_holder_exponent(g, 0.0, 1.0)
    flat = [Trajectory(t, np.ones_like(t), T=1.0) for _ in range(10)]
    with pytest.raises(ValueError, match="degenerate"):
        estimate_holder_exponent(flat, 0.1, 1.0)


def test_weak_residual_exact_cancellation_rate():
    # no forcing, no noise: X = S(t)xi and the defect is pure trapezoid
    # error, so the max residual decays like h^2
    noise = NoiseSpec(lambda t: np.zeros((t.size, 1)), 0.8, 0.2)
    maxima = []
    for K in (64, 128, 256, 512):
        mesh = uniform_mesh(1.0, K)
        det = solve_mild_deterministic(SINGLE, np.array([1.0]), None, mesh)
        sample = PathSample(det, np.zeros((K, 1)), (0, 0))
        maxima.append(np.max(weak_residual(SINGLE, sample, noise, None, 0)))
    slopes = np.diff(np.log(maxima)) / np.log(0.5)
    assert np.all(slopes > 1.8)


def test_weak_residual_wrong_eigenvalue_detected():
    noise = unit_noise(SINGLE)
    mesh = uniform_mesh(1.0, 256)
    sample = sample_stochastic_convolution(SINGLE, noise, mesh, (4, 0), record_increments=True)
    good = np.max(weak_residual(SINGLE, sample, noise, None, 0))
    wrong_op = SpectralOperator(np.array([3.0]))
    bad = np.max(weak_residual(wrong_op, sample, noise, None, 0))
    assert bad > 10.0 * good


def test_weak_residual_needs_increments():
    noise = unit_noise(SINGLE)
    sample = sample_stochastic_convolution(SINGLE, noise, uniform_mesh(1.0, 16), (0, 0))
    with pytest.raises(ValueError, match="increment"):
        weak_residual(SINGLE, sample, noise, None, 0)
    rec = sample_stochastic_convolution(
        SINGLE, noise, uniform_mesh(1.0, 16), (0, 0), record_increments=True
    )
    with pytest.raises(ValueError, match="out of range"):
        weak_residual(SINGLE, rec, noise, None, 5)


def test_recorded_increments_consistent_with_path():
    # recorded dW and the innovations share the exact per-step covariance;
    # regressing the innovation on dW recovers g(1-e^{-lam h})/(lam h)
    noise = unit_noise(SINGLE)
    K = 4
    mesh = uniform_mesh(1.0, K)
    R = 4000
    h = mesh.steps[0]
    lam = 1.0
    etas = np.empty(R)
    dws = np.empty(R)
    for r in range(R):
        s = sample_stochastic_convolution(SINGLE, noise, mesh, (9, r), record_increments=True)
        etas[r] = s.trajectory.values[1, 0]
        dws[r] = s.increments[0, 0]
    slope = np.sum(etas * dws) / np.sum(dws * dws)
    target = (1.0 - np.exp(-lam * h)) / (lam * h)
    assert slope == pytest.approx(target, abs=4.0 / np.sqrt(R))


def test_sample_paths_adds_deterministic_part():
    op = build_cable_operator(np.pi, 3)
    noise = make_noise("constant", op, beta=0.8, sigma=0.2)
    mesh = uniform_mesh(1.0, 32)
    xi = np.array([1.0, 0.0, -0.5])
    with_det = sample_paths(op, noise, mesh, 3, master_seed=2, xi=xi)
    pure = sample_paths(op, noise, mesh, 3, master_seed=2)
    det = solve_mild_deterministic(op, xi, None, mesh).values
    for w, p in zip(with_det, pure):
        assert np.allclose(w.values, p.values + det, atol=1e-14)

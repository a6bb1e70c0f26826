import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from slowmanifold.exceptions import NumericalFailure
from slowmanifold.fastslow_system import (Omega, StateZ, SystemSpec, Trajectory,
                                          integrate_random_system, sample_omega, shift_omega)
from slowmanifold.fractional_laplacian import build_operator
from slowmanifold.slow_manifold import (CertificationWarning, ManifoldConfig, ManifoldPoint,
                                        approx_manifold, back_transform_manifold,
                                        backward_noise, contraction_factor, lipschitz_bound,
                                        lp_step, solve_manifold_point, solve_tracking_point,
                                        tracking_factor, weighted_norm)
from slowmanifold.systems import example1, example2, linear_manifold, linear_system

NO_NOISE = Omega(None, None)


def test_contraction_closed_form(ex2):
    rho = contraction_factor(ex2)
    assert rho.rho == pytest.approx(0.00768, abs=5e-6)
    assert rho.contractive
    lam, gam = ex2.lambda1, ex2.gamma
    assert rho.rho == pytest.approx(0.01 / (lam - gam) + 0.01 / (gam / 0.01 + 1.0), rel=1e-12)


def test_contraction_limits(quiet):
    tiny = example2(epsilon=1e-7)
    # with the weight tied to eps the first term tends to K / (lambda1 - gamma)
    assert contraction_factor(tiny).rho == pytest.approx(0.01 / (tiny.lambda1 - tiny.gamma),
                                                         rel=1e-4)
    # with a fixed weight exponent it tends to K / lambda1 plus the slow term
    beta = -1e3
    val = contraction_factor(tiny, beta=beta).rho
    assert val == pytest.approx(0.01 / tiny.lambda1 + 0.01 / (1e3 + 1.0), rel=1e-3)
    assert 0.01 / tiny.lambda1 == pytest.approx(0.00621, abs=5e-6)


def test_zero_coupling_constants(quiet):
    spec = linear_system(c=0.0)
    assert contraction_factor(spec).rho == 0.0
    assert lipschitz_bound(spec) == 0.0


def test_lipschitz_bound_value(ex2):
    assert lipschitz_bound(ex2) == pytest.approx(0.007331, abs=5e-7)


def test_lipschitz_bound_monotone_in_K(quiet):
    vals = [lipschitz_bound(linear_system(c=k, epsilon=0.01)) for k in np.linspace(0, 0.3, 16)]
    assert np.all(np.diff(vals) > 0)


def test_lipschitz_bound_invalid(quiet):
    spec = linear_system(c=1.5, epsilon=0.01)
    with pytest.raises(ValueError):
        lipschitz_bound(spec)


def test_tracking_factor_exceeds_contraction(ex2):
    assert tracking_factor(ex2) > contraction_factor(ex2).rho


def test_config_horizon_check(ex2):
    cfg = ManifoldConfig().for_spec(ex2)
    assert cfg.horizon == pytest.approx(1.5 * 0.01 / ex2.gamma * math.log(1e8), abs=1e-4)
    with pytest.raises(ValueError, match="too short"):
        ManifoldConfig(horizon=0.05).for_spec(ex2)
    with pytest.raises(ValueError):
        ManifoldConfig(dt=0.0)


def test_lp_step_zero_forcing(quiet):
    op = build_operator(1.5, 3)
    spec = SystemSpec(0.1, op, lambda x, y: np.zeros(np.shape(x)),
                      lambda x, y: np.zeros(np.shape(y)), K=0.0, J=1.0, lipschitz_pairs=0)
    n = 2001
    t0 = -2.0
    traj = Trajectory(t0, 1e-3, np.random.default_rng(0).normal(size=(n, 3)), np.ones((n, 1)))
    out = lp_step(traj, NO_NOISE, spec, [0.7])
    assert np.all(out.x == 0)
    np.testing.assert_allclose(out.y[:, 0], 0.7 * np.exp(out.times), rtol=1e-14)


def test_zero_fast_forcing_gives_zero_graph(quiet):
    spec = example2()
    spec.f = lambda x, y: np.zeros(np.shape(x))
    for y in (-1.0, 0.5):
        assert np.all(solve_manifold_point(spec, NO_NOISE, y).h_value == 0)
        assert np.all(approx_manifold(spec, NO_NOISE, y, 0) == 0)
        assert np.all(approx_manifold(spec, NO_NOISE, y, 1) == 0)


@pytest.mark.parametrize("c,J,eps,alpha", [(0.1, 1.0, 0.05, 1.5), (0.2, 2.0, 0.1, 1.2),
                                          (0.05, 1.5, 0.02, 1.8)])
def test_linear_oracle(c, J, eps, alpha, quiet):
    spec = linear_system(c=c, J=J, epsilon=eps, alpha=alpha)
    p = solve_manifold_point(spec, NO_NOISE, 1.0)
    exact = linear_manifold(c, J, eps, alpha)
    assert p.h_value[0] == pytest.approx(exact, rel=1e-4)
    lam = spec.lambda1
    assert approx_manifold(spec, NO_NOISE, 1.0, 0)[0] == pytest.approx(c / lam, rel=1e-4)
    assert approx_manifold(spec, NO_NOISE, 1.0, 1)[0] == pytest.approx(
        c * (1 / lam - eps * J / lam ** 2), rel=1e-4)


def test_fixed_point_records(ex2):
    om = sample_omega(ex2, -1.2, 0.0, 1e-4, 2)
    p = solve_manifold_point(ex2, om, 1.0)
    r = np.asarray(p.residuals)
    assert p.final_residual <= 1e-12
    assert np.all(np.diff(r) < 0)
    assert np.max(np.abs(p.h_value - p.integral_value)) <= 1e-8
    assert np.all(p.ratios <= contraction_factor(ex2).rho + 0.05)


def test_max_iter_exceeded_carries_history(ex2):
    om = sample_omega(ex2, -1.2, 0.0, 1e-4, 2)
    with pytest.raises(NumericalFailure) as err:
        solve_manifold_point(ex2, om, 1.0, ManifoldConfig(max_iter=2))
    assert len(err.value.residuals) == 2


def test_non_contractive_marks_uncertified(quiet):
    spec = example1(epsilon=0.3, n_modes=2)
    spec.K = 5.0
    with pytest.warns(CertificationWarning):
        p = solve_manifold_point(spec, NO_NOISE, 0.5, ManifoldConfig(dt=1e-3))
    assert not p.certified


def test_back_transform():
    p = ManifoldPoint(np.array([1.0]), np.array([0.0, 0.0]), 1, [0.0])

    class S:
        sigma1 = 2.0

    np.testing.assert_array_equal(back_transform_manifold(p, 1.0, S), [2.0, 0.0])
    S.sigma1 = 0.0
    np.testing.assert_array_equal(back_transform_manifold(np.array([0.3, 0.1]), 5.0, S),
                                  [0.3, 0.1])
    S.sigma1 = 1.5
    a = back_transform_manifold(p, 1.0, S)
    b = back_transform_manifold(p, 3.0, S)
    assert b[0] == pytest.approx(3 * a[0])


def test_example2_zero_state_is_fixed(quiet):
    spec = example2(sigma1=0.0)
    assert np.all(solve_manifold_point(spec, NO_NOISE, 0.0).h_value == 0)


def test_example1_self_consistency(quiet):
    spec = example1(epsilon=0.05, n_modes=4, sigma1=0.1)
    cfg = ManifoldConfig(dt=1e-4)
    om = sample_omega(spec, -ManifoldConfig().for_spec(spec).horizon, 0.0, 1e-4, 3)
    p = solve_manifold_point(spec, om, 0.8, cfg, keep_trajectory=True)
    tr = p.trajectory
    w = np.exp(spec.lambda1 * tr.times / spec.epsilon)
    direct = trapezoid(w * tr.y[:, 0] ** 2, dx=tr.dt) / (6 * spec.epsilon)
    assert p.h_value[0] == pytest.approx(direct, abs=1e-8)


def test_weighted_distance_bound(ex2):
    cfg = ManifoldConfig().for_spec(ex2)
    om = sample_omega(ex2, -cfg.horizon, 0.0, cfg.dt, 4)
    pts = {y: solve_manifold_point(ex2, om, y, cfg, keep_trajectory=True) for y in (-1.0, 0.0, 1.0)}
    rho = contraction_factor(ex2).rho
    for a, b in ((-1.0, 0.0), (-1.0, 1.0), (0.0, 1.0)):
        ta, tb = pts[a].trajectory, pts[b].trajectory
        d = weighted_norm(ta.x - tb.x, ta.y - tb.y, ta.times, ex2.gamma / ex2.epsilon)
        assert d <= abs(a - b) / (1 - rho) * 1.05


def test_invariance(ex2):
    cfg = ManifoldConfig().for_spec(ex2)
    om = sample_omega(ex2, -cfg.horizon, 0.5, cfg.dt, 5)
    p = solve_manifold_point(ex2, om, 1.0, cfg)
    for t in (0.1, 0.5):
        tr = integrate_random_system(ex2, om, StateZ(p.h_value, p.y0), 0.0, t, cfg.dt)
        q = solve_manifold_point(ex2, shift_omega(om, t), tr.y[-1], cfg)
        scale = max(np.linalg.norm(q.h_value), 1e-3)
        assert np.linalg.norm(tr.x[-1] - q.h_value) <= 0.05 * scale


def test_tracking_on_manifold_is_trivial(ex2):
    cfg = ManifoldConfig().for_spec(ex2)
    om = sample_omega(ex2, -cfg.horizon, 1.0, cfg.dt, 6)
    h = solve_manifold_point(ex2, om, 1.0, cfg).h_value
    rep = solve_tracking_point(ex2, om, StateZ(h, [1.0]), cfg, t_forward=0.2)
    np.testing.assert_array_equal(rep.z_checked.x, h)
    assert np.all(rep.distance == 0)
    assert rep.window is None


def test_tracking_rate_and_contraction(ex2):
    cfg = ManifoldConfig().for_spec(ex2)
    om = sample_omega(ex2, -cfg.horizon, 1.0, cfg.dt, 7)
    x0 = np.zeros(8)
    x0[:2] = [0.5, -0.3]
    rep = solve_tracking_point(ex2, om, StateZ(x0, [1.0]), cfg)
    assert rep.decay_rate >= 0.8 * ex2.gamma / ex2.epsilon
    r = np.asarray(rep.residuals)
    assert np.all(r[1:] / r[:-1] <= tracking_factor(ex2) + 0.05)
    d = rep.as_dict()
    assert set(d) == {"decay_rate", "predicted_rate", "prefactor", "window"}


def test_order_argument(quiet):
    with pytest.raises(ValueError):
        approx_manifold(linear_system(), NO_NOISE, 1.0, 2)


def test_slow_shape_checked(quiet):
    with pytest.raises(ValueError):
        solve_manifold_point(linear_system(), NO_NOISE, [1.0, 2.0])

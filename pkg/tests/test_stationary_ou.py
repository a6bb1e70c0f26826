import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowmanifold.exceptions import DivergentIntegralError, InsufficientPathError
from slowmanifold.levy_noise import NoisePath, RngStream, StableParams, sample_path, shift_path
from slowmanifold.stationary_ou import (StationarySpec, delta_stat, eta_eps, stationary_series,
                                        stationary_value, xi_stat)


def _path(alpha=1.5, lo=-30.0, hi=5.0, dt=0.01, seed=4):
    return sample_path(StableParams(alpha), lo, hi, dt, RngStream(seed))


def test_default_truncation_reaches_tail():
    s = StationarySpec.fast(2.0, epsilon=0.1)
    assert math.exp(-s.decay_rate * s.t_trunc) == pytest.approx(1e-8)


def test_short_truncation_rejected():
    with pytest.raises(ValueError):
        StationarySpec.slow(1.0, t_trunc=1.0)


@pytest.mark.parametrize("J", [0.0, -1.0])
def test_nondecaying_slow_kernel(J):
    with pytest.raises(DivergentIntegralError):
        StationarySpec.slow(J)


def test_zero_intensity_is_zero():
    s = StationarySpec.fast(1.6, epsilon=0.1, sigma=0.0)
    assert stationary_value(_path(), 0.0, s) == 0.0


def test_single_jump_response():
    inc = np.zeros(3000)
    inc[1000] = 1.0
    p = NoisePath(-2000, 0.01, inc, anchor=2000)
    s = StationarySpec.slow(1.0)
    # jump sits in [t_k, t_k + dt) with t_k = -10; value at 0 is exp(-1 * 10)
    assert xi_stat(p, 0.0, s) == pytest.approx(math.exp(-10.0), rel=1e-12)


def test_insufficient_history():
    p = _path(lo=-1.0)
    with pytest.raises(InsufficientPathError):
        xi_stat(p, 0.0, StationarySpec.slow(1.0))


@settings(max_examples=20, deadline=None)
@given(t_steps=st.integers(-100, 400))
def test_flow_identity(t_steps):
    p = _path()
    s = StationarySpec.fast(1.6, epsilon=1.0)
    t = t_steps * p.dt
    assert delta_stat(p, t, s) == pytest.approx(delta_stat(shift_path(p, t), 0.0, s), abs=1e-12)


def test_series_matches_points():
    p = _path()
    s = StationarySpec.slow(1.2)
    series = stationary_series(p, -1.0, 1.0, s)
    pts = [stationary_value(p, -1.0 + k * p.dt, s) for k in range(0, 201, 25)]
    np.testing.assert_allclose(series[::25], pts, rtol=1e-10, atol=1e-12)


def test_kind_checks():
    p = _path()
    with pytest.raises(ValueError):
        eta_eps(p, 0.0, StationarySpec.slow(1.0))
    with pytest.raises(ValueError):
        delta_stat(p, 0.0, StationarySpec.fast(1.0, epsilon=0.5))
    with pytest.raises(ValueError):
        xi_stat(p, 0.0, StationarySpec.fast(1.0))


def test_fast_prefactor():
    s = StationarySpec.fast(1.6, epsilon=0.01, alpha=1.5, sigma=2.0)
    assert s.prefactor == pytest.approx(2.0 / 0.01 ** (1 / 1.5))

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from slowmanifold.estimator import RandomSlowManifold
from slowmanifold.systems import linear_manifold


def test_get_set_params_and_clone():
    est = RandomSlowManifold(epsilon=0.02, seed=4)
    params = est.get_params()
    assert params["epsilon"] == 0.02 and params["seed"] == 4
    other = clone(est).set_params(seed=5)
    assert other.seed == 5 and est.seed == 4


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RandomSlowManifold().transform([[1.0]])


def test_linear_transform_matches_closed_form():
    est = RandomSlowManifold(example="custom", n_modes=1, epsilon=0.05, sigma1=0.0).fit()
    out = est.transform(np.array([[1.0], [-2.0]]))
    exact = linear_manifold(0.1, 1.0, 0.05, 1.5)
    np.testing.assert_allclose(out[:, 0], [exact, -2 * exact], rtol=1e-4)


def test_predict_adds_fast_noise():
    est = RandomSlowManifold(sigma1=0.2, seed=2).fit()
    X = [[0.5]]
    diff = est.predict(X) - est.transform(X)
    assert diff[0, 0] == pytest.approx(0.2 * est.eta0_)
    assert np.all(diff[0, 1:] == 0)


def test_score_is_zero_on_graph():
    est = RandomSlowManifold(seed=2).fit()
    y = np.array([[0.3], [1.0]])
    rows = np.hstack([est.predict(y), y])
    assert est.score(rows) == pytest.approx(0.0, abs=1e-15)


def test_input_validation():
    est = RandomSlowManifold().fit()
    with pytest.raises(ValueError):
        est.transform([[1.0, 2.0]])
    with pytest.raises(ValueError):
        est.transform([[np.nan]])
    with pytest.raises(ValueError):
        RandomSlowManifold(order=3).fit()


def test_expansion_mode():
    y = [[1.0]]
    exact = RandomSlowManifold(sigma1=0.0).fit().transform(y)
    approx = RandomSlowManifold(sigma1=0.0, order=1).fit().transform(y)
    assert np.linalg.norm(exact - approx) < 1e-6

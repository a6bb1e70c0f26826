"""scikit-learn style wrapper around the manifold solver.

``fit`` samples one noise realization for the configured system;
``transform`` maps slow values to graph coefficients in the transformed
variables and ``predict`` returns them in the original variables.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fastslow_system import noise_values, sample_omega
from .slow_manifold import (ManifoldConfig, approx_manifold, backward_noise, contraction_factor,
                            solve_manifold_point)
from .systems import example1, example2, linear_system


class RandomSlowManifold(TransformerMixin, BaseEstimator):
    """Random slow manifold of one of the built-in systems.

    Parameters mirror the experiment configuration. ``order`` selects the
    fixed-point solution (None) or the expansion of order 0 or 1.
    """

    def __init__(self, example="2", epsilon=0.01, alpha=1.5, n_modes=8, sigma1=0.1,
                 sigma2=0.0, alpha1=1.5, alpha2=1.5, b=1.0, c=0.1, J=1.0, gamma_J=1.0,
                 dt=1e-4, horizon=None, tol=1e-12, max_iter=100, seed=1, order=None):
        self.example = example
        self.epsilon = epsilon
        self.alpha = alpha
        self.n_modes = n_modes
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.b = b
        self.c = c
        self.J = J
        self.gamma_J = gamma_J
        self.dt = dt
        self.horizon = horizon
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed
        self.order = order

    def _build_system(self):
        kw = dict(epsilon=self.epsilon, alpha=self.alpha, n_modes=self.n_modes,
                  sigma1=self.sigma1, sigma2=self.sigma2, alpha1=self.alpha1,
                  alpha2=self.alpha2, gamma_J=self.gamma_J)
        ex = str(self.example)
        if ex == "1":
            return example1(**kw)
        if ex == "2":
            return example2(b=self.b, **kw)
        if ex == "custom":
            return linear_system(c=self.c, J=self.J, **kw)
        raise ValueError(f"unknown example {self.example!r}")

    def fit(self, X=None, y=None):
        """Build the system and sample its noise; ``X`` is only validated."""
        if self.order not in (None, 0, 1):
            raise ValueError("order must be None, 0 or 1")
        if X is not None:
            check_array(X, ensure_2d=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = self._build_system()
        cfg = ManifoldConfig(horizon=self.horizon, dt=self.dt, max_iter=self.max_iter,
                             tol=self.tol).for_spec(spec)
        self.system_ = spec
        self.config_ = cfg
        self.omega_ = sample_omega(spec, -cfg.horizon, 0.0, cfg.dt, self.seed)
        self.noise_ = backward_noise(spec, self.omega_, cfg)
        self.eta0_, self.xi0_ = noise_values(spec, self.omega_, 0.0)
        self.contraction_ = contraction_factor(spec).rho
        self.n_features_in_ = spec.slow_dim
        return self

    def _graph(self, y):
        if self.order is None:
            return solve_manifold_point(self.system_, self.omega_, y, self.config_,
                                        self.noise_).h_value
        return approx_manifold(self.system_, self.omega_, y, self.order, self.config_,
                               self.noise_)

    def transform(self, X):
        """Graph coefficients H(omega, y) for each row y of ``X``: shape (n, n_modes)."""
        check_is_fitted(self, "system_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} slow coordinates, got {X.shape[1]}")
        return np.stack([self._graph(row) for row in X])

    def predict(self, X):
        """Graph in the original variables (fast noise added back on the first mode)."""
        H = self.transform(X)
        H[:, 0] += self.system_.sigma1 * self.eta0_
        return H

    def score(self, X, y=None):
        """Negative mean distance of rows [x | y] from the manifold (0 on the graph)."""
        check_is_fitted(self, "system_")
        X = check_array(X, dtype=float)
        n = self.system_.n_modes
        if X.shape[1] != n + self.n_features_in_:
            raise ValueError("score expects rows of fast coefficients followed by slow values")
        gap = X[:, :n] - self.predict(X[:, n:])
        return -float(np.mean(np.linalg.norm(gap, axis=1)))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = True
        return tags

    @property
    def certified_(self) -> bool:
        check_is_fitted(self, "system_")
        return math.isfinite(self.contraction_) and self.contraction_ < 1.0

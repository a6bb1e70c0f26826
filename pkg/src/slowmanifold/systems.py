"""Ready-made fast-slow systems: the two worked examples and a linear test case.

Spatially constant fast forcing is carried by the first sine mode, the same
mode that carries the fast noise.
"""

from __future__ import annotations

import math

import numpy as np

from .fastslow_system import SystemSpec
from .fractional_laplacian import build_operator, integrate_field

EXAMPLE1_RADIUS = 2.0


def _on_first_mode(values, n_modes):
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape + (n_modes,))
    out[..., 0] = values
    return out


def example1(epsilon=0.01, alpha=1.5, n_modes=8, sigma1=0.0, sigma2=0.0, alpha1=1.5,
             alpha2=1.5, gamma_J=1.0, **kw) -> SystemSpec:
    """f = y^2 / 6, g = sin(int x) / 3, J = +1.

    f is only locally Lipschitz; K is taken on the ball |y| <= 2.
    """
    op = build_operator(alpha, n_modes)
    i_norm = float(np.linalg.norm(op.mode_integrals))

    def f(x, y):
        return _on_first_mode(np.asarray(y)[..., 0] ** 2 / 6.0, n_modes)

    def g(x, y):
        return np.sin(integrate_field(op, x))[..., None] / 3.0

    K = max(EXAMPLE1_RADIUS / 3.0, i_norm / 3.0)
    kw.setdefault("lipschitz_radius", EXAMPLE1_RADIUS)
    return SystemSpec(epsilon, op, f, g, K=K, J=1.0, gamma_J=gamma_J, sigma1=sigma1,
                      sigma2=sigma2, alpha1=alpha1, alpha2=alpha2, name="example1", **kw)


def example2(epsilon=0.01, alpha=1.5, n_modes=8, sigma1=0.0, sigma2=0.0, alpha1=1.5,
             alpha2=1.5, b=1.0, gamma_J=1.0, **kw) -> SystemSpec:
    """f = 0.01 (sqrt(y^2 + 5) - sqrt 5), g = 0.01 b sin(int x), J = -1."""
    op = build_operator(alpha, n_modes)
    root5 = math.sqrt(5.0)

    def f(x, y):
        y1 = np.asarray(y)[..., 0]
        return _on_first_mode(0.01 * (np.sqrt(y1 ** 2 + 5.0) - root5), n_modes)

    def g(x, y):
        return (0.01 * b) * np.sin(integrate_field(op, x))[..., None]

    return SystemSpec(epsilon, op, f, g, K=0.01 * max(1.0, b), J=-1.0, gamma_J=gamma_J,
                      sigma1=sigma1, sigma2=sigma2, alpha1=alpha1, alpha2=alpha2,
                      name="example2", **kw)


def linear_system(c=0.1, J=1.0, epsilon=0.05, alpha=1.5, n_modes=1, sigma1=0.0,
                  sigma2=0.0, alpha1=1.5, alpha2=1.5, gamma_J=1.0, **kw) -> SystemSpec:
    """f = c y e1, g = 0: the graph is c y0 / (lambda1 + eps J) on the first mode."""
    op = build_operator(alpha, n_modes)

    def f(x, y):
        return _on_first_mode(c * np.asarray(y)[..., 0], n_modes)

    def g(x, y):
        return np.zeros(np.shape(y))

    return SystemSpec(epsilon, op, f, g, K=abs(c), J=J, gamma_J=gamma_J, sigma1=sigma1,
                      sigma2=sigma2, alpha1=alpha1, alpha2=alpha2, name="linear", **kw)


def linear_manifold(c, J, epsilon, alpha) -> float:
    lam = build_operator(alpha, 1).lambda1
    return c / (lam + epsilon * J)


BUILDERS = {"1": example1, "2": example2, "custom": linear_system}

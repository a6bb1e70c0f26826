"""Fast-slow problem definition, random transformation and time integration.

The fast variable lives in the span of the first ``n_modes`` sine modes
(coefficient vectors of length N); the slow variable is a vector of length
``slow_dim``. Nonlinearities are vectorized callables::

    f(x, y) -> array(..., N)      g(x, y) -> array(..., slow_dim)

with ``x`` of shape (..., N) and ``y`` of shape (..., slow_dim).
Scalar fast noise acts on the first mode only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import NumericalFailure
from .fractional_laplacian import SpectralOperator, field_norm
from .levy_noise import NoisePath, RngStream, StableParams, grid_ceil, grid_floor, sample_path
from .stationary_ou import StationarySpec, stationary_series, stationary_value


class LipschitzWarning(UserWarning):
    pass


class ConditionWarning(UserWarning):
    pass


@dataclass(eq=False)
class SystemSpec:
    epsilon: float
    operator: SpectralOperator
    f: Callable
    g: Callable
    K: float
    J: float | np.ndarray = 1.0
    gamma_J: float = 1.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    alpha1: float = 1.5
    alpha2: float = 1.5
    slow_dim: int = 1
    name: str = "custom"
    lipschitz_radius: float = 2.0
    lipschitz_pairs: int = 1000
    lipschitz_estimate: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if self.gamma_J <= 0:
            raise ValueError("gamma_J must be positive")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise intensities must be non-negative")
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            if not 1 < a < 2:
                raise ValueError(f"{name} must lie in (1, 2), got {a}")
        self.J = np.broadcast_to(np.asarray(self.J, dtype=float), (self.slow_dim,)).copy()
        x0 = np.zeros(self.n_modes)
        y0 = np.zeros(self.slow_dim)
        f0 = np.asarray(self.f(x0, y0), dtype=float)
        g0 = np.asarray(self.g(x0, y0), dtype=float)
        if f0.shape != (self.n_modes,) or g0.shape != (self.slow_dim,):
            raise ValueError("f and g must return arrays of shape (N,) and (slow_dim,)")
        if np.max(np.abs(f0)) > 1e-12 or np.max(np.abs(g0)) > 1e-12:
            raise ValueError("nonlinearities must vanish at the origin: f(0,0) = g(0,0) = 0")
        if self.lipschitz_pairs:
            self.lipschitz_estimate = estimate_lipschitz(self)
            if self.lipschitz_estimate > self.K * (1 + 1e-9):
                warnings.warn(
                    f"sampled Lipschitz quotient {self.lipschitz_estimate:.4g} exceeds "
                    f"declared K={self.K:.4g}", LipschitzWarning, stacklevel=2)

    @property
    def n_modes(self) -> int:
        return self.operator.n_modes

    @property
    def lambda1(self) -> float:
        return self.operator.lambda1

    @property
    def gamma(self) -> float:
        return self.gamma_J / (2.0 * self.lambda1 + self.gamma_J)

    @property
    def beta(self) -> float:
        return -self.gamma / self.epsilon

    def fast_noise_spec(self, rate: float | None = None) -> StationarySpec:
        return StationarySpec.fast(self.lambda1 if rate is None else rate,
                                   epsilon=self.epsilon, alpha=self.alpha1, sigma=1.0)

    def slow_noise_specs(self) -> list[StationarySpec]:
        return [StationarySpec.slow(j, alpha=self.alpha2, sigma=1.0) for j in self.J]

    def fast_arguments(self, x, y, eta, xi):
        """Arguments (X + sigma1 eta e1, Y + sigma2 xi) of the nonlinearities."""
        xs = np.array(x, dtype=float, copy=True)
        xs[..., 0] += self.sigma1 * np.asarray(eta)
        ys = np.asarray(y, dtype=float) + self.sigma2 * np.asarray(xi)
        return xs, ys


def estimate_lipschitz(spec: SystemSpec, n_pairs: int | None = None, seed: int = 20240) -> float:
    """Largest sampled difference quotient of f and g on a box of half-width R."""
    n = n_pairs or spec.lipschitz_pairs
    gen = np.random.default_rng(seed)
    r = spec.lipschitz_radius
    xa, xb = gen.uniform(-r, r, (2, n, spec.n_modes))
    ya, yb = gen.uniform(-r, r, (2, n, spec.slow_dim))
    denom = field_norm(xa - xb) + np.linalg.norm(ya - yb, axis=-1)
    qf = np.linalg.norm(spec.f(xa, ya) - spec.f(xb, yb), axis=-1) / denom
    qg = np.linalg.norm(spec.g(xa, ya) - spec.g(xb, yb), axis=-1) / denom
    return float(max(qf.max(), qg.max()))


@dataclass
class ConditionReport:
    lambda1: float
    gamma_J: float
    K: float
    s3_threshold: float
    s3_pass: bool
    gamma: float
    gap_lower_pass: bool
    gap_upper_pass: bool
    s1_pass: bool
    lipschitz_estimate: float

    @property
    def passed(self) -> bool:
        return self.s3_pass and self.gap_lower_pass and self.gap_upper_pass

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def check_conditions(spec: SystemSpec) -> ConditionReport:
    """Dichotomy, Lipschitz and spectral-gap checks for the configured system."""
    lam = spec.lambda1
    gj = spec.gamma_J
    threshold = lam * gj / (gj + 2.0 * lam)
    gamma = gj / (2.0 * lam + gj)
    # ||exp(J t)|| <= exp(gamma_J t) for all t <= 0  <=>  J >= gamma_J (diagonal J)
    s1 = bool(np.all(spec.J >= gj))
    if not s1:
        warnings.warn(f"slow dichotomy check fails: J={spec.J.tolist()} below gamma_J={gj}",
                      ConditionWarning, stacklevel=2)
    return ConditionReport(
        lambda1=lam, gamma_J=gj, K=spec.K, s3_threshold=threshold,
        s3_pass=bool(spec.K < threshold), gamma=gamma,
        gap_lower_pass=bool(spec.K < gamma * lam),
        gap_upper_pass=bool(lam - gamma > spec.K), s1_pass=s1,
        lipschitz_estimate=spec.lipschitz_estimate,
    )


@dataclass
class StateZ:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.x) + np.linalg.norm(self.y))

    def __sub__(self, other: "StateZ") -> "StateZ":
        return StateZ(self.x - other.x, self.y - other.y)

    def __add__(self, other: "StateZ") -> "StateZ":
        return StateZ(self.x + other.x, self.y + other.y)


@dataclass(eq=False)
class Trajectory:
    """States on the uniform grid ``t0 + k dt``; ``x`` is (n, N), ``y`` is (n, d)."""

    t0: float
    dt: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x and y must have the same number of grid points")

    def __len__(self):
        return self.x.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self) - 1)

    def state(self, k: int) -> StateZ:
        return StateZ(self.x[k].copy(), self.y[k].copy())

    @property
    def norms(self) -> np.ndarray:
        return field_norm(self.x) + np.linalg.norm(self.y, axis=-1)

    def weighted_norm(self, beta: float) -> float:
        """sup_t exp(-beta t) (||X(t)|| + ||Y(t)||) over the grid."""
        return float(np.max(np.exp(-beta * self.times) * self.norms))

    def rows(self):
        return np.column_stack([self.times, self.x, self.y])

    def header(self) -> list[str]:
        return (["t"] + [f"x_coeff_{k + 1}" for k in range(self.x.shape[1])]
                + [f"y_{k + 1}" for k in range(self.y.shape[1])])


class Omega(NamedTuple):
    """Pair of driving paths: fast (alpha1) and slow (alpha2). Either may be None."""

    fast: NoisePath | None
    slow: NoisePath | None


def noise_margins(spec: SystemSpec) -> tuple[float, float]:
    """Backward coverage each path needs beyond an evaluation time."""
    m_fast = spec.fast_noise_spec().t_trunc if spec.sigma1 > 0 else 0.0
    m_slow = max(s.t_trunc for s in spec.slow_noise_specs()) if spec.sigma2 > 0 else 0.0
    return m_fast, m_slow


def sample_omega(spec: SystemSpec, t_min: float, t_max: float, dt: float, seed: int) -> Omega:
    """Sample both driving paths so every time in [t_min, t_max] can be evaluated."""
    m_fast, m_slow = noise_margins(spec)
    fast = slow = None
    lo_f = grid_floor(t_min - m_fast - 2 * dt, dt)
    lo_s = grid_floor(t_min - m_slow - 2 * dt, dt)
    hi = grid_ceil(t_max, dt)
    if spec.sigma1 > 0:
        fast = sample_path(StableParams(spec.alpha1), lo_f, hi, dt, RngStream(seed, 1))
    if spec.sigma2 > 0:
        slow = sample_path(StableParams(spec.alpha2), lo_s, hi, dt, RngStream(seed, 2))
    return Omega(fast, slow)


def shift_omega(omega: Omega, l: float) -> Omega:
    from .levy_noise import shift_path

    return Omega(*(None if p is None else shift_path(p, l) for p in omega))


def _check_dt(omega: Omega, dt: float) -> None:
    for p in omega:
        if p is not None and not math.isclose(p.dt, dt, rel_tol=1e-12):
            raise ValueError(f"noise path dt={p.dt} differs from integration dt={dt}")


def noise_series(spec: SystemSpec, omega: Omega, t_a: float, t_b: float, dt: float):
    """Fast and slow stationary noise values at every grid time in [t_a, t_b]."""
    n = int(round((t_b - t_a) / dt)) + 1
    eta = np.zeros(n)
    xi = np.zeros((n, spec.slow_dim))
    _check_dt(omega, dt)
    if spec.sigma1 > 0:
        if omega.fast is None:
            raise ValueError("sigma1 > 0 requires a fast noise path")
        eta = stationary_series(omega.fast, t_a, t_b, spec.fast_noise_spec())
    if spec.sigma2 > 0:
        if omega.slow is None:
            raise ValueError("sigma2 > 0 requires a slow noise path")
        for i, s in enumerate(spec.slow_noise_specs()):
            xi[:, i] = stationary_series(omega.slow, t_a, t_b, s)
    return eta, xi


def noise_values(spec: SystemSpec, omega: Omega, t: float):
    eta = 0.0
    xi = np.zeros(spec.slow_dim)
    if spec.sigma1 > 0:
        eta = stationary_value(omega.fast, t, spec.fast_noise_spec())
    if spec.sigma2 > 0:
        xi = np.array([stationary_value(omega.slow, t, s) for s in spec.slow_noise_specs()])
    return eta, xi


def random_transform(x, y, eta_value, xi_value, spec: SystemSpec) -> StateZ:
    """(X, Y) = (x - sigma1 eta e1, y - sigma2 xi)."""
    X = np.array(x, dtype=float, copy=True)
    X[0] -= spec.sigma1 * eta_value
    Y = np.atleast_1d(np.asarray(y, dtype=float)) - spec.sigma2 * np.asarray(xi_value)
    return StateZ(X, Y)


def inverse_transform(Z: StateZ, eta_value, xi_value, spec: SystemSpec):
    x = Z.x.copy()
    x[0] += spec.sigma1 * eta_value
    y = Z.y + spec.sigma2 * np.asarray(xi_value)
    return x, y


def _phi1(z: np.ndarray) -> np.ndarray:
    """(exp(z) - 1) / z, with the removable singularity at 0 filled in."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-12
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _n_steps(t0: float, t1: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = (t1 - t0) / dt
    if abs(n - round(n)) > 1e-6 or round(n) < 0:
        raise ValueError(f"[{t0}, {t1}] is not a whole number of steps of {dt}")
    return int(round(n))


def integrate_random_system(spec: SystemSpec, omega: Omega, Z0: StateZ, t0: float,
                            t1: float, dt: float) -> Trajectory:
    """Exponential Euler for the transformed (pathwise random) system.

    Both linear parts are propagated exactly; the nonlinear forcing is frozen
    at the left end of each step (first order).
    """
    n = _n_steps(t0, t1, dt)
    eta, xi = noise_series(spec, omega, t0, t1, dt)
    za = -spec.operator.eigenvalues * dt / spec.epsilon
    ex = np.exp(za)
    cx = dt / spec.epsilon * _phi1(za)
    zj = spec.J * dt
    ey = np.exp(zj)
    cy = dt * _phi1(zj)
    X = np.empty((n + 1, spec.n_modes))
    Y = np.empty((n + 1, spec.slow_dim))
    X[0] = Z0.x
    Y[0] = Z0.y
    for k in range(n):
        xs, ys = spec.fast_arguments(X[k], Y[k], eta[k], xi[k])
        X[k + 1] = ex * X[k] + cx * spec.f(xs, ys)
        Y[k + 1] = ey * Y[k] + cy * spec.g(xs, ys)
        if not (np.all(np.isfinite(X[k + 1])) and np.all(np.isfinite(Y[k + 1]))):
            raise NumericalFailure(f"non-finite state at step {k + 1}", step=k + 1)
    return Trajectory(t0, dt, X, Y)


def integrate_stochastic_system(spec: SystemSpec, omega: Omega, z0: StateZ, t0: float,
                                t1: float, dt: float) -> Trajectory:
    """Original variables: transform, integrate the random system, transform back."""
    eta, xi = noise_series(spec, omega, t0, t1, dt)
    Z0 = random_transform(z0.x, z0.y, eta[0], xi[0], spec)
    traj = integrate_random_system(spec, omega, Z0, t0, t1, dt)
    x = traj.x.copy()
    x[:, 0] += spec.sigma1 * eta
    y = traj.y + spec.sigma2 * xi
    return Trajectory(t0, dt, x, y)

"""Random slow manifold by Lyapunov-Perron iteration.

The backward window ``[-T, 0]`` is discretized on ``t_k = (k - n) dt``.
Kernel integrals use the trapezoidal rule with exact exponential weights,
written as first-order recursions and evaluated with ``scipy.signal.lfilter``.
Distances are measured in the weighted sup-norm
``max_t exp(gamma t / eps) (||X(t)|| + ||Y(t)||)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate, signal

from .exceptions import NumericalFailure
from .fastslow_system import (Omega, StateZ, SystemSpec, Trajectory, integrate_random_system,
                              noise_series)
from .fractional_laplacian import field_norm

_LOG_1E8 = math.log(1e8)


class CertificationWarning(UserWarning):
    pass


class Contraction(NamedTuple):
    rho: float
    contractive: bool


def contraction_factor(spec: SystemSpec, beta: float | None = None) -> Contraction:
    """K / (lambda1 + eps beta) + K / (-beta + gamma_J), by default with beta = -gamma / eps."""
    lam, eps = spec.lambda1, spec.epsilon
    beta = spec.beta if beta is None else beta
    if lam + eps * beta <= 0:
        raise ValueError(f"lambda1 + eps*beta = {lam + eps * beta:.4g} <= 0; no spectral gap")
    rho = spec.K / (lam + eps * beta) + spec.K / (-beta + spec.gamma_J)
    return Contraction(float(rho), bool(rho < 1.0))


def _lipschitz_denominator(spec: SystemSpec) -> float:
    lam, gam, eps, gj, K = spec.lambda1, spec.gamma, spec.epsilon, spec.gamma_J, spec.K
    if lam - gam <= 0:
        raise ValueError("lambda1 - gamma must be positive")
    return (lam - gam) * (1.0 - K * (1.0 / (lam - gam) + eps / (gam + eps * gj)))


def lipschitz_bound(spec: SystemSpec) -> float:
    """Upper bound on the Lipschitz constant of the manifold graph in Y0."""
    den = _lipschitz_denominator(spec)
    if den <= 0:
        raise ValueError(f"Lipschitz bound denominator {den:.4g} is not positive")
    return float(spec.K / den)


def tracking_factor(spec: SystemSpec) -> float:
    """Contraction constant of the forward operator used for exponential tracking."""
    den = _lipschitz_denominator(spec)
    if den <= 0:
        raise ValueError(f"tracking factor denominator {den:.4g} is not positive")
    rho = contraction_factor(spec).rho
    return float(rho + spec.K ** 2 / ((-spec.beta + spec.gamma_J) * den))


@dataclass(frozen=True)
class ManifoldConfig:
    """Backward window length ``horizon``, step ``dt`` and fixed-point controls.

    ``horizon=None`` picks ``1.5 (eps/gamma) ln(1e8)`` once a system is known
    (see :meth:`for_spec`).
    """

    horizon: float | None = None
    dt: float = 1e-4
    max_iter: int = 100
    tol: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @staticmethod
    def default_horizon(spec: SystemSpec) -> float:
        return 1.5 * spec.epsilon / spec.gamma * _LOG_1E8

    def for_spec(self, spec: SystemSpec) -> "ManifoldConfig":
        """Fill in the horizon, snap it to the grid and check the window is long enough."""
        T = self.default_horizon(spec) if self.horizon is None else self.horizon
        T = math.ceil(T / self.dt - 1e-9) * self.dt
        tail = math.exp(-(spec.lambda1 - spec.gamma) * T / spec.epsilon)
        if tail >= self.tol:
            raise ValueError(
                f"horizon {T:.4g} too short: truncated tail {tail:.3g} exceeds tol {self.tol:.3g}")
        return replace(self, horizon=T)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(eq=False)
class ManifoldPoint:
    y0: np.ndarray
    h_value: np.ndarray
    iterations: int
    residuals: list[float]
    certified: bool = True
    integral_value: np.ndarray | None = None
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0

    @property
    def ratios(self) -> np.ndarray:
        r = np.asarray(self.residuals)
        return r[1:] / r[:-1] if r.size > 1 else np.empty(0)


@dataclass(eq=False)
class TrackingReport:
    z_checked: StateZ
    decay_rate: float
    predicted_rate: float
    prefactor: float
    window: tuple[float, float] | None
    iterations: int = 0
    residuals: list[float] = field(default_factory=list)
    times: np.ndarray | None = field(default=None, repr=False)
    distance: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        finite = math.isfinite(self.decay_rate)
        return {
            "decay_rate": self.decay_rate if finite else None,
            "predicted_rate": self.predicted_rate,
            "prefactor": self.prefactor if finite else None,
            "window": list(self.window) if self.window else None,
        }


class WindowNoise(NamedTuple):
    """Stationary noise values on a grid window: ``eta`` (n+1,), ``xi`` (n+1, d)."""

    t0: float
    dt: float
    eta: np.ndarray
    xi: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.eta.shape[0])


def window_noise(spec: SystemSpec, omega: Omega, t0: float, t1: float, dt: float) -> WindowNoise:
    eta, xi = noise_series(spec, omega, t0, t1, dt)
    return WindowNoise(t0, dt, eta, xi)


def backward_noise(spec: SystemSpec, omega: Omega, config: ManifoldConfig) -> WindowNoise:
    cfg = config.for_spec(spec) if config.horizon is None else config
    return window_noise(spec, omega, -cfg.n_steps * cfg.dt, 0.0, cfg.dt)


# --- quadrature kernels -----------------------------------------------------

def _forward_convolution(F, rates, dt, scale, start):
    """u(t_k) = exp(-rate t_k) start + scale * int_0^t exp(-rate (t - s)) F(s) ds, per column."""
    out = np.empty_like(F)
    start = np.broadcast_to(start, (F.shape[1],))
    for k in range(F.shape[1]):
        r = math.exp(-rates[k] * dt)
        c = 0.5 * scale * dt
        b = [c, c * r]
        out[:, k] = signal.lfilter(b, [1.0, -r], F[:, k], zi=[start[k] - c * F[0, k]])[0]
    return out


def _backward_convolution(G, J, dt, end=0.0):
    """q(t) = exp(J (t - t_end)) end - int_t^{t_end} exp(J (t - s)) G(s) ds, per column."""
    out = np.empty_like(G)
    end = np.broadcast_to(end, (G.shape[1],))
    for k in range(G.shape[1]):
        e = math.exp(-J[k] * dt)
        b = [-0.5 * dt, -0.5 * dt * e]
        g = G[::-1, k]
        out[::-1, k] = signal.lfilter(b, [1.0, -e], g, zi=[end[k] - b[0] * g[0]])[0]
    return out


def weighted_norm(X, Y, times, gamma_over_eps: float) -> float:
    """max_t exp(gamma t / eps) (||X(t)|| + ||Y(t)||); the weight exp(-beta t)."""
    w = np.exp(gamma_over_eps * np.asarray(times))
    return float(np.max(w * (field_norm(X) + np.linalg.norm(Y, axis=-1))))


def _forcing(spec: SystemSpec, X, Y, noise: WindowNoise):
    xs, ys = spec.fast_arguments(X, Y, noise.eta, noise.xi)
    F = np.asarray(spec.f(xs, ys), dtype=float)
    G = np.asarray(spec.g(xs, ys), dtype=float)
    return F, G


def _lp_image(spec: SystemSpec, X, Y, y0, noise: WindowNoise):
    F, G = _forcing(spec, X, Y, noise)
    dt = noise.dt
    Xn = _forward_convolution(F, spec.operator.eigenvalues / spec.epsilon, dt,
                              1.0 / spec.epsilon, 0.0)
    Yn = np.exp(np.outer(noise.times, spec.J)) * y0 + _backward_convolution(G, spec.J, dt)
    return Xn, Yn


def _seed(spec: SystemSpec, y0, times):
    return np.zeros((times.size, spec.n_modes)), np.exp(np.outer(times, spec.J)) * y0


def _as_slow(spec: SystemSpec, y0) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    if y.shape != (spec.slow_dim,):
        raise ValueError(f"slow value must have shape ({spec.slow_dim},), got {y.shape}")
    return y


def lp_step(traj: Trajectory, omega: Omega, spec: SystemSpec, y0,
            noise: WindowNoise | None = None) -> Trajectory:
    """One application of the Lyapunov-Perron map to a trajectory on [-T, 0]."""
    y0 = _as_slow(spec, y0)
    if abs(traj.t_end) > 1e-9 * max(1.0, traj.dt):
        raise ValueError("trajectory must end at t = 0")
    if noise is None:
        noise = window_noise(spec, omega, traj.t0, 0.0, traj.dt)
    if noise.eta.shape[0] != len(traj):
        raise ValueError("noise window does not match the trajectory grid")
    Xn, Yn = _lp_image(spec, traj.x, traj.y, y0, noise)
    if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Yn))):
        raise NumericalFailure("non-finite Lyapunov-Perron image")
    return Trajectory(traj.t0, traj.dt, Xn, Yn)


def manifold_integral(spec: SystemSpec, traj: Trajectory, noise: WindowNoise) -> np.ndarray:
    """(1/eps) int_{-T}^0 exp(lambda s / eps) f(...) ds by the trapezoidal rule."""
    F, _ = _forcing(spec, traj.x, traj.y, noise)
    w = np.exp(np.outer(noise.times, spec.operator.eigenvalues) / spec.epsilon)
    vals = w * F
    return integrate.trapezoid(vals, dx=noise.dt, axis=0) / spec.epsilon


def _fixed_point(step, X, Y, times, spec, cfg, label):
    g_eps = spec.gamma / spec.epsilon
    residuals = []
    for it in range(1, cfg.max_iter + 1):
        Xn, Yn = step(X, Y)
        if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Yn))):
            raise NumericalFailure(f"{label}: non-finite iterate {it}", step=it,
                                   residuals=residuals)
        residuals.append(weighted_norm(Xn - X, Yn - Y, times, g_eps))
        X, Y = Xn, Yn
        if residuals[-1] <= cfg.tol:
            return X, Y, residuals
    raise NumericalFailure(
        f"{label}: no convergence in {cfg.max_iter} iterations "
        f"(last residual {residuals[-1]:.3g})", step=cfg.max_iter, residuals=residuals)


def solve_manifold_point(spec: SystemSpec, omega: Omega, y0, config: ManifoldConfig | None = None,
                         noise: WindowNoise | None = None,
                         keep_trajectory: bool = False) -> ManifoldPoint:
    """H(omega, y0): X(0) of the Lyapunov-Perron fixed point through y0."""
    y0 = _as_slow(spec, y0)
    cfg = (config or ManifoldConfig()).for_spec(spec)
    certified = contraction_factor(spec).contractive
    if not certified:
        warnings.warn("contraction factor >= 1; result is not certified",
                      CertificationWarning, stacklevel=2)
    if noise is None:
        noise = backward_noise(spec, omega, cfg)
    times = noise.times
    X, Y = _seed(spec, y0, times)
    X, Y, residuals = _fixed_point(lambda a, b: _lp_image(spec, a, b, y0, noise), X, Y,
                                   times, spec, cfg, "manifold fixed point")
    traj = Trajectory(noise.t0, noise.dt, X, Y)
    return ManifoldPoint(
        y0=y0, h_value=X[-1].copy(), iterations=len(residuals), residuals=residuals,
        certified=certified, integral_value=manifold_integral(spec, traj, noise),
        trajectory=traj if keep_trajectory else None,
    )


def manifold_graph(spec: SystemSpec, omega: Omega, y_grid, config: ManifoldConfig | None = None,
                   noise: WindowNoise | None = None) -> list[ManifoldPoint]:
    cfg = (config or ManifoldConfig()).for_spec(spec)
    if noise is None:
        noise = backward_noise(spec, omega, cfg)
    return [solve_manifold_point(spec, omega, y, cfg, noise) for y in y_grid]


def back_transform_manifold(point: ManifoldPoint | np.ndarray, eta_value: float,
                            spec: SystemSpec) -> np.ndarray:
    """Graph value in the original variables: h + sigma1 eta e1."""
    h = np.array(point.h_value if isinstance(point, ManifoldPoint) else point, dtype=float)
    h[0] += spec.sigma1 * eta_value
    return h


# --- asymptotic expansion ----------------------------------------------------

def _jacobians(func, xs, ys, rel_step=1e-5):
    """Central-difference derivatives of ``func`` along each x and y coordinate.

    Returns arrays (n, out, N) and (n, out, d).
    """
    def column(arr, j, other, first):
        h = rel_step * np.maximum(1.0, np.abs(arr[:, j]))
        up = arr.copy()
        dn = arr.copy()
        up[:, j] += h
        dn[:, j] -= h
        if first:
            d = func(up, other) - func(dn, other)
        else:
            d = func(other, up) - func(other, dn)
        return d / (2.0 * h)[:, None]

    jx = np.stack([column(xs, j, ys, True) for j in range(xs.shape[1])], axis=-1)
    jy = np.stack([column(ys, j, xs, False) for j in range(ys.shape[1])], axis=-1)
    return jx, jy


def approx_manifold(spec: SystemSpec, omega: Omega, y0, order: int,
                    config: ManifoldConfig | None = None,
                    noise: WindowNoise | None = None) -> np.ndarray:
    """Leading-order graph (order 0) or its first correction in eps (order 1)."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    y0 = _as_slow(spec, y0)
    cfg = (config or ManifoldConfig()).for_spec(spec)
    if noise is None:
        noise = backward_noise(spec, omega, cfg)
    times, dt, eps = noise.times, noise.dt, spec.epsilon
    rates = spec.operator.eigenvalues / eps
    Yfix = np.broadcast_to(y0, (times.size, spec.slow_dim))
    empty_y = np.zeros((times.size, 0))

    def step0(X, _):
        F, _g = _forcing(spec, X, Yfix, noise)
        return _forward_convolution(F, rates, dt, 1.0 / eps, 0.0), empty_y

    X0, _, _ = _fixed_point(step0, np.zeros((times.size, spec.n_modes)), empty_y, times,
                            spec, cfg, "leading-order fixed point")
    h0 = X0[-1].copy()
    if order == 0:
        return h0

    xs, ys = spec.fast_arguments(X0, Yfix, noise.eta, noise.xi)
    fx, fy = _jacobians(spec.f, xs, ys)
    slow_rate = spec.J * y0 + spec.g(xs, ys)
    # W(t) = (1/eps) int_0^t slow_rate ds, for t <= 0
    W = -integrate.cumulative_trapezoid(slow_rate[::-1], dx=dt, axis=0, initial=0.0)[::-1] / eps
    source = np.einsum("nij,nj->ni", fy, W)

    def step1(X1, _):
        F = np.einsum("nij,nj->ni", fx, X1) + source
        return _forward_convolution(F, rates, dt, 1.0 / eps, 0.0), empty_y

    X1, _, _ = _fixed_point(step1, np.zeros_like(X0), empty_y, times, spec, cfg,
                            "first-order fixed point")
    return h0 + eps * X1[-1]


# --- exponential tracking ----------------------------------------------------

def _fit_decay(times, dist, floor):
    hi = 1e-1
    lo = max(1e-10, 10.0 * floor)
    mask = (dist >= lo) & (dist <= hi)
    if np.count_nonzero(mask) < 3:
        return math.inf, 0.0, None
    t = times[mask]
    slope, intercept = np.polyfit(t, np.log(dist[mask]), 1)
    return float(-slope), float(math.exp(intercept)), (float(t[0]), float(t[-1]))


def solve_tracking_point(spec: SystemSpec, omega: Omega, z0: StateZ,
                         config: ManifoldConfig | None = None,
                         t_forward: float | None = None,
                         rel_tol: float = 1e-9) -> TrackingReport:
    """Find the manifold orbit that z0 tracks and measure the convergence rate.

    The forward difference (U, V) is a fixed point of the forward
    Lyapunov-Perron operator on [0, t_forward]; U(0) is re-coupled to the
    manifold at every iterate. Stops when the weighted residual drops below
    ``max(tol, rel_tol * ||(U, V)||)``, since the forward weight amplifies
    rounding at late times.
    """
    cfg = (config or ManifoldConfig()).for_spec(spec)
    dt = cfg.dt
    if t_forward is None:
        t_forward = spec.epsilon / spec.gamma * _LOG_1E8
    m = int(math.ceil(t_forward / dt - 1e-9))
    t_forward = m * dt
    back = backward_noise(spec, omega, cfg)
    fwd = window_noise(spec, omega, 0.0, t_forward, dt)
    times = fwd.times
    g_eps = spec.gamma / spec.epsilon
    rates = spec.operator.eigenvalues / spec.epsilon

    base = integrate_random_system(spec, omega, z0, 0.0, t_forward, dt)
    F0, G0 = _forcing(spec, base.x, base.y, fwd)
    U = np.zeros_like(base.x)
    V = np.zeros_like(base.y)
    residuals: list[float] = []
    for it in range(1, cfg.max_iter + 1):
        h = solve_manifold_point(spec, omega, base.y[0] + V[0], cfg, back).h_value
        u0 = h - base.x[0]
        F1, G1 = _forcing(spec, base.x + U, base.y + V, fwd)
        Un = _forward_convolution(F1 - F0, rates, dt, 1.0 / spec.epsilon, u0)
        Vn = _backward_convolution(G1 - G0, spec.J, dt)
        if not (np.all(np.isfinite(Un)) and np.all(np.isfinite(Vn))):
            raise NumericalFailure(f"tracking: non-finite iterate {it}", step=it,
                                   residuals=residuals)
        residuals.append(weighted_norm(Un - U, Vn - V, times, g_eps))
        U, V = Un, Vn
        scale = weighted_norm(U, V, times, g_eps)
        if residuals[-1] <= max(cfg.tol, rel_tol * scale):
            break
    else:
        raise NumericalFailure(f"tracking: no convergence in {cfg.max_iter} iterations",
                               step=cfg.max_iter, residuals=residuals)

    z_checked = StateZ(base.x[0] + U[0], base.y[0] + V[0])
    other = integrate_random_system(spec, omega, z_checked, 0.0, t_forward, dt)
    dist = field_norm(other.x - base.x) + np.linalg.norm(other.y - base.y, axis=-1)
    rate, pref, window = _fit_decay(times, dist, dist[-1])
    return TrackingReport(z_checked=z_checked, decay_rate=rate, predicted_rate=g_eps,
                          prefactor=pref, window=window, iterations=len(residuals),
                          residuals=residuals, times=times, distance=dist)

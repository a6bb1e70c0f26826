"""Pathwise stationary Ornstein-Uhlenbeck-type convolutions.

All three processes are truncated left-point sums of an exponential kernel
against the increments of a :class:`~slowmanifold.levy_noise.NoisePath`:

* fast, ``eta``:  (sigma / eps**(1/alpha)) * sum exp(-rate (t - s_k) / eps) dL_k
* ``delta``:      the fast process with eps = 1
* slow, ``xi``:   sigma * sum exp(-J (t - s_k)) dL_k
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .exceptions import DivergentIntegralError
from .levy_noise import NoisePath

TAIL = 1e-8
_LOG_TAIL = math.log(1.0 / TAIL)
_DIRECT_CONV_LIMIT = 20_000_000


@dataclass(frozen=True)
class StationarySpec:
    """Kernel description for one stationary convolution.

    ``rate`` is lambda (fast) or J (slow). ``t_trunc`` defaults to the
    horizon where the kernel has decayed to 1e-8.
    """

    rate: float
    sigma: float = 1.0
    epsilon: float = 1.0
    alpha: float = 1.5
    t_trunc: float | None = None
    kind: str = "fast"

    def __post_init__(self):
        if self.kind not in ("fast", "slow"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.rate <= 0:
            if self.kind == "slow":
                raise DivergentIntegralError(
                    f"kernel exp(J s) with J={self.rate} does not decay as s -> -inf; "
                    "the stationary integral diverges")
            raise ValueError("fast decay rate must be positive")
        if self.t_trunc is None:
            object.__setattr__(self, "t_trunc", self.default_truncation())
        elif self.decay_rate * self.t_trunc < _LOG_TAIL * (1 - 1e-12):
            raise ValueError(
                f"t_trunc={self.t_trunc} leaves a kernel tail above {TAIL}; "
                f"need at least {self.default_truncation():.6g}")

    @classmethod
    def fast(cls, rate, epsilon=1.0, alpha=1.5, sigma=1.0, t_trunc=None):
        return cls(rate=rate, sigma=sigma, epsilon=epsilon, alpha=alpha,
                   t_trunc=t_trunc, kind="fast")

    @classmethod
    def slow(cls, J, alpha=1.5, sigma=1.0, t_trunc=None):
        return cls(rate=J, sigma=sigma, epsilon=1.0, alpha=alpha, t_trunc=t_trunc,
                   kind="slow")

    @property
    def decay_rate(self) -> float:
        """Exponential rate of the kernel in physical time."""
        return self.rate / self.epsilon if self.kind == "fast" else self.rate

    @property
    def prefactor(self) -> float:
        if self.kind == "fast":
            return self.sigma / self.epsilon ** (1.0 / self.alpha)
        return self.sigma

    def default_truncation(self) -> float:
        return _LOG_TAIL / self.decay_rate

    def n_lags(self, dt: float) -> int:
        return int(math.ceil(self.t_trunc / dt - 1e-9))

    def kernel(self, dt: float) -> np.ndarray:
        """Weights for lags 1..M (index 0 holds the zero lag weight 0)."""
        m = np.arange(self.n_lags(dt) + 1, dtype=float)
        w = self.prefactor * np.exp(-self.decay_rate * dt * m)
        w[0] = 0.0
        return w


def stationary_value(path: NoisePath, t: float, spec: StationarySpec) -> float:
    """Truncated convolution at a single grid time ``t``."""
    if spec.sigma == 0.0:
        return 0.0
    lags = spec.n_lags(path.dt)
    path.require(t - lags * path.dt, t)
    k = path.index_of(t)
    w = spec.kernel(path.dt)[1:]
    window = path.increments[k - lags:k][::-1]
    return float(np.dot(w, window))


def stationary_series(path: NoisePath, t_a: float, t_b: float,
                      spec: StationarySpec) -> np.ndarray:
    """Convolution at every grid time in ``[t_a, t_b]`` (inclusive)."""
    dt = path.dt
    n_out = int(round((t_b - t_a) / dt)) + 1
    if spec.sigma == 0.0:
        return np.zeros(n_out)
    lags = spec.n_lags(dt)
    path.require(t_a - lags * dt, t_b)
    ka = path.index_of(t_a)
    seg = path.increments[ka - lags:ka + n_out - 1]
    w = spec.kernel(dt)
    if seg.size * w.size <= _DIRECT_CONV_LIMIT:
        full = np.convolve(seg, w)
    else:
        full = signal.fftconvolve(seg, w)
    return full[lags:lags + n_out]


def eta_eps(path: NoisePath, t: float, spec: StationarySpec) -> float:
    if spec.kind != "fast":
        raise ValueError("eta_eps needs a fast StationarySpec")
    return stationary_value(path, t, spec)


def delta_stat(path: NoisePath, t: float, spec: StationarySpec) -> float:
    if spec.kind != "fast" or spec.epsilon != 1.0:
        raise ValueError("delta_stat needs a fast StationarySpec with epsilon = 1")
    return stationary_value(path, t, spec)


def xi_stat(path: NoisePath, t: float, spec: StationarySpec) -> float:
    if spec.kind != "slow":
        raise ValueError("xi_stat needs a slow StationarySpec")
    return stationary_value(path, t, spec)

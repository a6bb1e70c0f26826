"""Truncated spectral representation of A = -(-Laplacian)^(alpha/2) on (-1, 1).

The working basis is the normalized sine family
``phi_l(u) = sin(l * pi * (u + 1) / 2)`` (orthonormal in L2(-1, 1)), paired
with the large-l eigenvalue asymptotics. A dense finite-difference
quadrature of the singular integral is provided as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg
from scipy.special import gamma as gamma_fn


def _check_order(alpha: float, upper_inclusive: bool = True) -> None:
    ok = 1.0 < alpha <= 2.0 if upper_inclusive else 1.0 < alpha < 2.0
    if not ok:
        raise ValueError(f"operator order alpha out of range: {alpha}")


def eigenvalue_asymptotic(l: int, alpha: float) -> float:
    """(l*pi/2 - (2 - alpha)*pi/8) ** alpha, the O(1/l) remainder dropped."""
    if int(l) != l or l < 1:
        raise ValueError(f"mode index must be a positive integer, got {l}")
    _check_order(alpha)
    return float((l * np.pi / 2.0 - (2.0 - alpha) * np.pi / 8.0) ** alpha)


def mode_shape(l: int, u):
    return np.sin(l * np.pi * (np.asarray(u) + 1.0) / 2.0)


@lru_cache(maxsize=None)
def mode_integral(l: int) -> float:
    """Integral of the l-th basis function over (-1, 1), by adaptive quadrature."""
    val, _ = integrate.quad(lambda u: mode_shape(l, u), -1.0, 1.0, limit=200)
    return float(val)


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    alpha: float
    n_modes: int
    eigenvalues: np.ndarray = field(repr=False)
    basis: str = "sine"

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def mode_integrals(self) -> np.ndarray:
        return np.array([mode_integral(l) for l in range(1, self.n_modes + 1)])

    def evaluate(self, coefficients, u) -> np.ndarray:
        """Reconstruct the field at points ``u`` from mode coefficients."""
        u = np.asarray(u, dtype=float)
        modes = np.stack([mode_shape(l, u) for l in range(1, self.n_modes + 1)], axis=-1)
        return modes @ np.asarray(coefficients, dtype=float)


def build_operator(alpha: float, n_modes: int) -> SpectralOperator:
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError(f"n_modes must be a positive integer, got {n_modes}")
    lam = np.array([eigenvalue_asymptotic(l, alpha) for l in range(1, n_modes + 1)])
    lam.setflags(write=False)
    return SpectralOperator(alpha=float(alpha), n_modes=int(n_modes), eigenvalues=lam)


def _coefficients(op: SpectralOperator, field_) -> np.ndarray:
    c = np.asarray(field_, dtype=float)
    if c.shape[-1] != op.n_modes:
        raise ValueError(f"field has {c.shape[-1]} coefficients, operator has {op.n_modes} modes")
    return c


def apply_semigroup(op: SpectralOperator, field_, t: float) -> np.ndarray:
    """exp(A t) applied coefficient-wise; contracts by at least exp(-lambda_1 t)."""
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    c = _coefficients(op, field_)
    return c * np.exp(-op.eigenvalues * t)


def integrate_field(op: SpectralOperator, field_) -> np.ndarray:
    """Integral over (-1, 1) of the field(s); works on any leading batch shape."""
    c = _coefficients(op, field_)
    return c @ op.mode_integrals


def field_norm(field_) -> np.ndarray:
    return np.linalg.norm(np.asarray(field_, dtype=float), axis=-1)


def fractional_laplacian_constant(alpha: float) -> float:
    return float(2.0 ** alpha * gamma_fn((1.0 + alpha) / 2.0)
                 / (np.sqrt(np.pi) * abs(gamma_fn(-alpha / 2.0))))


def assemble_quadrature_matrix(alpha: float, grid_points: int):
    """Dense discretization of (-Laplacian)^(alpha/2) with zero exterior values.

    Nodes ``u_i = -1 + i*h`` (i = 1..n). Away from the singularity the field
    is the piecewise-linear interpolant and the kernel |u - v|^(-1-alpha) is
    integrated exactly against each hat function. Within one cell of the
    singular point the symmetric pair x(u+r) + x(u-r) - 2x(u) is replaced by
    the centered second difference times r^2, whose kernel moment is exact.
    The exterior contributes x_i times the exact tail integral.
    """
    _check_order(alpha, upper_inclusive=False)
    n = int(grid_points)
    h = 2.0 / (n + 1)
    p = 1.0 + alpha
    u = -1.0 + h * np.arange(1, n + 1)

    def m0(a, b):
        return (a ** (1.0 - p) - b ** (1.0 - p)) / (p - 1.0)

    def m1(a, b):
        return (b ** (2.0 - p) - a ** (2.0 - p)) / (2.0 - p)

    m = np.arange(1, n + 1, dtype=float)
    # hat centred at distance m*h: falling half on [m h, (m+1) h]
    hat = ((m + 1) * h * m0(m * h, (m + 1) * h) - m1(m * h, (m + 1) * h)) / h
    # rising half on [(m-1) h, m h], absent for m = 1 (near-field cell)
    rise_a = np.maximum(m - 1.0, 1.0) * h
    rising = (m1(rise_a, m * h) - (m - 1) * h * m0(rise_a, m * h)) / h
    hat = hat + np.where(m >= 2, rising, 0.0)

    col = np.concatenate(([0.0], -hat[: n - 1]))
    mat = linalg.toeplitz(col)
    # x_i * integral of r^-p over |r| >= h (domain part plus zero exterior)
    diag = 2.0 * h ** (-alpha) / alpha
    near = h ** (2.0 - alpha) / (2.0 - alpha) / h ** 2
    mat[np.diag_indices(n)] += diag + 2.0 * near
    idx = np.arange(n - 1)
    mat[idx, idx + 1] -= near
    mat[idx + 1, idx] -= near
    return fractional_laplacian_constant(alpha) * mat, u


def quadrature_eigenpairs(alpha: float, grid_points: int, count: int,
                          symmetry_tol: float = 1e-10):
    mat, u = assemble_quadrature_matrix(alpha, grid_points)
    asym = np.max(np.abs(mat - mat.T)) / np.max(np.abs(mat))
    if asym > symmetry_tol:
        raise ArithmeticError(f"assembled operator not symmetric (relative defect {asym:.2e})")
    vals, vecs = linalg.eigh(mat, subset_by_index=[0, count - 1])
    return vals, vecs, u


def quadrature_eigenvalue_oracle(alpha: float, l: int, grid_points: int = 512) -> float:
    """l-th smallest eigenvalue of the dense quadrature discretization."""
    if grid_points < 64:
        raise ValueError("grid_points must be at least 64")
    if not 1 <= l <= grid_points // 4:
        raise ValueError("l must satisfy 1 <= l <= grid_points / 4")
    vals, _, _ = quadrature_eigenpairs(alpha, grid_points, l)
    return float(vals[l - 1])

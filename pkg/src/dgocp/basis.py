"""Legendre polynomials and Gauss quadrature on the reference interval [-1, 1].

Everything downstream (DG containers, solvers, norms) works in modal Legendre
coordinates, so this module is the single place where basis values, derivative
values and quadrature rules are produced.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "legendre_eval",
    "legendre_deriv",
    "legendre_table",
    "legendre_deriv_table",
    "gauss_rule",
    "default_rule",
    "deriv_inner_matrix",
    "mass_diagonal",
]

#: extra quadrature points beyond the polynomial degree (q = r + 3)
DEFAULT_EXTRA_POINTS = 3


def _check_domain(xi):
    if np.any(xi < -1.0 - 1e-12) or np.any(xi > 1.0 + 1e-12):
        raise ValueError("evaluation point outside the reference interval [-1, 1]")


def legendre_table(r, xi):
    """Values of P_0..P_r at the points xi, shape (len(xi), r+1)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    _check_domain(xi)
    out = np.empty((xi.size, r + 1))
    out[:, 0] = 1.0
    if r >= 1:
        out[:, 1] = xi
    for k in range(1, r):
        # (k+1) P_{k+1} = (2k+1) xi P_k - k P_{k-1}
        out[:, k + 1] = ((2 * k + 1) * xi * out[:, k] - k * out[:, k - 1]) / (k + 1)
    return out


def legendre_deriv_table(r, xi):
    """Values of P_0'..P_r' at the points xi, shape (len(xi), r+1)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    _check_domain(xi)
    vals = legendre_table(r, xi)
    out = np.zeros((xi.size, r + 1))
    if r >= 1:
        out[:, 1] = 1.0
    for k in range(1, r):
        # P'_{k+1} = P'_{k-1} + (2k+1) P_k
        out[:, k + 1] = out[:, k - 1] + (2 * k + 1) * vals[:, k]
    return out


def legendre_eval(k, xi):
    """P_k(xi) via the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    res = legendre_table(k, xi)[:, k]
    return float(res[0]) if np.isscalar(xi) or np.ndim(xi) == 0 else res


def legendre_deriv(k, xi):
    """P_k'(xi) via the derivative recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    res = legendre_deriv_table(k, xi)[:, k]
    return float(res[0]) if np.isscalar(xi) or np.ndim(xi) == 0 else res


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights on [-1, 1]."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def q(self):
        return self.points.size


def gauss_rule(q):
    """q-point Gauss-Legendre rule; exact for polynomials of degree <= 2q-1."""
    if q < 1:
        raise ValueError("quadrature rule needs at least one point")
    pts, wts = np.polynomial.legendre.leggauss(q)
    return QuadratureRule(points=pts, weights=wts)


def default_rule(r):
    """Module-wide default rule for degree-r DG computations (q = r + 3)."""
    return gauss_rule(r + DEFAULT_EXTRA_POINTS)


def deriv_inner_matrix(r):
    """D[j, k] = integral of P_k' P_j over [-1, 1]: 2 when k > j with k+j odd."""
    D = np.zeros((r + 1, r + 1))
    for j in range(r + 1):
        for k in range(j + 1, r + 1):
            if (j + k) % 2 == 1:
                D[j, k] = 2.0
    return D


def mass_diagonal(r):
    """Diagonal of the reference mass matrix: integral of P_k^2 = 2/(2k+1)."""
    return 2.0 / (2.0 * np.arange(r + 1) + 1.0)

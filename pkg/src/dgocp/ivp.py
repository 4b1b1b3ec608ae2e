"""Nonlinear DG solver for x' = F(t, x), x(0) = x0, and backward solves.

The weak DG equation couples intervals only through the upwind jump term, so
the solve marches interval by interval; on each interval a damped Newton
iteration drives the (r+1)*d modal residual below tolerance.  Backward
(terminal-value) solves are forward solves of the time-reversed system on the
reversed partition, followed by a coefficient-level reversal.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import default_rule, deriv_inner_matrix, legendre_table
from .mesh import DGFunction

__all__ = [
    "IVPRight",
    "NewtonOptions",
    "SolverFailure",
    "solve_forward",
    "solve_backward",
    "reverse_dg",
]

DAMPING_FLOOR = 2.0**-10


@dataclass
class IVPRight:
    """Right-hand side F and its state Jacobian, vectorized over time batches.

    F(ts, X) maps (q,), (q, d) -> (q, d); dF_dx maps to (q, d, d).
    """

    F: Callable
    dF_dx: Callable
    lipschitz_bound: Optional[float] = None

    def check_jacobian(self, rng, d, t_span=(0.0, 1.0), probes=5, tol=1e-5):
        """Finite-difference verification of dF_dx at random probes."""
        for _ in range(probes):
            ts = rng.uniform(*t_span, size=1)
            x = rng.standard_normal((1, d))
            A = self.dF_dx(ts, x)[0]
            eps = 1e-6
            for j in range(d):
                dx = np.zeros((1, d))
                dx[0, j] = eps
                col = (self.F(ts, x + dx)[0] - self.F(ts, x - dx)[0]) / (2 * eps)
                scale = max(1.0, float(np.max(np.abs(A))))
                if np.max(np.abs(col - A[:, j])) > tol * scale:
                    raise ValueError("dF_dx disagrees with finite differences")


@dataclass
class NewtonOptions:
    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0.0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


class SolverFailure(RuntimeError):
    """Newton failed to converge on some interval."""

    def __init__(self, interval, residual, message=None):
        self.interval = interval
        self.residual = residual
        super().__init__(
            message
            or f"Newton failed on interval {interval} (last residual {residual:.3e})"
        )


def solve_forward(rhs, x0, partition, r, opts=None, rule=None):
    """DG approximation of x' = F(t, x), x(0) = x0, in X_h^r.

    On each interval the modal coefficients satisfy

        D @ C + s (s @ C - x_in) = (h/2) P^T diag(w) F(t_q, P C)

    with s_j = P_j(-1) = (-1)^j, which is the weak DG equation tested against
    the local Legendre basis.
    """
    opts = opts or NewtonOptions()
    rule = rule or default_rule(r)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size

    if rhs.lipschitz_bound is not None and partition.h * rhs.lipschitz_bound >= 1.0:
        warnings.warn(
            "h * L >= 1: uniqueness hypothesis of the DG error bound is not met",
            stacklevel=2,
        )

    P = legendre_table(r, rule.points)            # (q, r+1)
    w = rule.weights
    s = (-1.0) ** np.arange(r + 1)                # traces at xi = -1
    D = deriv_inner_matrix(r)
    # state-independent part of the Jacobian: (D[j,k] + s_j s_k) * I_d
    lin = D + np.outer(s, s)
    J_base = np.einsum("jk,ab->jakb", lin, np.eye(d))
    PtW = P.T * w                                  # (r+1, q)

    sol = DGFunction(partition, r, d)
    x_in = x0
    nd = (r + 1) * d

    for n in range(partition.N):
        h = partition.widths[n]
        tq = partition.nodes[n] + 0.5 * h * (rule.points + 1.0)
        C = np.zeros((r + 1, d))
        C[0] = x_in  # constant extension of the incoming trace

        def residual(C):
            X = P @ C
            Fv = rhs.F(tq, X)
            return lin @ C - np.outer(s, x_in) - 0.5 * h * (PtW @ Fv), X

        R, X = residual(C)
        rnorm = np.max(np.abs(R))
        converged = rnorm <= opts.tol
        for _ in range(opts.max_iter):
            if converged:
                break
            A = rhs.dF_dx(tq, X)                   # (q, d, d)
            J = J_base - 0.5 * h * np.einsum("q,qj,qk,qab->jakb", w, P, P, A)
            delta = np.linalg.solve(J.reshape(nd, nd), -R.reshape(nd)).reshape(r + 1, d)
            alpha = opts.damping
            while True:
                Rn, Xn = residual(C + alpha * delta)
                rn = np.max(np.abs(Rn))
                if rn < rnorm or alpha <= DAMPING_FLOOR:
                    break
                alpha *= 0.5
            C = C + alpha * delta
            R, X, rnorm = Rn, Xn, rn
            converged = rnorm <= opts.tol
        if not converged:
            raise SolverFailure(n, rnorm)
        sol.coeffs[n] = C
        x_in = C.sum(axis=0)                       # left trace at t_n

    return sol


def reverse_dg(F):
    """The time-reversed function t -> F(T - t) on the reversed partition."""
    signs = (-1.0) ** np.arange(F.degree + 1)
    coeffs = F.coeffs[::-1] * signs[None, :, None]
    return DGFunction(F.partition.reversed(), F.degree, F.dim, coeffs)


def solve_backward(rhs, xT, partition, r, opts=None, rule=None):
    """DG solve of the terminal-value problem x' = F(t, x), x(T) = xT.

    Realized as a forward solve of W'(s) = -F(T - s, W), W(0) = xT on the
    reversed partition, then reversed back; the result is the discrete
    upwind-adjoint solution tested against X_h^r.
    """
    T = partition.T
    rev = IVPRight(
        F=lambda ts, X: -rhs.F(T - ts, X),
        dF_dx=lambda ts, X: -rhs.dF_dx(T - ts, X),
        lipschitz_bound=rhs.lipschitz_bound,
    )
    W = solve_forward(rev, xT, partition.reversed(), r, opts=opts, rule=rule)
    lam = reverse_dg(W)
    lam.partition = partition  # avoid accumulating float error in T - (T - t)
    return lam

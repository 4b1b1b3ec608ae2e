"""Optimal control problem definition and the reduced-space primitives.

The reduced pipeline: state solve x_h = G_h(u), discrete adjoint lambda_h,
reduced gradient g_u - f_u^T lambda_h, tangent solve y_h = G_h'(u) v, and the
Hessian quadratic form j_h''(u)(v, v).

All problem callables are vectorized over time batches:
    t: (q,), x: (q, d), u: (q, m)
    f -> (q, d); g -> (q,)
    fx -> (q, d, d); fu -> (q, d, m); gx -> (q, d); gu -> (q, m)
    fxx -> (q, d, d, d); fxu -> (q, d, d, m); fuu -> (q, d, m, m)
    gxx -> (q, d, d); gxu -> (q, d, m); guu -> (q, m, m)
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import default_rule, deriv_inner_matrix, legendre_table
from .ivp import IVPRight, NewtonOptions, solve_forward, solve_backward
from .mesh import ControlFunction, DGFunction

__all__ = [
    "OCProblem",
    "ReducedEvaluation",
    "as_control",
    "solve_state",
    "solve_adjoint",
    "reduced_gradient",
    "cost",
    "tangent_solve",
    "hessian_form",
    "pair_with_direction",
    "adjoint_residual",
    "evaluate",
]


@dataclass
class OCProblem:
    """Dynamics f, running cost g, their partials, and the control box."""

    d: int
    m: int
    T: float
    x0: np.ndarray
    f: Callable
    g: Callable
    fx: Callable
    fu: Callable
    gx: Callable
    gu: Callable
    fxx: Optional[Callable] = None
    fxu: Optional[Callable] = None
    fuu: Optional[Callable] = None
    gxx: Optional[Callable] = None
    gxu: Optional[Callable] = None
    guu: Optional[Callable] = None
    u_lo: Optional[np.ndarray] = None
    u_hi: Optional[np.ndarray] = None
    smoothness_bound: Optional[float] = None
    # closed-form pointwise stationary control (t, x, lam) -> u, used by FBS
    stationary_control: Optional[Callable] = None

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x0.size != self.d:
            raise ValueError("x0 must have length d")
        self.u_lo = self._bound(self.u_lo, -np.inf)
        self.u_hi = self._bound(self.u_hi, np.inf)
        if np.any(self.u_lo > self.u_hi):
            raise ValueError("lower bound exceeds upper bound")

    def _bound(self, b, fill):
        if b is None:
            return np.full(self.m, fill)
        return np.broadcast_to(np.asarray(b, dtype=float), (self.m,)).copy()

    @property
    def has_second_partials(self):
        return all(
            fn is not None
            for fn in (self.fxx, self.fxu, self.fuu, self.gxx, self.gxu, self.guu)
        )

    def clip_box(self, u_vals):
        return np.clip(u_vals, self.u_lo, self.u_hi)

    def check_derivatives(self, rng=None, probes=5, tol=1e-5, eps=1e-6):
        """Finite-difference verification of the supplied first partials."""
        rng = rng or np.random.default_rng(0)
        for _ in range(probes):
            t = rng.uniform(0.0, self.T, size=1)
            x = rng.standard_normal((1, self.d))
            u = rng.standard_normal((1, self.m))
            u = np.clip(u, np.maximum(self.u_lo, -2.0), np.minimum(self.u_hi, 2.0))
            self._check_partial(self.fx, self.f, t, x, u, "x", tol, eps, "fx")
            self._check_partial(self.fu, self.f, t, x, u, "u", tol, eps, "fu")
            self._check_partial(self.gx, self.g, t, x, u, "x", tol, eps, "gx")
            self._check_partial(self.gu, self.g, t, x, u, "u", tol, eps, "gu")

    def _check_partial(self, deriv, base, t, x, u, wrt, tol, eps, name):
        got = np.asarray(deriv(t, x, u))[0]
        size = self.d if wrt == "x" else self.m
        for j in range(size):
            dz = np.zeros((1, size))
            dz[0, j] = eps
            if wrt == "x":
                fd = (np.asarray(base(t, x + dz, u))[0] - np.asarray(base(t, x - dz, u))[0]) / (2 * eps)
            else:
                fd = (np.asarray(base(t, x, u + dz))[0] - np.asarray(base(t, x, u - dz))[0]) / (2 * eps)
            col = got[..., j]
            scale = max(1.0, float(np.max(np.abs(got))))
            if np.max(np.abs(fd - col)) > tol * scale:
                raise ValueError(f"{name} disagrees with finite differences")


def as_control(u, p):
    """Normalize a DGFunction / callable / ControlFunction into a ControlFunction."""
    if isinstance(u, ControlFunction):
        return u
    return ControlFunction(u, m=p.m, lo=p.u_lo, hi=p.u_hi)


@dataclass
class ReducedEvaluation:
    """Everything produced by one pass of the reduced pipeline at a control u."""

    u: ControlFunction
    x_h: DGFunction
    lambda_h: DGFunction
    cost: float
    grad: Callable  # t -> (len(t), m), the integrand of j_h'


def solve_state(p, u, partition, r, opts=None, rule=None):
    """x_h = G_h(u): forward DG solve of x' = f(t, x, u(t))."""
    uc = as_control(u, p)
    rhs = IVPRight(
        F=lambda ts, X: p.f(ts, X, uc(ts)),
        dF_dx=lambda ts, X: p.fx(ts, X, uc(ts)),
        lipschitz_bound=p.smoothness_bound,
    )
    return solve_forward(rhs, p.x0, partition, r, opts=opts, rule=rule)


def solve_adjoint(p, u, x_h, partition, r, opts=None, rule=None):
    """Discrete adjoint: backward DG solve of lam' = -fx^T lam + gx, lam(T) = 0."""
    uc = as_control(u, p)

    def F(ts, L):
        X = x_h.eval_many(ts)
        U = uc(ts)
        return -np.einsum("qab,qa->qb", p.fx(ts, X, U), L) + p.gx(ts, X, U)

    def dF(ts, L):
        X = x_h.eval_many(ts)
        U = uc(ts)
        return -np.transpose(p.fx(ts, X, U), (0, 2, 1))

    rhs = IVPRight(F=F, dF_dx=dF)
    return solve_backward(rhs, np.zeros(p.d), partition, r, opts=opts, rule=rule)


def reduced_gradient(p, u, x_h, lambda_h):
    """Pointwise integrand of j_h'(u): gu(t, x_h, u) - fu(t, x_h, u)^T lambda_h."""
    uc = as_control(u, p)

    def grad(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        X = x_h.eval_many(ts)
        U = uc(ts)
        L = lambda_h.eval_many(ts)
        return p.gu(ts, X, U) - np.einsum("qdm,qd->qm", p.fu(ts, X, U), L)

    return grad


def cost(p, u, x_h, rule=None):
    """j_h(u) = quadrature of g(t, x_h, u) over [0, T]."""
    uc = as_control(u, p)
    rule = rule or default_rule(x_h.degree)
    ts = x_h.partition.quad_times(rule)
    flat = ts.ravel()
    gv = p.g(flat, x_h.eval_many(flat), uc(flat)).reshape(x_h.partition.N, rule.q)
    return float(np.sum(0.5 * x_h.partition.widths * (gv @ rule.weights)))


def tangent_solve(p, u, x_h, v, partition, r, opts=None, rule=None):
    """y_h = G_h'(u) v: forward DG solve of the linearized dynamics, y(0) = 0."""
    uc = as_control(u, p)
    vc = as_control(v, p)

    def F(ts, Y):
        X = x_h.eval_many(ts)
        U = uc(ts)
        return np.einsum("qab,qb->qa", p.fx(ts, X, U), Y) + np.einsum(
            "qam,qm->qa", p.fu(ts, X, U), vc(ts)
        )

    def dF(ts, Y):
        return p.fx(ts, x_h.eval_many(ts), uc(ts))

    rhs = IVPRight(F=F, dF_dx=dF)
    return solve_forward(rhs, np.zeros(p.d), partition, r, opts=opts, rule=rule)


def pair_with_direction(integrand, v, p, partition, rule):
    """Quadrature of <integrand(t), v(t)> over [0, T]."""
    vc = as_control(v, p)
    ts = partition.quad_times(rule)
    flat = ts.ravel()
    prod = np.einsum("qm,qm->q", integrand(flat), vc(flat)).reshape(partition.N, rule.q)
    return float(np.sum(0.5 * partition.widths * (prod @ rule.weights)))


def hessian_form(p, u, v, partition, r, opts=None, rule=None, state=None, adjoint=None):
    """j_h''(u)(v, v) assembled from x_h, lambda_h, y_h and the second partials.

    The two-integral formula: the g-second-derivative quadratic form in
    (y_h, v) minus lambda_h paired with the f-second-derivative form.
    """
    if not p.has_second_partials:
        raise ValueError("hessian_form requires all six second partials")
    rule = rule or default_rule(r)
    uc = as_control(u, p)
    vc = as_control(v, p)
    x_h = state if state is not None else solve_state(p, uc, partition, r, opts, rule)
    lam = adjoint if adjoint is not None else solve_adjoint(p, uc, x_h, partition, r, opts, rule)
    y_h = tangent_solve(p, uc, x_h, vc, partition, r, opts, rule)

    ts = partition.quad_times(rule).ravel()
    X = x_h.eval_many(ts)
    U = uc(ts)
    L = lam.eval_many(ts)
    Y = y_h.eval_many(ts)
    V = vc(ts)

    g_form = (
        np.einsum("qab,qa,qb->q", p.gxx(ts, X, U), Y, Y)
        + 2.0 * np.einsum("qam,qa,qm->q", p.gxu(ts, X, U), Y, V)
        + np.einsum("qmn,qm,qn->q", p.guu(ts, X, U), V, V)
    )
    f_form = (
        np.einsum("qiab,qa,qb->qi", p.fxx(ts, X, U), Y, Y)
        + 2.0 * np.einsum("qiam,qa,qm->qi", p.fxu(ts, X, U), Y, V)
        + np.einsum("qimn,qm,qn->qi", p.fuu(ts, X, U), V, V)
    )
    integrand = g_form - np.einsum("qi,qi->q", f_form, L)
    per = integrand.reshape(partition.N, rule.q) @ rule.weights
    return float(np.sum(0.5 * partition.widths * per))


def adjoint_residual(p, u, x_h, lambda_h, rule=None):
    """Max-norm residual of the discrete adjoint weak form over a full DG basis.

    For each interval n and basis function phi = P_j e_a supported on I_n:

        B(phi, lam) - (phi, fx^T lam - gx)_I
          = int P_j' lam_a dxi + (-1)^j lam^+_{n-1,a} - [n < N] P_j(1) lam^+_{n,a}
            - (h/2) sum_q w_q P_j(xi_q) rhs_a(t_q).
    """
    r = lambda_h.degree
    rule = rule or default_rule(r)
    uc = as_control(u, p)
    part = lambda_h.partition
    N = part.N

    ts = part.quad_times(rule).ravel()
    X = x_h.eval_many(ts)
    U = uc(ts)
    L = lambda_h.eval_many(ts)
    rhs = np.einsum("qab,qa->qb", p.fx(ts, X, U), L) - p.gx(ts, X, U)
    rhs = rhs.reshape(N, rule.q, p.d)

    P = legendre_table(r, rule.points)
    D = deriv_inner_matrix(r)  # D[j,k] = int P_k' P_j
    # int P_j' lam dxi = sum_k (int P_j' P_k) c_k = (D^T C)_j
    dterm = np.einsum("jk,nkd->njd", D.T, lambda_h.coeffs)
    sign = (-1.0) ** np.arange(r + 1)

    res = dterm - 0.5 * np.einsum("n,qj,q,nqd->njd", part.widths, P, rule.weights, rhs)
    for n in range(N):
        lam_plus_prev = lambda_h.trace_right(n)             # lam^+ at node n
        res[n] += np.outer(sign, lam_plus_prev)
        if n < N - 1:
            res[n] -= np.outer(np.ones(r + 1), lambda_h.trace_right(n + 1))
    return float(np.max(np.abs(res)))


def evaluate(p, u, partition, r, opts=None, rule=None):
    """Full reduced evaluation at u: state, adjoint, cost and gradient integrand."""
    opts = opts or NewtonOptions()
    rule = rule or default_rule(r)
    uc = as_control(u, p)
    x_h = solve_state(p, uc, partition, r, opts, rule)
    lam = solve_adjoint(p, uc, x_h, partition, r, opts, rule)
    return ReducedEvaluation(
        u=uc,
        x_h=x_h,
        lambda_h=lam,
        cost=cost(p, uc, x_h, rule),
        grad=reduced_gradient(p, uc, x_h, lam),
    )

"""Reduced-space primitives: state, adjoint, gradient, tangent, Hessian."""

import numpy as np
import pytest

from dgocp import (
    DGFunction,
    OCProblem,
    adjoint_residual,
    cost,
    default_rule,
    evaluate,
    hessian_form,
    l2_error,
    make_uniform_partition,
    pair_with_direction,
    reduced_gradient,
    solve_adjoint,
    solve_state,
    tangent_solve,
)
from dgocp.problems import get_builtin, linear_lq, nonlinear_quadratic

from conftest import random_dg, simpson


def _zero_control(partition, r=1, m=1):
    return DGFunction(partition, r, m)


# -- state solves -------------------------------------------------------------


def test_state_zero_dynamics():
    p = OCProblem(
        d=1, m=1, T=1.0, x0=[4.0],
        f=lambda t, x, u: np.zeros_like(x),
        g=lambda t, x, u: np.zeros(t.size),
        fx=lambda t, x, u: np.zeros((t.size, 1, 1)),
        fu=lambda t, x, u: np.zeros((t.size, 1, 1)),
        gx=lambda t, x, u: np.zeros((t.size, 1)),
        gu=lambda t, x, u: np.zeros((t.size, 1)),
    )
    part = make_uniform_partition(1.0, 5)
    x = solve_state(p, _zero_control(part), part, 2)
    assert np.max(np.abs(x.coeffs[:, 0, 0] - 4.0)) < 1e-14
    assert np.max(np.abs(x.coeffs[:, 1:, :])) < 1e-14


def test_state_table_entry_high_order():
    builtin = linear_lq()
    part = make_uniform_partition(1.0, 80)  # h = 0.1 * 2^-3
    x = solve_state(builtin.problem, lambda t: builtin.exact_control(t), part, 3)
    err = l2_error(x, builtin.exact_state)
    assert 2e-11 < err < 2e-10  # reproduces the 7.1152e-11 magnitude


def test_state_riccati_value():
    p = nonlinear_quadratic().problem
    part = make_uniform_partition(p.T, 64)
    x = solve_state(p, _zero_control(part, r=3), part, 3)
    # x' = x^2, x(0) = 2 has x(T) = 2 / (1 - 2T) = 10/3 at T = 0.2
    assert abs(x.eval(p.T, side="left")[0] - 10.0 / 3.0) < 1e-6


# -- adjoint solves -----------------------------------------------------------


def test_adjoint_zero_when_cost_ignores_state():
    p = OCProblem(
        d=1, m=1, T=1.0, x0=[1.0],
        f=lambda t, x, u: -x + u,
        g=lambda t, x, u: 0.5 * u[:, 0] ** 2,
        fx=lambda t, x, u: np.full((t.size, 1, 1), -1.0),
        fu=lambda t, x, u: np.ones((t.size, 1, 1)),
        gx=lambda t, x, u: np.zeros((t.size, 1)),
        gu=lambda t, x, u: u.copy(),
    )
    part = make_uniform_partition(1.0, 6)
    u = _zero_control(part)
    x = solve_state(p, u, part, 2)
    lam = solve_adjoint(p, u, x, part, 2)
    assert np.max(np.abs(lam.coeffs)) < 1e-13


def test_adjoint_table_entry():
    builtin = linear_lq()
    p = builtin.problem
    part = make_uniform_partition(1.0, 320)  # h = 0.1 * 2^-5
    u = lambda t: builtin.exact_control(t)
    x = solve_state(p, u, part, 2)
    lam = solve_adjoint(p, u, x, part, 2)
    # with lam' = -fx^T lam + gx the discrete adjoint approximates the
    # optimal control itself for this problem
    err = l2_error(lam, builtin.exact_control)
    assert 3e-10 < err < 6e-10  # reproduces the 4.1672e-10 magnitude


def test_adjoint_terminal_trace(rng):
    builtin = linear_lq()
    part = make_uniform_partition(1.0, 10)
    u = random_dg(rng, part, 3)
    x = solve_state(builtin.problem, u, part, 3)
    lam = solve_adjoint(builtin.problem, u, x, part, 3)
    # terminal value is imposed weakly, so the left trace at T is only
    # approximately zero; a rough random control limits its accuracy
    assert abs(lam.eval(1.0, side="left")[0]) < 1e-4


def test_adjoint_weak_form_residual(rng):
    for name in ("linear-lq", "nonlinear-quadratic"):
        builtin = get_builtin(name)
        p = builtin.problem
        for r in range(4):
            part = make_uniform_partition(p.T, 16)
            u = random_dg(rng, part, r)
            x = solve_state(p, u, part, r)
            lam = solve_adjoint(p, u, x, part, r)
            assert adjoint_residual(p, u, x, lam) < 1e-10


def test_adjoint_lipschitz_in_control(rng):
    builtin = linear_lq()
    p = builtin.problem
    part = make_uniform_partition(1.0, 8)
    r = 2
    ratios = []
    for _ in range(8):
        u1 = random_dg(rng, part, r)
        u2 = random_dg(rng, part, r)
        lam1 = solve_adjoint(p, u1, solve_state(p, u1, part, r), part, r)
        lam2 = solve_adjoint(p, u2, solve_state(p, u2, part, r), part, r)
        du = l2_error(u1, u2)
        if du > 1e-12:
            ratios.append(l2_error(lam1, lam2) / du)
    assert max(ratios) < 2.0


# -- gradient and cost --------------------------------------------------------


def test_gradient_zero_when_cost_and_dynamics_ignore_control():
    p = OCProblem(
        d=1, m=1, T=1.0, x0=[1.0],
        f=lambda t, x, u: -x,
        g=lambda t, x, u: 0.5 * x[:, 0] ** 2,
        fx=lambda t, x, u: np.full((t.size, 1, 1), -1.0),
        fu=lambda t, x, u: np.zeros((t.size, 1, 1)),
        gx=lambda t, x, u: x.copy(),
        gu=lambda t, x, u: np.zeros((t.size, 1)),
    )
    part = make_uniform_partition(1.0, 6)
    u = _zero_control(part)
    x = solve_state(p, u, part, 2)
    lam = solve_adjoint(p, u, x, part, 2)
    grad = reduced_gradient(p, u, x, lam)
    assert np.max(np.abs(grad(np.linspace(0, 1, 33)))) < 1e-13


def test_gradient_matches_finite_differences(rng):
    for name in ("linear-lq", "nonlinear-quadratic"):
        p = get_builtin(name).problem
        part = make_uniform_partition(p.T, 8)
        r = 2
        rule = default_rule(r)
        eps = 1e-5
        for _ in range(3):
            u = random_dg(rng, part, r)
            v = random_dg(rng, part, r)
            x = solve_state(p, u, part, r)
            lam = solve_adjoint(p, u, x, part, r)
            lhs = pair_with_direction(reduced_gradient(p, u, x, lam), v, p, part, rule)
            jp = cost(p, u + eps * v, solve_state(p, u + eps * v, part, r), rule)
            jm = cost(p, u - eps * v, solve_state(p, u - eps * v, part, r), rule)
            fd = (jp - jm) / (2.0 * eps)
            assert abs(lhs - fd) <= 1e-6 * max(1.0, abs(fd))


def test_cost_trivial_values():
    pc = OCProblem(
        d=1, m=1, T=1.0, x0=[0.0],
        f=lambda t, x, u: np.zeros_like(x),
        g=lambda t, x, u: np.ones(t.size),
        fx=lambda t, x, u: np.zeros((t.size, 1, 1)),
        fu=lambda t, x, u: np.zeros((t.size, 1, 1)),
        gx=lambda t, x, u: np.zeros((t.size, 1)),
        gu=lambda t, x, u: np.zeros((t.size, 1)),
    )
    part = make_uniform_partition(1.0, 4)
    u = _zero_control(part)
    x = solve_state(pc, u, part, 1)
    assert cost(pc, u, x) == pytest.approx(1.0, abs=1e-13)
    pc.g = lambda t, x, u: np.zeros(t.size)
    assert cost(pc, u, x) == pytest.approx(0.0, abs=1e-14)


def test_cost_against_simpson_oracle():
    builtin = linear_lq()
    p = builtin.problem
    xbar, ubar = builtin.exact_state, builtin.exact_control
    oracle = simpson(lambda t: 0.5 * (xbar(t) ** 2 + ubar(t) ** 2), 0.0, 1.0)
    part = make_uniform_partition(1.0, 64)
    x = solve_state(p, lambda t: ubar(t), part, 2)
    assert cost(p, lambda t: ubar(t), x) == pytest.approx(oracle, abs=1e-8)


# -- tangent solves -----------------------------------------------------------


def test_tangent_zero_direction(rng):
    p = nonlinear_quadratic().problem
    part = make_uniform_partition(p.T, 6)
    u = random_dg(rng, part, 1)
    x = solve_state(p, u, part, 1)
    y = tangent_solve(p, u, x, _zero_control(part), part, 1)
    assert np.max(np.abs(y.coeffs)) < 1e-13


def test_tangent_matches_finite_differences(rng):
    for name in ("linear-lq", "nonlinear-quadratic"):
        p = get_builtin(name).problem
        part = make_uniform_partition(p.T, 8)
        r = 2
        eps = 1e-5
        for _ in range(3):
            u = random_dg(rng, part, r)
            v = random_dg(rng, part, r)
            x = solve_state(p, u, part, r)
            y = tangent_solve(p, u, x, v, part, r)
            xp = solve_state(p, u + eps * v, part, r)
            xm = solve_state(p, u - eps * v, part, r)
            fd = (1.0 / (2.0 * eps)) * (xp - xm)
            assert (y - fd).l2_norm() <= 1e-6 * max(1e-12, fd.l2_norm())


def test_tangent_superposition_for_linear_dynamics(rng):
    p = linear_lq().problem
    part = make_uniform_partition(1.0, 8)
    v = random_dg(rng, part, 2)
    u1 = random_dg(rng, part, 2)
    u2 = random_dg(rng, part, 2)
    x1 = solve_state(p, u1, part, 2)
    x2 = solve_state(p, u2, part, 2)
    y1 = tangent_solve(p, u1, x1, v, part, 2)
    y2 = tangent_solve(p, u2, x2, v, part, 2)
    assert np.max(np.abs(y1.coeffs - y2.coeffs)) < 1e-12


def test_adjoint_gradient_consistency(rng):
    # pairing the gradient with v equals the tangent-based derivative
    for name in ("linear-lq", "nonlinear-quadratic"):
        p = get_builtin(name).problem
        part = make_uniform_partition(p.T, 8)
        r = 2
        rule = default_rule(r)
        u = random_dg(rng, part, r)
        v = random_dg(rng, part, r)
        x = solve_state(p, u, part, r)
        lam = solve_adjoint(p, u, x, part, r)
        y = tangent_solve(p, u, x, v, part, r)
        lhs = pair_with_direction(reduced_gradient(p, u, x, lam), v, p, part, rule)

        ts = part.quad_times(rule).ravel()
        X, U, Y, V = x.eval_many(ts), u.eval_many(ts), y.eval_many(ts), v.eval_many(ts)
        integrand = np.einsum("qd,qd->q", p.gx(ts, X, U), Y) + np.einsum(
            "qm,qm->q", p.gu(ts, X, U), V
        )
        per = integrand.reshape(part.N, rule.q) @ rule.weights
        rhs = float(np.sum(0.5 * part.widths * per))
        assert abs(lhs - rhs) < 1e-9


# -- Hessian ------------------------------------------------------------------


def test_hessian_zero_direction():
    p = nonlinear_quadratic().problem
    part = make_uniform_partition(p.T, 4)
    u = _zero_control(part)
    assert hessian_form(p, u, _zero_control(part), part, 1) == pytest.approx(0.0, abs=1e-14)


def test_hessian_closed_form_linear_quadratic(rng):
    # f linear, g = (x^2 + u^2)/2: j''(v, v) = int y^2 + v^2 >= ||v||^2
    p = linear_lq().problem
    part = make_uniform_partition(1.0, 8)
    for _ in range(5):
        u = random_dg(rng, part, 2)
        v = random_dg(rng, part, 2)
        quad = hessian_form(p, u, v, part, 2)
        x = solve_state(p, u, part, 2)
        y = tangent_solve(p, u, x, v, part, 2)
        expected = y.l2_norm() ** 2 + v.l2_norm() ** 2
        assert quad == pytest.approx(expected, abs=1e-10)
        assert quad >= v.l2_norm() ** 2 - 1e-8


def test_hessian_matches_second_differences(rng):
    p = nonlinear_quadratic().problem
    part = make_uniform_partition(p.T, 8)
    r = 2
    rule = default_rule(r)
    eps = 1e-4
    for _ in range(3):
        u = random_dg(rng, part, r)
        v = random_dg(rng, part, r)
        quad = hessian_form(p, u, v, part, r)
        j0 = cost(p, u, solve_state(p, u, part, r), rule)
        jp = cost(p, u + eps * v, solve_state(p, u + eps * v, part, r), rule)
        jm = cost(p, u - eps * v, solve_state(p, u - eps * v, part, r), rule)
        fd = (jp - 2.0 * j0 + jm) / eps**2
        assert abs(quad - fd) <= 1e-4 * max(1.0, abs(fd))


def test_hessian_requires_second_partials():
    p = OCProblem(
        d=1, m=1, T=1.0, x0=[1.0],
        f=lambda t, x, u: -x + u,
        g=lambda t, x, u: 0.5 * u[:, 0] ** 2,
        fx=lambda t, x, u: np.full((t.size, 1, 1), -1.0),
        fu=lambda t, x, u: np.ones((t.size, 1, 1)),
        gx=lambda t, x, u: np.zeros((t.size, 1)),
        gu=lambda t, x, u: u.copy(),
    )
    part = make_uniform_partition(1.0, 4)
    with pytest.raises(ValueError):
        hessian_form(p, _zero_control(part), _zero_control(part), part, 1)


# -- problem validation and full evaluation ------------------------------------


def test_check_derivatives_catches_corruption(rng):
    p = nonlinear_quadratic().problem
    p.check_derivatives(rng)
    p.fu = lambda t, x, u: 1.01 * np.ones((t.size, 1, 1))
    with pytest.raises(ValueError):
        p.check_derivatives(rng)


def test_problem_validation():
    kwargs = dict(
        f=lambda t, x, u: -x,
        g=lambda t, x, u: np.zeros(t.size),
        fx=lambda t, x, u: np.zeros((t.size, 1, 1)),
        fu=lambda t, x, u: np.zeros((t.size, 1, 1)),
        gx=lambda t, x, u: np.zeros((t.size, 1)),
        gu=lambda t, x, u: np.zeros((t.size, 1)),
    )
    with pytest.raises(ValueError):
        OCProblem(d=2, m=1, T=1.0, x0=[1.0], **kwargs)
    with pytest.raises(ValueError):
        OCProblem(d=1, m=1, T=1.0, x0=[1.0], u_lo=1.0, u_hi=-1.0, **kwargs)


def test_evaluate_bundle(rng):
    builtin = linear_lq()
    p = builtin.problem
    part = make_uniform_partition(1.0, 8)
    u = random_dg(rng, part, 2)
    ev = evaluate(p, u, part, 2)
    assert ev.cost == pytest.approx(cost(p, u, ev.x_h), abs=1e-14)
    assert abs(ev.lambda_h.eval(1.0, side="left")[0]) < 1e-4
    g = ev.grad(np.array([0.3]))
    assert g.shape == (1, 1)

"""Legendre basis and Gauss quadrature."""

import numpy as np
import pytest

from dgocp import (
    deriv_inner_matrix,
    default_rule,
    gauss_rule,
    legendre_deriv,
    legendre_eval,
    legendre_table,
    mass_diagonal,
)


def test_legendre_eval_examples():
    assert legendre_eval(0, 0.3) == 1.0
    assert legendre_eval(1, 0.5) == 0.5
    assert legendre_eval(2, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_legendre_deriv_examples():
    assert legendre_deriv(1, -0.7) == 1.0
    assert legendre_deriv(0, 0.2) == 0.0
    assert legendre_deriv(2, 0.5) == pytest.approx(1.5, abs=1e-14)


def test_legendre_endpoint_values():
    # P_k(1) = 1 and P_k(-1) = (-1)^k for every degree
    for k in range(9):
        assert legendre_eval(k, 1.0) == pytest.approx(1.0, abs=1e-13)
        assert legendre_eval(k, -1.0) == pytest.approx((-1.0) ** k, abs=1e-13)


def test_orthogonality():
    r = 12
    rule = gauss_rule(r + 1)
    P = legendre_table(r, rule.points)
    gram = P.T @ (P * rule.weights[:, None])
    expected = np.diag(2.0 / (2.0 * np.arange(r + 1) + 1.0))
    assert np.max(np.abs(gram - expected)) < 1e-12


def test_gauss_rule_small():
    r1 = gauss_rule(1)
    assert r1.points == pytest.approx([0.0])
    assert r1.weights == pytest.approx([2.0])
    r2 = gauss_rule(2)
    assert r2.points == pytest.approx([-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)])
    assert r2.weights == pytest.approx([1.0, 1.0])


def test_gauss_rule_quartic():
    rule = gauss_rule(3)
    val = float(np.sum(rule.weights * rule.points**4))
    assert val == pytest.approx(0.4, abs=1e-13)


def test_weights_sum_to_two():
    for q in range(1, 11):
        rule = gauss_rule(q)
        assert float(np.sum(rule.weights)) == pytest.approx(2.0, abs=1e-13)
        assert np.all(np.diff(rule.points) > 0)
        assert np.all(rule.weights > 0)


def test_quadrature_exactness_random_polynomials(rng):
    for q in range(1, 7):
        rule = gauss_rule(q)
        deg = 2 * q - 1
        for _ in range(5):
            c = rng.uniform(-1.0, 1.0, size=deg + 1)
            quad = float(np.sum(rule.weights * np.polyval(c, rule.points)))
            # exact integral of sum c_j x^j over [-1, 1]
            powers = np.arange(deg, -1, -1)
            exact = float(np.sum(c * (1.0 - (-1.0) ** (powers + 1)) / (powers + 1)))
            assert quad == pytest.approx(exact, abs=1e-12)


def test_recurrence_stability():
    xi = np.linspace(-1.0, 1.0, 1001)
    table = legendre_table(12, xi)
    assert np.max(np.abs(table)) <= 1.0 + 1e-13


def test_domain_and_argument_errors():
    with pytest.raises(ValueError):
        legendre_eval(2, 1.5)
    with pytest.raises(ValueError):
        legendre_deriv(1, -1.0001)
    with pytest.raises(ValueError):
        legendre_eval(-1, 0.0)
    with pytest.raises(ValueError):
        gauss_rule(0)


def test_default_rule_order():
    assert default_rule(2).q == 5


def test_deriv_inner_matrix_against_quadrature():
    r = 5
    rule = gauss_rule(r + 1)
    from dgocp import legendre_deriv_table

    P = legendre_table(r, rule.points)
    dP = legendre_deriv_table(r, rule.points)
    # D[j, k] = int P_k' P_j
    ref = np.einsum("q,qj,qk->jk", rule.weights, P, dP)
    assert np.max(np.abs(deriv_inner_matrix(r) - ref)) < 1e-12


def test_mass_diagonal():
    assert mass_diagonal(3) == pytest.approx([2.0, 2.0 / 3.0, 0.4, 2.0 / 7.0])

"""Martingale polynomial family: closed forms, basis changes, growth."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbm.qcore import Poly, QContext, q_binomial, q_factorial, q_int
from qbm.qhermite import (
    HermiteCoefficients,
    QPolynomial,
    from_hermite_basis,
    growth_bound,
    growth_constant,
    hermite_eval,
    hermite_eval_sequence,
    qhermite,
    scaling_check,
    to_hermite_basis,
)

HALF = QContext.exact(Fraction(1, 2))

rational = st.fractions(min_value=Fraction(-5), max_value=Fraction(5), max_denominator=8)
rational_q = st.fractions(
    min_value=Fraction(1, 10), max_value=Fraction(9, 10), max_denominator=10
)


def qpoly_strategy(max_x_degree=5, max_t_degree=2):
    coeff = st.lists(rational, min_size=0, max_size=max_t_degree + 1).map(Poly)
    return st.lists(coeff, min_size=0, max_size=max_x_degree + 1).map(
        lambda cs: QPolynomial(tuple(cs))
    )


def test_low_order_closed_forms():
    q = Fraction(1, 2)
    assert qhermite(0, HALF) == QPolynomial((Poly([1]),))
    assert qhermite(1, HALF) == QPolynomial.x_power(1)
    # h_2 = x^2 - t
    assert qhermite(2, HALF) == QPolynomial((Poly([0, -1]), Poly(), Poly([1])))
    # h_3 = x^3 - (2+q) t x
    assert qhermite(3, HALF) == QPolynomial(
        (Poly(), Poly([0, -(2 + q)]), Poly(), Poly([1]))
    )
    # h_4 = x^4 - (q^2 + 2q + 3) t x^2 + (q^2 + q + 1) t^2
    assert qhermite(4, HALF) == QPolynomial(
        (
            Poly([0, 0, q * q + q + 1]),
            Poly(),
            Poly([0, -(q * q + 2 * q + 3)]),
            Poly(),
            Poly([1]),
        )
    )


def test_recurrence_exact():
    for n in range(1, 11):
        lhs = qhermite(n, HALF).mul_x()
        rhs = qhermite(n + 1, HALF) + q_int(n, HALF) * qhermite(n - 1, HALF).mul_t()
        assert lhs == rhs


def test_hermite_coefficients_of_monomials():
    q = Fraction(1, 2)
    hc = to_hermite_basis(QPolynomial.x_power(2), HALF)
    assert hc.coeff(0) == Poly([0, 1])
    assert hc.coeff(2) == Poly([q_factorial(2, HALF)])

    hc = to_hermite_basis(QPolynomial.x_power(3), HALF)
    assert hc.coeff(1) == Poly([0, 2 + q])
    assert hc.coeff(3) == Poly([q_factorial(3, HALF)])

    hc = to_hermite_basis(QPolynomial.x_power(4), HALF)
    assert hc.coeff(0) == Poly([0, 0, q + 2])
    assert hc.coeff(2) == Poly([0, q_factorial(2, HALF) * (q * q + 2 * q + 3)])
    assert hc.coeff(4) == Poly([q_factorial(4, HALF)])
    assert q_factorial(4, HALF) == Fraction(315, 64)


def test_eval_matches_polynomial_call():
    ctx = QContext.numeric(0.7)
    h5 = qhermite(5, ctx)
    assert hermite_eval(5, 0.7, 1.3, ctx) == pytest.approx(h5(0.7, 1.3), rel=1e-13)
    seq = hermite_eval_sequence(5, 0.7, 1.3, ctx)
    for n in range(6):
        assert seq[n] == pytest.approx(qhermite(n, ctx)(0.7, 1.3), rel=1e-12, abs=1e-12)


def test_eval_sequence_vectorised():
    ctx = QContext.numeric(0.5)
    xs = np.linspace(-1.5, 1.5, 7)
    seq = hermite_eval_sequence(4, xs, 0.8, ctx)
    for n in range(5):
        for i, x in enumerate(xs):
            assert seq[n][i] == pytest.approx(hermite_eval(n, float(x), 0.8, ctx), abs=1e-12)


def test_growth_bound_attained_at_support_edge():
    # with t = 1 - q the edge is x = 2 and h_n(2; t) = sum of q-binomials
    q = Fraction(1, 2)
    t = 1 - q
    for n in range(1, 9):
        edge_value = qhermite(n, HALF)(Fraction(2), t)
        expected = sum(q_binomial(n, k, HALF) for k in range(n + 1))
        assert edge_value == expected
        bound = growth_bound(n, float(t), HALF)
        assert float(edge_value) == pytest.approx(bound, rel=1e-12)


def test_growth_bound_dominates_inside_support():
    ctx = QContext.numeric(0.6)
    for t in (0.3, 1.0, 2.5):
        w = 2.0 * (t / 0.4) ** 0.5
        for n in range(1, 9):
            bound = growth_bound(n, t, ctx)
            for x in np.linspace(-w, w, 41):
                assert abs(hermite_eval(n, float(x), t, ctx)) <= bound * (1 + 1e-12)


def test_growth_constant_monotone_in_n():
    ctx = QContext.numeric(0.5)
    cs = [growth_constant(n, ctx) for n in range(1, 10)]
    assert all(b > a for a, b in zip(cs, cs[1:]))


def test_scaling_relation():
    ctx = QContext.numeric(0.65)
    for n in range(1, 8):
        assert scaling_check(n, 0.4, 2.7, ctx) < 1e-9


def test_subs_t_scale():
    q = Fraction(1, 2)
    h3q = qhermite(3, HALF).subs_t_scale(q)
    assert h3q == QPolynomial((Poly(), Poly([0, -(2 + q) * q]), Poly(), Poly([1])))


def test_dq_time():
    # D_t (t^2 x) = [2] t x
    f = QPolynomial((Poly(), Poly([0, 0, 1])))
    assert f.dq_time(HALF) == QPolynomial((Poly(), Poly([0, q_int(2, HALF)])))


def test_json_roundtrip():
    f = QPolynomial((Poly([Fraction(1, 3)]), Poly([0, -2]), Poly([1])))
    assert QPolynomial.from_json(f.to_json()) == f
    hc = to_hermite_basis(f, HALF)
    again = HermiteCoefficients.from_json_dict(hc.to_json_dict())
    assert again.b == hc.b


@given(f=qpoly_strategy(), q=rational_q)
@settings(max_examples=50, deadline=None)
def test_basis_roundtrip(f, q):
    """to_hermite_basis then from_hermite_basis is the identity."""
    ctx = QContext.exact(q)
    assert from_hermite_basis(to_hermite_basis(f, ctx), ctx) == f


@given(f=qpoly_strategy(4, 1), g=qpoly_strategy(4, 1), q=rational_q)
@settings(max_examples=40, deadline=None)
def test_basis_conversion_linear(f, g, q):
    ctx = QContext.exact(q)
    fg = to_hermite_basis(f + g, ctx)
    ff = to_hermite_basis(f, ctx)
    gg = to_hermite_basis(g, ctx)
    top = max(len(ff.b), len(gg.b), len(fg.b))

    def coeff(hc, m):
        return hc.coeff(m) if m < len(hc.b) else Poly()

    for m in range(top):
        assert coeff(fg, m) == coeff(ff, m) + coeff(gg, m)

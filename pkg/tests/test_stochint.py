"""Discrete stochastic integral, tail bounds, and the exponential."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbm.process import GeometricGrid, GeometricPath, simulate_batch, simulate_path
from qbm.qcore import Poly, QContext, SampledFunction, q_factorial, q_int
from qbm.qhermite import QPolynomial, hermite_eval_sequence
from qbm.stochint import (
    PolynomialIntegrand,
    def_tail_bound,
    deterministic_integral,
    deterministic_tail_bound,
    exponential_radius,
    integrate_byparts,
    integrate_def,
    integrate_def_batch,
    isometry_second_moment,
    sde_residual,
    stochastic_exponential,
    stochastic_exponential_series,
)

HALF = QContext.exact(Fraction(1, 2))

rational = st.fractions(min_value=Fraction(-6), max_value=Fraction(6), max_denominator=8)


def free_path(grid, values):
    return GeometricPath(grid=grid, values=tuple(values))


def test_integrand_from_x_squared():
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(2), HALF)
    assert f.b[0] == Poly([0, 1])
    assert f.b[2] == Poly([q_factorial(2, HALF)])
    assert f.degree == 2


def test_hermite_integrand_telescopes():
    """Integrating h_n gives the increment of h_{n+1}/[n+1] exactly."""
    q = Fraction(1, 2)
    grid = GeometricGrid.build(q=q, t=Fraction(1), depth=5)
    vals = [Fraction(i % 3 - 1, 2) for i in range(6)]
    path = free_path(grid, vals)
    for n in range(5):
        b = [Poly.const(0)] * n + [Poly.const(q_factorial(n, HALF))]
        got = integrate_def(PolynomialIntegrand.from_hermite(b), path, HALF).value
        top = hermite_eval_sequence(n + 1, vals[0], grid.times[0], HALF)[n + 1]
        bot = hermite_eval_sequence(n + 1, vals[5], grid.times[5], HALF)[n + 1]
        assert got == (top - bot) / q_int(n + 1, HALF)


def test_def_and_byparts_differ_by_deep_boundary():
    q = Fraction(1, 2)
    grid = GeometricGrid.build(q=q, t=Fraction(1), depth=4)
    vals = [Fraction(3, 2), Fraction(-1, 2), Fraction(1, 4), Fraction(1), Fraction(-2)]
    path = free_path(grid, vals)
    f = PolynomialIntegrand((Poly([1, 1]), Poly([0, -2]), Poly([Fraction(1, 3)])))
    d = integrate_def(f, path, HALF).value
    p = integrate_byparts(f, path, HALF).value
    hK = hermite_eval_sequence(3, vals[4], grid.times[4], HALF)
    boundary = sum(
        f.b[m](grid.times[4]) * hK[m + 1] / q_factorial(m + 1, HALF) for m in range(3)
    )
    assert p - d == boundary


def test_isometry_second_moment_frozen():
    # x^2 integrand at q = 2/3, t = 5/4: (2+q) t^3 / [3] = 375/152
    ctx = QContext.exact(Fraction(2, 3))
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(2), ctx)
    assert isometry_second_moment(f, Fraction(5, 4), ctx) == Fraction(375, 152)


def test_batch_matches_single_paths():
    q = 0.5
    ctx = QContext.numeric(q)
    grid = GeometricGrid.build(q=q, t=1.0, depth=12)
    batch = simulate_batch(grid, n_paths=6, base_seed=3)
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(2), ctx)
    vals = integrate_def_batch(f, batch, ctx)
    for i in range(6):
        single = integrate_def(f, batch.path(i), ctx).value
        assert vals[i] == pytest.approx(single, rel=1e-13, abs=1e-13)


def test_tail_bound_controls_deepening():
    """|I_K - I_K'| is inside the sum of the two depth tail bounds."""
    q = 0.5
    ctx = QContext.numeric(q)
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(3), ctx)
    for seed in range(5):
        shallow = GeometricGrid.build(q=q, t=1.0, depth=10)
        deep = GeometricGrid.build(q=q, t=1.0, depth=20)
        pd = simulate_path(deep, seed=seed)
        ps = GeometricPath(grid=shallow, values=pd.values[: shallow.K + 1], seed=seed)
        i_s = integrate_def(f, ps, ctx)
        i_d = integrate_def(f, pd, ctx)
        allowance = i_s.tail_bound + i_d.tail_bound
        assert abs(i_s.value - i_d.value) <= allowance
        assert i_d.tail_bound < i_s.tail_bound


def test_tail_bound_decreases_with_depth():
    ctx = QContext.numeric(0.5)
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(2), ctx)
    bounds = [
        def_tail_bound(f, GeometricGrid.build(q=0.5, t=1.0, depth=K), ctx)
        for K in (5, 10, 20, 40)
    ]
    assert all(b < a for a, b in zip(bounds, bounds[1:]))


def test_deterministic_integral_rational():
    q = Fraction(1, 2)
    grid = GeometricGrid.build(q=q, t=Fraction(1), depth=3)
    vals = [Fraction(1), Fraction(-1, 2), Fraction(2), Fraction(0)]
    path = free_path(grid, vals)
    got = deterministic_integral(Poly([0, 1]), path, HALF)
    want = sum(grid.times[k] * (vals[k] - vals[k + 1]) for k in range(3))
    assert got == want


def test_deterministic_integral_callable_and_bound():
    ctx = QContext.numeric(0.5)
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=25)
    path = simulate_path(grid, seed=2)
    g = SampledFunction.from_callable(
        lambda s: float(np.sqrt(s)), sup_near_zero=1.0, holder=(1.0, 0.5)
    )
    got = deterministic_integral(g, path, ctx)
    assert np.isfinite(got)
    assert deterministic_tail_bound(g, grid, ctx) > 0


def test_exponential_series_matches_product():
    ctx = QContext.numeric(0.5)
    prod = stochastic_exponential(0.5, 1.0, 0.3, 0.5, ctx)
    ser = stochastic_exponential_series(0.5, 1.0, 0.3, 0.5, ctx, degree=40)
    assert ser == pytest.approx(prod, abs=1e-10)


def test_exponential_at_zero_coupling():
    ctx = QContext.numeric(0.5)
    assert stochastic_exponential(0.0, 2.5, 0.7, 1.0, ctx) == pytest.approx(2.5)


def test_exponential_scales_linearly_in_c():
    ctx = QContext.numeric(0.5)
    one = stochastic_exponential(0.4, 1.0, 0.2, 0.5, ctx)
    three = stochastic_exponential(0.4, 3.0, 0.2, 0.5, ctx)
    assert three == pytest.approx(3.0 * one, rel=1e-13)


def test_exponential_vectorised():
    ctx = QContext.numeric(0.5)
    xs = np.array([-0.5, 0.0, 0.5])
    vals = stochastic_exponential(0.5, 1.0, xs, 0.5, ctx)
    for x, v in zip(xs, vals):
        assert v == pytest.approx(stochastic_exponential(0.5, 1.0, float(x), 0.5, ctx))


def test_exponential_radius():
    assert exponential_radius(0.5, QContext.numeric(0.5)) == pytest.approx(8.0)


def test_exponential_rejects_vanishing_factor():
    # far outside the admissible region a product factor crosses zero
    ctx = QContext.numeric(0.5)
    with pytest.raises(ValueError):
        stochastic_exponential(4.0, 1.0, 0.6, 0.01, ctx)


def test_sde_residual_outside_radius_rejected():
    ctx = QContext.numeric(0.5)
    grid = GeometricGrid.build(q=0.5, t=10.0, depth=10)
    path = simulate_path(grid, seed=1)
    with pytest.raises(ValueError):
        sde_residual(0.5, 1.0, path, ctx)


def test_sde_residual_decays_with_depth():
    ctx = QContext.numeric(0.5)
    res = []
    for K in (10, 30, 60):
        grid = GeometricGrid.build(q=0.5, t=0.5, depth=K)
        path = simulate_path(grid, seed=4)
        res.append(sde_residual(0.5, 2.0, path, ctx, degree=25))
    assert res[0] > res[1] > res[2]
    assert res[2] < 1e-7


def test_result_json_shape():
    ctx = QContext.numeric(0.5)
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=8)
    path = simulate_path(grid, seed=6)
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(1), ctx)
    out = integrate_def(f, path, ctx)
    d = out.to_json_dict()
    assert set(d) == {"value", "K", "tail_bound", "seed"}
    assert d["K"] == 8


@given(
    c0=rational, c1=rational, c2=rational,
    v=st.lists(rational, min_size=5, max_size=5),
)
@settings(max_examples=40, deadline=None)
def test_integral_linear_in_integrand(c0, c1, c2, v):
    q = Fraction(1, 2)
    grid = GeometricGrid.build(q=q, t=Fraction(1), depth=4)
    path = free_path(grid, v)
    f = PolynomialIntegrand((Poly([c0]), Poly([c1]), Poly([c2])))
    g = PolynomialIntegrand((Poly([1]), Poly([0, 1]), Poly([2])))
    fg = PolynomialIntegrand(
        (Poly([c0 + 1]), Poly([c1]) + Poly([0, 1]), Poly([c2 + 2]))
    )
    lhs = integrate_def(fg, path, HALF).value
    rhs = integrate_def(f, path, HALF).value + integrate_def(g, path, HALF).value
    assert lhs == rhs

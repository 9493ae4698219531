"""Moment oracles, report plumbing, and the verification suites."""

import csv
import io
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbm.qcore import QContext
from qbm.qhermite import QPolynomial
from qbm.stochint import PolynomialIntegrand
from qbm.verify import (
    CSV_HEADER,
    MC_CHECKS,
    McEstimate,
    VerificationReport,
    kurtosis_ratio,
    mc_isometry,
    mc_moment,
    oracle_EZ2,
    oracle_EZ4,
    oracle_increment_4th,
    reports_to_csv,
    run_identity_suite,
    run_mc_suite,
    run_quadrature_suite,
)

HALF = Fraction(1, 2)

rational_q = st.fractions(
    min_value=Fraction(1, 10), max_value=Fraction(9, 10), max_denominator=10
)


def test_ez2_frozen():
    # r = 0 gives 1; r = 1, q = 1/2 gives 4/7; r = 1/2, q = 4/5 gives 5/9
    assert oracle_EZ2(0, HALF) == 1
    assert oracle_EZ2(1, HALF) == Fraction(4, 7)
    assert oracle_EZ2(2, HALF) == Fraction(16, 31)
    assert oracle_EZ2(Fraction(1, 2), Fraction(4, 5)) == Fraction(5, 9)


def test_ez4_frozen():
    assert oracle_EZ4(0, HALF) == Fraction(5, 2)
    # at r = 0 the fourth moment is 2 + q for any q
    for q in (Fraction(1, 5), Fraction(2, 3), Fraction(9, 10)):
        assert oracle_EZ4(0, q) == 2 + q


def test_ez2_rejects_negative_exponent():
    with pytest.raises(ValueError):
        oracle_EZ2(-1, HALF)
    with pytest.raises(ValueError):
        oracle_EZ4(-2, HALF)


def test_increment_4th_oracle():
    q = HALF
    s, t = Fraction(1, 2), Fraction(1)
    assert oracle_increment_4th(s, t, q) == (t - s) * ((q + 2) * t - 3 * q * s)
    assert oracle_increment_4th(0, 1, q) == 2 + q


@given(q=rational_q, r=st.integers(min_value=0, max_value=4))
@settings(max_examples=40, deadline=None)
def test_kurtosis_ratio_consistent_with_moments(q, r):
    assert kurtosis_ratio(r, q) == oracle_EZ4(r, q) / oracle_EZ2(r, q) ** 2


def test_kurtosis_ratio_moves_with_r():
    assert kurtosis_ratio(0, 0.5) != kurtosis_ratio(1, 0.5)
    assert kurtosis_ratio(0, HALF) == 2 + HALF


def test_mc_estimate_validation():
    with pytest.raises(ValueError):
        McEstimate(estimate=1.0, std_error=0.0, n_paths=10, seed=1, oracle=1.0)
    est = McEstimate(estimate=1.2, std_error=0.1, n_paths=10, seed=1, oracle=1.0)
    assert est.z == pytest.approx(2.0)


def test_report_csv_shape():
    est = McEstimate(estimate=1.2, std_error=0.1, n_paths=10, seed=1, oracle=1.0)
    rep = VerificationReport(
        name="demo", params={"q": 0.5}, passed=True, tolerance=4.0, kind="mc",
        estimate=est,
    )
    text = reports_to_csv([rep])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert rows[1][0] == "demo"
    assert json.loads(rows[1][1]) == {"q": 0.5}
    assert float(rows[1][3]) == pytest.approx(1.2)
    assert rows[1][6] == "True"


def test_report_json_roundtrip_fields():
    rep = VerificationReport(
        name="demo", params={"q": 0.5}, passed=False, tolerance=0.0, kind="exact",
        residual=0.25,
    )
    d = rep.to_json_dict()
    assert d["name"] == "demo" and d["residual"] == 0.25 and d["estimate"] is None


def test_unknown_check_rejected():
    with pytest.raises(ValueError, match="unknown check"):
        mc_moment("no-such-check", {})


def test_registry_names_stable():
    assert {
        "ez2", "ez4", "increment-4th", "cross-22", "cross-13",
        "stoch-exp-mean", "variance-horizon", "hermite-increment-2nd",
        "increment-orthogonality",
    } == set(MC_CHECKS)


def test_cross_moment_ordering_enforced():
    with pytest.raises(ValueError):
        mc_moment(
            "cross-13",
            {"q": 0.5, "t1": 0.5, "t2": 1.0, "u1": 0.25, "u2": 0.125},
            n_paths=10,
        )


def test_off_grid_time_rejected():
    with pytest.raises(ValueError, match="not on the geometric grid"):
        mc_moment("increment-4th", {"q": 0.5, "t": 1.0, "s": 0.3}, n_paths=10)


def test_mc_moment_deterministic():
    a = mc_moment("variance-horizon", {"q": 0.5, "t": 1.0}, n_paths=4000, seed=5)
    b = mc_moment("variance-horizon", {"q": 0.5, "t": 1.0}, n_paths=4000, seed=5)
    assert a.estimate.estimate == b.estimate.estimate
    assert a.estimate.std_error == b.estimate.std_error


def test_mc_isometry_small_run():
    ctx = QContext.numeric(0.5)
    f = PolynomialIntegrand.from_qpolynomial(QPolynomial.x_power(1), ctx)
    rep = mc_isometry(f, t=1.0, q=0.5, n_paths=4000, seed=8)
    assert rep.passed
    assert rep.estimate.oracle == pytest.approx(2.0 / 3.0)
    assert rep.params["truncation_bias_bound"] < 1e-4


def test_identity_suite_filter():
    reps = run_identity_suite(only={"recurrence", "kurtosis-r0"})
    assert len(reps) == 6
    assert all(r.passed and r.residual == 0.0 for r in reps)
    assert {r.name for r in reps} == {"recurrence", "kurtosis-r0"}


def test_quadrature_suite_filter():
    reps = run_quadrature_suite(only={"variance"}, ts=(1.0,), qs=(0.5,))
    assert len(reps) == 1
    assert reps[0].passed


def test_mc_suite_filter_and_threshold():
    reps = run_mc_suite(n_paths=4000, seed=3, only={"variance-horizon"})
    assert len(reps) == 3
    assert all(r.kind == "mc" for r in reps)
    # an absurdly small threshold fails even after the single rerun
    reps = run_mc_suite(n_paths=4000, seed=3, threshold=1e-6, only={"variance-horizon"})
    assert all(not r.passed and r.params.get("reran") for r in reps)

#!/usr/bin/env python3
"""
Test the explicit extremal maps against the numerical solver
"""

import math

import numpy as np
import pytest

from app.core.closed_forms import (
    ClosedFormFamily,
    alpha0_power,
    bound_power,
    bound_rho1,
    case_for_metric,
    compare_with_numeric,
    inverse_square_profile,
    power_profile,
    rho1_profile,
)
from app.core.errors import InfeasibleCase, LambdaOne, ParseError
from app.core.metric import MetricSpec


def test_bound_power_value():
    assert bound_power(1.0, 1.0, 3.0, 2.0) == pytest.approx(math.sqrt(4.0 + math.sqrt(15.0)), rel=1e-12)
    assert bound_power(1.0, 1.0, 3.0, 2.0) == pytest.approx(2.805884, abs=1e-6)


def test_bound_power_rejects_unit_exponent():
    with pytest.raises(LambdaOne):
        bound_power(1.0, 1.0, 1.0, 2.0)


def test_bound_rho1_value():
    assert bound_rho1(1.0, 1.0, 2.0) == pytest.approx(1.25)
    assert bound_rho1(1.0, 2.0, 2.0) == pytest.approx(2.125)


def test_alpha0_power():
    assert alpha0_power(1.0, 2.0, 1.25) == pytest.approx(-0.64)
    assert alpha0_power(2.0, 0.5, 3.0) == pytest.approx(-4.0)


def test_rho1_profile_at_the_bound():
    case = rho1_profile(1.0, 1.0, 2.0, 1.25)
    assert case.family == ClosedFormFamily.RHO1
    assert case.constant == pytest.approx(0.0, abs=1e-12)
    assert case.alpha_equivalent == pytest.approx(-1.0)
    assert float(case.H(1.0)) == pytest.approx(1.0)
    assert float(case.H(2.0)) == pytest.approx(1.25)
    assert case.to_dict()["mu"] == case.constant


def test_rho1_profile_rejects_small_target():
    with pytest.raises(InfeasibleCase):
        rho1_profile(1.0, 1.0, 2.0, 1.2)


@pytest.mark.parametrize("lam,r,R", [(3.0, 2.5, 2.0), (0.5, 3.0, 2.0), (2.0, 1.9, 1.25)])
def test_power_profiles_meet_boundary(lam, r, R):
    case = power_profile(1.0, 1.0, lam, r, R)
    assert float(case.H(1.0)) == pytest.approx(1.0, rel=1e-12)
    assert float(case.H(r)) == pytest.approx(R, rel=1e-10)
    t = np.linspace(1.0, r, 50)
    assert np.all(np.diff(case.H(t)) > 0)
    assert case.alpha_equivalent > alpha0_power(1.0, lam, R)


def test_power_profile_rejects_large_source():
    with pytest.raises(InfeasibleCase):
        power_profile(1.0, 1.0, 3.0, 3.0, 2.0)


def test_slopes_match_finite_differences():
    case = power_profile(1.0, 1.0, 3.0, 2.5, 2.0)
    t = np.linspace(1.1, 2.4, 7)
    h = 1e-6
    numeric = (case.H(t + h) - case.H(t - h)) / (2.0 * h)
    np.testing.assert_allclose(case.Hdot(t), numeric, rtol=1e-6)


@pytest.mark.parametrize(
    "case",
    [
        inverse_square_profile(1.0, 1.0, 1.9, 1.25),
        rho1_profile(1.0, 2.0, 2.0, 3.0),
        power_profile(1.0, 1.0, 3.0, 2.5, 2.0),
        power_profile(1.0, 1.0, 0.5, 3.0, 2.0),
    ],
    ids=["inverse-square", "rho1", "lambda3", "lambda-half"],
)
def test_closed_forms_agree_with_solver(case):
    comparison = compare_with_numeric(case)
    assert comparison.sup_gap <= 1e-6
    assert comparison.energy_gap_rel <= 1e-6
    assert comparison.alpha_gap <= 1e-6 * (1.0 + abs(case.alpha_equivalent))
    body = comparison.to_dict()
    assert body["family"] == case.family.value
    assert set(body["profile"]) >= {"t", "H", "Hdot"}


def test_case_for_metric_dispatch():
    assert case_for_metric(MetricSpec.constant(), 1.0, 1.0, 2.0, 1.5).family == ClosedFormFamily.RHO1
    assert case_for_metric(MetricSpec.power(0.0), 1.0, 1.0, 2.0, 1.5).family == ClosedFormFamily.RHO1
    assert case_for_metric(MetricSpec.power(2.0), 1.0, 1.0, 1.5, 1.25).family == ClosedFormFamily.RHO_INV_SQUARE
    assert case_for_metric(MetricSpec.power(3.0), 1.0, 1.0, 2.0, 2.0).family == ClosedFormFamily.RHO_POWER


def test_case_for_metric_rejects_other_metrics(exp_table_path):
    with pytest.raises(LambdaOne):
        case_for_metric(MetricSpec.power(1.0), 1.0, 1.0, 2.0, 2.0)
    with pytest.raises(ParseError):
        case_for_metric(MetricSpec.parse(f"table:{exp_table_path}"), 1.0, 1.0, 1.5, 1.5)


def test_power_profile_at_two_is_the_inverse_square_map():
    generic = power_profile(1.0, 1.5, 2.0, 1.9, 1.25)
    special = inverse_square_profile(1.0, 1.5, 1.9, 1.25)
    t = np.linspace(1.0, 1.9, 33)
    np.testing.assert_array_equal(generic.H(t), special.H(t))
    assert generic.alpha_equivalent == special.alpha_equivalent


def _random_case(rng, family):
    a, b = float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))
    R = float(rng.uniform(1.1, 3.0))
    if family == "rho1":
        r_max = math.exp((a / b) * math.acosh(R))
    else:
        r_max = bound_power(a, b, family, R)
    r = 1.0 + float(rng.uniform(0.2, 0.9)) * (min(r_max, 6.0) - 1.0)
    if family == "rho1":
        return rho1_profile(a, b, r, R)
    if family == 2.0:
        return inverse_square_profile(a, b, r, R)
    return power_profile(a, b, family, r, R)


@pytest.mark.slow
@pytest.mark.parametrize("family", ["rho1", 2.0, 3.0, 0.5])
def test_closed_forms_agree_with_solver_on_random_instances(family):
    rng = np.random.default_rng(10)
    for _ in range(10):
        case = _random_case(rng, family)
        comparison = compare_with_numeric(case)
        assert comparison.sup_gap <= 1e-5, case.to_dict()
        assert comparison.energy_gap_rel <= 1e-6, case.to_dict()

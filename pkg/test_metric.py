#!/usr/bin/env python3
"""
Test radial metrics, weights and the weight minimizer
"""

import math

import numpy as np
import pytest

from app.core.errors import NonPositive, OutOfDomain, ParseError
from app.core.metric import (
    AnnulusPair,
    MetricKind,
    MetricSpec,
    Weights,
    breakpoints,
    eval_rho,
    eval_rho_prime,
    minimize_weight,
    weight,
    weight_gap,
    weight_increment,
)


def test_parse_grammar():
    assert MetricSpec.parse("const").kind == MetricKind.CONSTANT
    power = MetricSpec.parse("power:2.5")
    assert power.kind == MetricKind.POWER
    assert power.lam == 2.5
    assert power.to_text() == "power:2.5"


@pytest.mark.parametrize("text", ["", "cosh", "power:", "power:abc", "const:1", "table:"])
def test_parse_rejects_unknown_specs(text):
    with pytest.raises(ParseError):
        MetricSpec.parse(text)


def test_table_from_csv(exp_table_path):
    m = MetricSpec.parse(f"table:{exp_table_path}")
    assert m.kind == MetricKind.TABULATED
    assert m.upper_limit == 5.0
    # log-linear interpolation reproduces the exponential at the knots
    assert eval_rho(m, 3.0) == pytest.approx(math.exp(-0.6), rel=1e-14)


def test_table_csv_errors(tmp_path):
    missing = tmp_path / "missing.csv"
    with pytest.raises(ParseError):
        MetricSpec.from_csv(str(missing))

    wrong_columns = tmp_path / "wrong.csv"
    wrong_columns.write_text("x,y\n1,1\n2,1\n3,1\n4,1\n")
    with pytest.raises(ParseError):
        MetricSpec.from_csv(str(wrong_columns))

    zero_rho = tmp_path / "zero.csv"
    zero_rho.write_text("s,rho\n1,1\n2,0.5\n3,0\n4,0.25\n")
    with pytest.raises(NonPositive):
        MetricSpec.from_csv(str(zero_rho))


def test_table_validation():
    with pytest.raises(ParseError):
        MetricSpec.tabulated([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    with pytest.raises(ParseError):
        MetricSpec.tabulated([1.0, 3.0, 2.0, 4.0], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(OutOfDomain):
        MetricSpec.tabulated([0.5, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0])


def test_eval_rho_builtin_kinds():
    assert eval_rho(MetricSpec.constant(), 3.0) == 1.0
    assert eval_rho(MetricSpec.power(2.0), 2.0) == pytest.approx(0.25)
    values = eval_rho(MetricSpec.power(0.5), np.array([1.0, 4.0]))
    np.testing.assert_allclose(values, [1.0, 0.5])


def test_eval_rho_prime_power():
    m = MetricSpec.power(3.0)
    s = np.array([1.0, 1.5, 2.0])
    np.testing.assert_allclose(eval_rho_prime(m, s), -3.0 * s ** -4.0, rtol=1e-14)
    assert eval_rho_prime(MetricSpec.constant(), 2.0) == 0.0


def test_table_of_power_law_is_exact_between_knots():
    s = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    m = MetricSpec.tabulated(s, s ** -2.0)
    assert eval_rho(m, 2.5) == pytest.approx(2.5 ** -2.0, rel=1e-12)
    assert eval_rho_prime(m, 2.5) == pytest.approx(-2.0 * 2.5 ** -3.0, rel=1e-6)


def test_table_derivative_goes_one_sided_at_edges():
    s = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    m = MetricSpec.tabulated(s, s ** -2.0)
    value, info = eval_rho_prime(m, np.array([1.0, 3.0, 5.0]), with_info=True)
    assert info["one_sided"] is True
    assert info["one_sided_count"] == 2
    np.testing.assert_allclose(value, -2.0 * np.array([1.0, 3.0, 5.0]) ** -3.0, rtol=1e-4)


def test_table_rejects_points_outside_domain():
    m = MetricSpec.tabulated([1.0, 2.0, 3.0, 4.0], [1.0, 0.9, 0.8, 0.7])
    with pytest.raises(OutOfDomain):
        eval_rho(m, 4.5)
    # overshoot within the domain slack is clipped
    assert eval_rho(m, 4.0 * (1.0 + 1e-13)) == pytest.approx(0.7)


def test_breakpoints_only_for_tables(dip_table):
    assert breakpoints(MetricSpec.power(2.0), 1.0, 3.0) == ()
    assert breakpoints(dip_table, 1.0, 2.2) == (1.5, 2.0)


def test_weight_definition():
    m = MetricSpec.power(2.0)
    assert weight(m, Weights(1.0, 3.0), 2.0) == pytest.approx(9.0 * 4.0 / 16.0)


@pytest.mark.parametrize(
    "metric,b,R,s_star,w_min",
    [
        (MetricSpec.constant(), 1.0, 2.0, 1.0, 1.0),
        (MetricSpec.power(2.0), 1.0, 1.25, 1.25, 0.64),
        (MetricSpec.power(0.5), 2.0, 3.0, 1.0, 4.0),
        (MetricSpec.power(3.0), 1.0, 2.0, 2.0, 1.0 / 16.0),
    ],
)
def test_minimize_weight_endpoints(metric, b, R, s_star, w_min):
    s, w = minimize_weight(metric, Weights(1.0, b), R)
    assert s == pytest.approx(s_star, rel=1e-12)
    assert w == pytest.approx(w_min, rel=1e-12)


def test_minimize_weight_flat_picks_smallest_s():
    s, w = minimize_weight(MetricSpec.power(1.0), Weights(1.0, 2.0), 3.0)
    assert s == 1.0
    assert w == pytest.approx(4.0)


def test_minimize_weight_interior_knot(dip_table):
    s, w = minimize_weight(dip_table, Weights(1.0, 1.0), 3.0)
    assert s == pytest.approx(1.5, rel=1e-12)
    assert w == pytest.approx(0.5625, rel=1e-12)


@pytest.mark.parametrize(
    "metric,b,R",
    [
        (MetricSpec.constant(), 1.0, 2.0),
        (MetricSpec.power(2.0), 1.0, 1.25),
        (MetricSpec.power(3.0), 0.7, 4.0),
        (MetricSpec.power(0.5), 2.0, 3.0),
        (MetricSpec.tabulated([1.0, 1.5, 2.0, 2.5, 3.0], [1.0, 0.5, 0.4, 0.5, 0.6]), 1.0, 3.0),
    ],
)
def test_minimize_weight_is_below_random_samples(metric, b, R):
    weights = Weights(1.0, b)
    _, w_min = minimize_weight(metric, weights, R)
    s = np.random.default_rng(2048).uniform(1.0, R, 2048)
    assert np.all(w_min <= weight(metric, weights, s) * (1.0 + 1e-9))


def test_parameter_validation():
    with pytest.raises(NonPositive):
        Weights(0.0, 1.0)
    with pytest.raises(NonPositive):
        Weights(1.0, math.inf)
    with pytest.raises(OutOfDomain):
        AnnulusPair(1.0, 2.0)
    with pytest.raises(OutOfDomain):
        minimize_weight(MetricSpec.constant(), Weights(1.0, 1.0), 1.0)


@pytest.mark.parametrize(
    "metric,s,d",
    [
        (MetricSpec.constant(), 1.3, 0.2),
        (MetricSpec.power(2.0), 1.25, -0.1),
        (MetricSpec.power(0.5), 2.0, 0.5),
        (MetricSpec.tabulated([1.0, 1.5, 2.0, 2.5, 3.0], [1.0, 0.5, 0.4, 0.5, 0.6]), 1.5, 0.3),
        (MetricSpec.tabulated([1.0, 1.5, 2.0, 2.5, 3.0], [1.0, 0.5, 0.4, 0.5, 0.6]), 1.5, 1.2),
    ],
)
def test_weight_increment_matches_direct_difference(metric, s, d):
    weights = Weights(1.0, 1.5)
    direct = weight(metric, weights, s + d) - weight(metric, weights, s)
    assert weight_increment(metric, weights, s, d) == pytest.approx(direct, rel=1e-12)


def test_weight_increment_resolves_offsets_below_rounding():
    weights = Weights(1.0, 1.0)
    # 1 + 1e-20 rounds to 1, the increment must not
    assert weight_increment(MetricSpec.constant(), weights, 1.0, 1e-20) == pytest.approx(2e-20, rel=1e-12)
    # w = s^-2 decreases, so stepping left of s = 1.25 raises it by 2 s^-3 |d|
    rising = weight_increment(MetricSpec.power(2.0), weights, 1.25, -1e-18)
    assert rising == pytest.approx(2.0 * 1.25 ** -3 * 1e-18, rel=1e-9)


def test_weight_increment_follows_the_table_cell(dip_table):
    weights = Weights(1.0, 1.0)
    w_knot = weight(dip_table, weights, 1.5)
    right_slope = math.log(0.4 / 0.5) / math.log(2.0 / 1.5)
    left_slope = math.log(0.5 / 1.0) / math.log(1.5)
    right = weight_increment(dip_table, weights, 1.5, 1e-15)
    left = weight_increment(dip_table, weights, 1.5, -1e-15)
    assert right == pytest.approx(2.0 * w_knot * (1.0 + right_slope) * 1e-15 / 1.5, rel=1e-9)
    assert left == pytest.approx(-2.0 * w_knot * (1.0 + left_slope) * 1e-15 / 1.5, rel=1e-9)
    assert right > 0 and left > 0


def test_weight_gap_vanishes_at_the_minimizer(dip_table):
    weights = Weights(1.0, 1.0)
    s_star, w_min = minimize_weight(dip_table, weights, 3.0)
    assert 0.0 <= weight_gap(dip_table, weights, s_star, 0.0, w_min) <= 1e-15 * w_min
    gaps = weight_gap(dip_table, weights, np.array([1.2, 2.6]), np.zeros(2), w_min)
    np.testing.assert_allclose(gaps, weight(dip_table, weights, np.array([1.2, 2.6])) - w_min, rtol=1e-14)

#!/usr/bin/env python3
"""
Test Euler-Lagrange residuals, the first integral, duality gaps and perturbations
"""

import math

import numpy as np
import pytest

from app.core.energy import radial_energy
from app.core.errors import DegenerateGrid
from app.core.extremal import profile_from_function, solve
from app.core.metric import AnnulusPair, MetricSpec, Weights
from app.core.nitsche import nitsche_bound
from app.core.variation import (
    RADIAL,
    ROTATION,
    PerturbationResult,
    closed_form_gap,
    duality_check,
    el_residual,
    first_integral_deviation,
    first_variation_ratios,
    linear_candidate,
    perturbation_test,
    verify,
)


def test_el_residual_of_identity(identity_case, identity_solution):
    m, weights, _ = identity_case
    assert el_residual(m, weights, identity_solution.profile) <= 1e-5


def test_el_residual_flags_non_extremal_profile():
    m, weights = MetricSpec.constant(), Weights(1.0, 1.0)
    linear = linear_candidate(AnnulusPair(2.0, 1.5), n=256)
    assert el_residual(m, weights, linear) > 1e-2


def test_el_residual_needs_enough_samples():
    p = profile_from_function(lambda t: t, lambda t: np.ones_like(t), 2.0, n=32)
    with pytest.raises(DegenerateGrid):
        el_residual(MetricSpec.constant(), Weights(1.0, 1.0), p)


@pytest.mark.parametrize(
    "metric,a,b,r,R",
    [
        (MetricSpec.constant(), 1.0, 1.0, 2.0, 1.5),
        (MetricSpec.constant(), 1.0, 2.0, 1.5, 3.0),
        (MetricSpec.power(2.0), 1.0, 1.0, 1.5, 1.25),
        (MetricSpec.power(0.5), 2.0, 1.0, 3.0, 1.5),
    ],
)
def test_solved_profiles_satisfy_el_and_first_integral(metric, a, b, r, R):
    weights = Weights(a, b)
    sol = solve(metric, weights, AnnulusPair(r, R))
    assert el_residual(metric, weights, sol.profile) <= 1e-5
    assert first_integral_deviation(metric, weights, sol.profile, sol.alpha) <= 1e-6


def test_first_integral_of_identity(identity_case, identity_solution):
    m, weights, _ = identity_case
    assert first_integral_deviation(m, weights, identity_solution.profile, identity_solution.alpha) <= 1e-12


def test_duality_gaps(nitsche_solution):
    sol = nitsche_solution
    assert duality_check(sol.metric, sol.weights, sol) <= 1e-5
    assert closed_form_gap(sol.metric, sol.weights, sol) <= 1e-5


def test_linear_candidate_costs_more_energy(nitsche_solution):
    sol = nitsche_solution
    linear = linear_candidate(sol.annulus)
    assert linear.H_samples[0] == 1.0
    assert linear.H_samples[-1] == pytest.approx(1.5)
    assert radial_energy(sol.metric, sol.weights, linear).total > sol.energy


def test_radial_bump_on_identity(identity_case, identity_solution):
    m, weights, _ = identity_case
    (result,) = perturbation_test(m, weights, identity_solution, families=(RADIAL,), amplitudes=(0.01,),
                                  grid_size=512)
    assert result.accepted
    assert result.effective_amplitude == 0.01
    assert result.delta_energy > 0
    assert result.delta_energy_negative > 0
    assert abs(result.fd_derivative) <= 1e-4 * identity_solution.energy


def test_rotation_leaves_energy_unchanged(nitsche_solution):
    sol = nitsche_solution
    results = perturbation_test(sol.metric, sol.weights, sol, families=(ROTATION,), grid_size=64)
    assert len(results) == 3
    for item in results:
        assert abs(item.delta_energy) <= 1e-10 * sol.energy
        assert abs(item.delta_energy_negative) <= 1e-10 * sol.energy


def test_random_family_is_reproducible(nitsche_solution):
    sol = nitsche_solution
    first = perturbation_test(sol.metric, sol.weights, sol, families=("random",), amplitudes=(0.005,),
                              grid_size=64, seed=11)
    second = perturbation_test(sol.metric, sol.weights, sol, families=("random",), amplitudes=(0.005,),
                               grid_size=64, seed=11)
    assert first[0].delta_energy == second[0].delta_energy


def test_verify_identity(identity_case, identity_solution):
    m, weights, _ = identity_case
    report = verify(m, weights, identity_solution, grid_size=128)
    assert report.checks["el_residual"].passed
    assert report.checks["first_integral"].passed
    assert report.checks["duality_gap"].passed
    assert report.checks["rotation"].passed
    assert report.checks["perturbation_min"].passed
    body = report.to_dict()
    assert body["passed"] == report.passed
    assert set(body["checks"]) >= {"el_residual", "first_integral", "duality_gap", "perturbation_min",
                                   "first_variation", "rotation"}


@pytest.mark.slow
def test_verify_inverse_square_instance_passes():
    m, weights = MetricSpec.power(2.0), Weights(1.0, 1.0)
    sol = solve(m, weights, AnnulusPair(1.9, 1.25))
    report = verify(m, weights, sol)
    failed = [name for name, check in report.checks.items() if not check.passed]
    assert failed == []
    assert math.isfinite(report.energy)


def _random_instances(rng, metrics, count):
    instances = []
    while len(instances) < count:
        m = metrics[len(instances) % len(metrics)]
        weights = Weights(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
        R = float(rng.uniform(1.1, 3.0))
        r_max = nitsche_bound(m, weights, R)
        r_cap = min(r_max, 6.0)
        if r_cap <= 1.05:
            continue
        r = 1.0 + float(rng.uniform(0.2, 0.9)) * (r_cap - 1.0)
        instances.append((m, weights, AnnulusPair(r, R)))
    return instances


@pytest.mark.slow
def test_random_instances_satisfy_el_and_first_integral():
    metrics = [MetricSpec.constant(), MetricSpec.power(2.0), MetricSpec.power(3.0), MetricSpec.power(0.5)]
    for m, weights, ann in _random_instances(np.random.default_rng(2024), metrics, 40):
        sol = solve(m, weights, ann)
        assert el_residual(m, weights, sol.profile) <= 1e-5, (m, weights, ann)
        assert first_integral_deviation(m, weights, sol.profile, sol.alpha) <= 1e-6, (m, weights, ann)


@pytest.mark.slow
def test_first_integral_holds_on_random_instances(exp_table_path):
    metrics = [MetricSpec.constant(), MetricSpec.power(2.0), MetricSpec.power(0.5),
               MetricSpec.from_csv(exp_table_path)]
    for m, weights, ann in _random_instances(np.random.default_rng(20), metrics, 20):
        sol = solve(m, weights, ann)
        assert first_integral_deviation(m, weights, sol.profile, sol.alpha) <= 1e-6, (m, weights, ann)


def test_critical_instance_follows_the_explicit_map():
    m, weights = MetricSpec.constant(), Weights(1.0, 1.0)
    sol = solve(m, weights, AnnulusPair(2.0, 1.25))
    t = sol.profile.t_samples
    expected = (1.0 + t * t) / (2.0 * t)
    assert np.max(np.abs(sol.profile.H_samples - expected)) <= 1e-5
    assert el_residual(m, weights, sol.profile) <= 1e-5
    assert duality_check(m, weights, sol) <= 1e-5


def test_el_residual_flags_corrupted_profile(nitsche_solution):
    sol = nitsche_solution
    base, r = sol.profile, sol.profile.r
    k = math.pi / (r - 1.0)

    def H(t):
        return np.interp(t, base.t_samples, base.H_samples) + 0.01 * np.sin(k * (t - 1.0))

    def Hdot(t):
        return np.interp(t, base.t_samples, base.Hdot_samples) + 0.01 * k * np.cos(k * (t - 1.0))

    corrupted = profile_from_function(
        H,
        Hdot,
        r,
        n=512,
        R=base.R,
    )
    assert el_residual(sol.metric, sol.weights, corrupted) > 1e-3


def _result(family, eps, fd):
    return PerturbationResult(family=family, amplitude=eps, effective_amplitude=eps,
                              delta_energy=0.0, delta_energy_negative=0.0, fd_derivative=fd)


def test_first_variation_ratios_cancel_the_quadratic_term():
    # fd(eps) = 0.5 eps^2 has no first-order part
    results = [_result(RADIAL, 0.01, 0.5e-4), _result(RADIAL, 0.02, 2e-4), _result(ROTATION, 0.01, 1.0)]
    ratios = first_variation_ratios(results, energy=2.0)
    assert len(ratios) == 2
    assert max(ratios) == pytest.approx(0.0, abs=1e-15)


def test_first_variation_ratios_without_a_partner_amplitude():
    ratios = first_variation_ratios([_result(RADIAL, 0.01, 3e-5)], energy=2.0)
    assert ratios == [pytest.approx(3e-5 / 0.02)]


@pytest.mark.slow
@pytest.mark.parametrize(
    "metric,a,b,r,R",
    [
        (MetricSpec.constant(), 1.0, 1.0, 2.0, 1.5),
        (MetricSpec.constant(), 1.0, 2.0, 1.5, 3.0),
        (MetricSpec.power(2.0), 1.0, 1.0, 1.9, 1.25),
        (MetricSpec.power(3.0), 1.0, 1.0, 2.5, 2.0),
        (MetricSpec.power(0.5), 2.0, 1.0, 3.0, 1.5),
    ],
)
def test_solutions_are_local_minima(metric, a, b, r, R):
    weights = Weights(a, b)
    sol = solve(metric, weights, AnnulusPair(r, R))
    report = verify(metric, weights, sol, grid_size=128, seed=7)
    for name in ("perturbation_min", "rotation", "first_variation"):
        assert report.checks[name].passed, (name, report.checks[name].to_dict())
    if "quadratic_scaling" in report.checks:
        assert report.checks["quadratic_scaling"].passed

#!/usr/bin/env python3
"""
Test radial and grid energies, lifting and distortion
"""

import math

import numpy as np
import pytest

from app.core.energy import (
    PolarGridMap,
    distortion_closed_form,
    grid_energy,
    lift_profile,
    radial_distortion,
    radial_energy,
)
from app.core.errors import DegenerateGrid, NonMonotone, OutOfDomain, SingularIntegrand
from app.core.extremal import invert_profile, profile_from_function
from app.core.metric import MetricSpec, Weights


def test_identity_energy_split(identity_case, identity_solution):
    m, weights, _ = identity_case
    breakdown = radial_energy(m, weights, identity_solution.profile)
    assert breakdown.normal_part == pytest.approx(8.0 * math.pi * math.log(5.0), rel=1e-9)
    assert breakdown.tangential_part == pytest.approx(2.0 * math.pi * math.log(5.0), rel=1e-9)
    assert breakdown.total == pytest.approx(breakdown.normal_part + breakdown.tangential_part)
    assert set(breakdown.to_dict()) == {"total", "normal", "tangential"}


def test_grid_energy_of_lifted_identity(identity_case, identity_solution):
    m, weights, _ = identity_case
    lifted = lift_profile(identity_solution.profile, 256, 64)
    assert lifted.values.shape == (256, 64)
    assert lifted.r == 5.0
    energy = grid_energy(m, weights, lifted).total
    assert energy == pytest.approx(identity_solution.energy, rel=1e-3)


def test_grid_energy_is_rotation_invariant(nitsche_solution):
    m, weights = nitsche_solution.metric, nitsche_solution.weights
    base = grid_energy(m, weights, lift_profile(nitsche_solution.profile, 128, 64)).total
    rotated = grid_energy(m, weights, lift_profile(nitsche_solution.profile, 128, 64, beta=0.3)).total
    assert abs(rotated - base) <= 1e-10 * base


def test_grid_energy_sees_angular_dependence():
    m, weights = MetricSpec.constant(), Weights(1.0, 1.0)
    t = np.linspace(1.0, 2.0, 64)
    theta = 2.0 * math.pi * np.arange(32) / 32
    z = t[:, None] * np.exp(1j * theta)[None, :]
    bump = np.sin(math.pi * (t - 1.0))[:, None] * np.exp(2j * theta)[None, :]
    plain = grid_energy(m, weights, PolarGridMap(t, theta, z, R=2.0)).total
    perturbed = grid_energy(m, weights, PolarGridMap(t, theta, z + 0.05 * bump, R=2.0)).total
    assert perturbed > plain


def test_polar_grid_validation():
    t = np.linspace(1.0, 2.0, 16)
    theta = 2.0 * math.pi * np.arange(16) / 16
    z = t[:, None] * np.exp(1j * theta)[None, :]
    with pytest.raises(DegenerateGrid):
        PolarGridMap(t[:8], theta, z[:8], R=2.0)
    with pytest.raises(DegenerateGrid):
        PolarGridMap(t, theta ** 1.5, z, R=2.0)
    with pytest.raises(OutOfDomain):
        PolarGridMap(t, theta, 1.1 * z, R=2.0)


def test_distortion_of_identity_inverse(identity_case, identity_solution):
    m, weights, _ = identity_case
    inverse = invert_profile(identity_solution.profile)
    distortion = radial_distortion(m, weights, inverse)
    assert distortion == pytest.approx(10.0 * math.pi * math.log(5.0), rel=1e-9)


def test_distortion_closed_form_identity(identity_case):
    m, weights, ann = identity_case
    assert distortion_closed_form(m, weights, 3.0, ann.R) == pytest.approx(10.0 * math.pi * math.log(5.0), rel=1e-10)


def test_energy_distortion_duality(nitsche_solution):
    sol = nitsche_solution
    energy = radial_energy(sol.metric, sol.weights, sol.profile).total
    distortion = radial_distortion(sol.metric, sol.weights, invert_profile(sol.profile))
    assert distortion == pytest.approx(energy, rel=1e-6)
    assert sol.distortion == pytest.approx(energy, rel=1e-6)


def test_distortion_closed_form_rejects_alpha_below_alpha0():
    with pytest.raises(SingularIntegrand):
        distortion_closed_form(MetricSpec.constant(), Weights(1.0, 1.0), -1.5, 2.0)


def test_radial_distortion_needs_increasing_inverse():
    p = profile_from_function(lambda t: t, lambda t: np.ones_like(t), 2.0, n=32)
    inverse = invert_profile(p)
    object.__setattr__(inverse, "Hdot_samples", np.zeros_like(inverse.Hdot_samples))
    with pytest.raises(NonMonotone):
        radial_distortion(MetricSpec.constant(), Weights(1.0, 1.0), inverse)


@pytest.mark.parametrize("beta", [0.1, 1.0, math.pi])
def test_grid_energy_rotation_within_roundoff(nitsche_solution, beta):
    m, weights = nitsche_solution.metric, nitsche_solution.weights
    base = grid_energy(m, weights, lift_profile(nitsche_solution.profile, 128, 64)).total
    rotated = grid_energy(m, weights, lift_profile(nitsche_solution.profile, 128, 64, beta=beta)).total
    assert abs(rotated - base) <= 1e-12 * base


def test_grid_energy_converges_at_second_order(nitsche_solution):
    m, weights, p = nitsche_solution.metric, nitsche_solution.weights, nitsche_solution.profile
    exact = nitsche_solution.energy
    coarse = abs(grid_energy(m, weights, lift_profile(p, 128, 64)).total - exact)
    fine = abs(grid_energy(m, weights, lift_profile(p, 512, 64)).total - exact)
    assert math.log(coarse / fine) / math.log(4.0) >= 1.8

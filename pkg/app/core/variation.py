"""
Minimality evidence for a solved instance.

Checks run against a solved extremal:
    - Euler-Lagrange residual of the radial equation in x = log t
    - conservation of (a^2 t^2 H'^2 - b^2 H^2) rho(H)^2 = alpha
    - energy / distortion duality
    - grid-energy response to boundary-vanishing perturbations
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.config import settings
from app.core.energy import (
    PolarGridMap,
    distortion_closed_form,
    grid_energy,
    lift_profile,
    radial_distortion,
    radial_energy,
)
from app.core.errors import DegenerateGrid, PerturbationLeavesAnnulus
from app.core.extremal import ExtremalSolution, RadialProfile, eval_H, invert_profile, profile_from_function
from app.core.metric import AnnulusPair, MetricSpec, Weights, eval_rho, eval_rho_prime

logger = logging.getLogger(__name__)

RADIAL = "radial"
ANGULAR_1 = "angular_1"
ANGULAR_2 = "angular_2"
RANDOM = "random"
ROTATION = "rotation"
DEFAULT_FAMILIES = (RADIAL, ANGULAR_1, ANGULAR_2, RANDOM, ROTATION)

_MIN_EL_SAMPLES = 64
_EXIT_TOLERANCE = 1e-12
_ROUNDOFF = 8.0 * np.finfo(float).eps
_MAX_HALVINGS = 20
_RANDOM_MODES = 3


@dataclass
class PerturbationResult:
    """Energy response of one perturbation family at one amplitude"""
    family: str
    amplitude: float
    effective_amplitude: float
    delta_energy: float
    delta_energy_negative: float
    fd_derivative: float
    accepted: bool = True
    clamped: bool = False
    error: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "effective_amplitude": self.effective_amplitude,
            "delta_energy": self.delta_energy,
            "delta_energy_negative": self.delta_energy_negative,
            "fd_derivative": self.fd_derivative,
            "accepted": self.accepted,
            "clamped": self.clamped,
            "error": self.error,
        }


@dataclass
class CheckOutcome:
    value: float
    threshold: float
    passed: bool
    comparison: str = "<="

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "threshold": self.threshold,
            "comparison": self.comparison,
            "passed": self.passed,
        }


@dataclass
class VerificationReport:
    """Residuals, duality gaps and perturbation outcomes for one instance"""
    el_residual_sup: float
    first_integral_dev: float
    duality_gap_rel: float
    closed_form_gap_rel: float
    fd_first_variation: float
    energy: float
    perturbation_results: List[PerturbationResult] = field(default_factory=list)
    checks: Dict[str, CheckOutcome] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "passed": self.passed,
            "el_residual_sup": self.el_residual_sup,
            "first_integral_dev": self.first_integral_dev,
            "duality_gap_rel": self.duality_gap_rel,
            "closed_form_gap_rel": self.closed_form_gap_rel,
            "fd_first_variation": self.fd_first_variation,
            "energy": self.energy,
            "checks": {name: check.to_dict() for name, check in self.checks.items()},
            "perturbation_results": [item.to_dict() for item in self.perturbation_results],
        }


def el_residual(m: MetricSpec, weights: Weights, p: RadialProfile) -> float:
    """
    sup over interior points of |LHS - RHS| / (1 + |LHS| + |RHS|) for

        2 b^2 y - 2 a^2 y'' = (2 a^2 y'^2 - 2 b^2 y^2) rho'(y) / rho(y)

    with y(x) = H(e^x) resampled on a uniform x-grid. Derivatives use the
    fourth-order five-point central stencils, so the two points next to
    each end are skipped.
    """
    n = len(p)
    if n < _MIN_EL_SAMPLES:
        raise DegenerateGrid(f"residual needs at least {_MIN_EL_SAMPLES} samples", {"n": n})

    x = np.linspace(0.0, math.log(p.r), n)
    h = x[1] - x[0]
    t = np.exp(x)
    t[0], t[-1] = 1.0, p.r
    y, _ = eval_H(p, t)

    y_mid = y[2:-2]
    y1 = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    y2 = (-y[:-4] + 16.0 * y[1:-3] - 30.0 * y_mid + 16.0 * y[3:-1] - y[4:]) / (12.0 * h * h)
    log_slope = np.asarray(eval_rho_prime(m, y_mid)) / np.asarray(eval_rho(m, y_mid))

    a2, b2 = weights.a ** 2, weights.b ** 2
    lhs = 2.0 * b2 * y_mid - 2.0 * a2 * y2
    rhs = (2.0 * a2 * y1 * y1 - 2.0 * b2 * y_mid * y_mid) * log_slope
    return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))))


def first_integral_deviation(m: MetricSpec, weights: Weights, p: RadialProfile, alpha: float) -> float:
    """max_i |C(t_i) - alpha| / (1 + |alpha|) with C = (a^2 t^2 H'^2 - b^2 H^2) rho(H)^2"""
    t, H, Hdot = p.t_samples, p.H_samples, p.Hdot_samples
    rho2 = np.asarray(eval_rho(m, H)) ** 2
    conserved = (weights.a ** 2 * t * t * Hdot * Hdot - weights.b ** 2 * H * H) * rho2
    return float(np.max(np.abs(conserved - alpha)) / (1.0 + abs(alpha)))


def _relative_gap(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    return abs(x - y) / scale if scale > 0 else 0.0


def duality_check(m: MetricSpec, weights: Weights, sol: ExtremalSolution) -> float:
    """|E[h] - K[h^{-1}]| / max(E, K) on the sampled profile and its inverse"""
    energy = radial_energy(m, weights, sol.profile).total
    distortion = radial_distortion(m, weights, invert_profile(sol.profile))
    gap = _relative_gap(energy, distortion)
    logger.debug(f"duality: E={energy:.15g} K={distortion:.15g} gap={gap:.3g}")
    return gap


def closed_form_gap(m: MetricSpec, weights: Weights, sol: ExtremalSolution) -> float:
    """Relative gap between E[h] and the alpha-only distortion formula"""
    energy = radial_energy(m, weights, sol.profile).total
    closed = distortion_closed_form(m, weights, sol.alpha, sol.annulus.R)
    return _relative_gap(energy, closed)


def linear_candidate(ann: AnnulusPair, n: Optional[int] = None) -> RadialProfile:
    """H(t) = 1 + (R - 1)(t - 1)/(r - 1); admissible but not extremal in general"""
    slope = (ann.R - 1.0) / (ann.r - 1.0)
    return profile_from_function(
        lambda t: 1.0 + slope * (t - 1.0),
        lambda t: np.full_like(t, slope),
        ann.r,
        n=n,
        R=ann.R,
    )


def _bump(t: np.ndarray, r: float, mode: int = 1) -> np.ndarray:
    values = np.sin(mode * math.pi * (t - 1.0) / (r - 1.0))
    values[0] = values[-1] = 0.0
    return values


def _direction(family: str, base: PolarGridMap, seed: int) -> np.ndarray:
    t, theta = base.t_grid, base.theta_grid
    if family == RADIAL:
        return _bump(t, base.r)[:, None] * np.exp(1j * theta)[None, :]
    if family == ANGULAR_1:
        return _bump(t, base.r)[:, None] * np.exp(2j * theta)[None, :]
    if family == ANGULAR_2:
        return _bump(t, base.r)[:, None] * np.exp(3j * theta)[None, :]
    if family == RANDOM:
        rng = np.random.default_rng(seed)
        field_ = np.zeros((t.size, theta.size), dtype=complex)
        for radial_mode in (1, 2):
            for k in range(-_RANDOM_MODES, _RANDOM_MODES + 1):
                c = complex(rng.normal(), rng.normal())
                field_ += c * _bump(t, base.r, radial_mode)[:, None] * np.exp(1j * k * theta)[None, :]
        return field_ / np.abs(field_).max()
    raise ValueError(f"unknown perturbation family: {family}")


def _admissible(values: np.ndarray, R: float) -> Optional[np.ndarray]:
    """values clamped into 1 <= |w| <= R, or None when they leave it by more than the tolerance"""
    modulus = np.abs(values)
    excess = max(1.0 - modulus.min(), modulus.max() - R, 0.0)
    if excess > _EXIT_TOLERANCE * R:
        return None
    if excess <= _ROUNDOFF * R:
        return values
    clipped = np.clip(modulus, 1.0, R)
    return values * (clipped / np.where(modulus > 0, modulus, 1.0))


def _perturbed(base: PolarGridMap, values: np.ndarray) -> PolarGridMap:
    return PolarGridMap(base.t_grid, base.theta_grid, values, R=base.R)


class _GridPair:
    """
    The lifted extremal on an n-point t-grid and on the halved spacing
    (2n - 1 points). Grid energies are Richardson-extrapolated over the
    pair, which removes the O(dt^2) error of the trapezoid and difference
    scheme.
    """

    def __init__(self, m: MetricSpec, weights: Weights, profile: RadialProfile, n: int):
        self.m = m
        self.weights = weights
        self.profile = profile
        self.n = n
        self.coarse = lift_profile(profile, n, n)
        self.fine = lift_profile(profile, 2 * n - 1, n)
        self.e0 = self.energy(self.coarse.values, self.fine.values)

    def energy(self, coarse: np.ndarray, fine: np.ndarray) -> float:
        e_coarse = grid_energy(self.m, self.weights, _perturbed(self.coarse, coarse)).total
        e_fine = grid_energy(self.m, self.weights, _perturbed(self.fine, fine)).total
        return (4.0 * e_fine - e_coarse) / 3.0

    def rotated(self, beta: float) -> float:
        coarse = lift_profile(self.profile, self.n, self.n, beta=beta)
        fine = lift_profile(self.profile, 2 * self.n - 1, self.n, beta=beta)
        return self.energy(coarse.values, fine.values) - self.e0


def perturbation_test(
    m: MetricSpec,
    weights: Weights,
    sol: ExtremalSolution,
    families: Sequence[str] = DEFAULT_FAMILIES,
    amplitudes: Optional[Sequence[float]] = None,
    grid_size: Optional[int] = None,
    seed: Optional[int] = None,
) -> List[PerturbationResult]:
    """
    Delta E(+-eps) = E(h* +- eps phi) - E(h*) on a polar grid for each family
    and amplitude, with the central difference (Delta E(eps) - Delta E(-eps)) / (2 eps).

    phi vanishes on both boundary circles. The rotation family rotates h*
    by the angle eps instead. Amplitudes whose perturbed map leaves the
    target annulus are halved (up to 20 times) before the family is
    reported as rejected at that amplitude. Every energy is extrapolated
    over the grid and its refinement, see _GridPair.
    """
    amplitudes = settings.PERTURBATION_AMPLITUDES if amplitudes is None else amplitudes
    seed = settings.PERTURBATION_SEED if seed is None else seed
    n = settings.GRID_SIZE if grid_size is None else grid_size

    grids = _GridPair(m, weights, sol.profile, n)
    base, fine = grids.coarse, grids.fine
    results: List[PerturbationResult] = []

    for family in families:
        if family == ROTATION:
            for eps in amplitudes:
                plus = grids.rotated(eps)
                minus = grids.rotated(-eps)
                fd = (plus - minus) / (2.0 * eps) if eps else 0.0
                results.append(PerturbationResult(family, eps, eps, plus, minus, fd))
            continue

        phi_fine = _direction(family, fine, seed)
        phi = phi_fine[::2]
        for eps in amplitudes:
            if eps == 0:
                results.append(PerturbationResult(family, 0.0, 0.0, 0.0, 0.0, 0.0))
                continue

            effective = eps
            pair = None
            for _ in range(_MAX_HALVINGS + 1):
                plus = _admissible(base.values + effective * phi, base.R)
                minus = _admissible(base.values - effective * phi, base.R)
                plus_fine = _admissible(fine.values + effective * phi_fine, fine.R)
                minus_fine = _admissible(fine.values - effective * phi_fine, fine.R)
                candidates = (plus, minus, plus_fine, minus_fine)
                if all(item is not None for item in candidates):
                    pair = candidates
                    break
                logger.debug(f"{family} perturbation at eps={effective:.3g} leaves the annulus; halving")
                effective *= 0.5

            if pair is None:
                error = PerturbationLeavesAnnulus(
                    "perturbation leaves the target annulus at every tried amplitude",
                    {"family": family, "amplitude": eps},
                )
                logger.warning(error.message + f" ({family}, eps={eps:g})")
                results.append(PerturbationResult(family, eps, effective, math.nan, math.nan, math.nan,
                                                  accepted=False, error=error.to_dict()))
                continue

            clamped = not (np.array_equal(pair[0], base.values + effective * phi)
                           and np.array_equal(pair[1], base.values - effective * phi))
            if clamped:
                logger.warning(f"{family} perturbation at eps={effective:.3g} was clamped into the annulus")
            d_plus = grids.energy(pair[0], pair[2]) - grids.e0
            d_minus = grids.energy(pair[1], pair[3]) - grids.e0
            fd = (d_plus - d_minus) / (2.0 * effective)
            results.append(PerturbationResult(family, eps, effective, d_plus, d_minus, fd, clamped=clamped))

    return results


def first_variation_ratios(results: List[PerturbationResult], energy: float) -> List[float]:
    """
    |first variation| / (E eps) per family and amplitude. When the family
    was also run at twice (or half) the amplitude, the two central
    differences are combined as (4 fd(eps) - fd(2 eps)) / 3, which cancels
    their common eps^2 term.
    """
    by_family: Dict[str, Dict[float, float]] = {}
    for item in results:
        if item.family == ROTATION or not item.accepted or item.effective_amplitude == 0:
            continue
        by_family.setdefault(item.family, {})[item.effective_amplitude] = item.fd_derivative

    ratios = []
    for values in by_family.values():
        for eps, fd in values.items():
            estimate = fd
            if 2.0 * eps in values:
                estimate = (4.0 * fd - values[2.0 * eps]) / 3.0
            elif 0.5 * eps in values:
                estimate = (4.0 * values[0.5 * eps] - fd) / 3.0
            ratios.append(abs(estimate) / (energy * eps))
    return ratios


def _quadratic_ratios(results: List[PerturbationResult]) -> List[float]:
    """Delta E(2 eps) / Delta E(eps) for unhalved, accepted amplitude pairs"""
    by_family: Dict[str, Dict[float, float]] = {}
    for item in results:
        if item.family == ROTATION or not item.accepted or item.amplitude == 0:
            continue
        if item.effective_amplitude != item.amplitude:
            continue
        by_family.setdefault(item.family, {})[item.amplitude] = item.delta_energy

    ratios = []
    for values in by_family.values():
        for eps, delta in values.items():
            doubled = values.get(2.0 * eps)
            if doubled is not None and delta > 0:
                ratios.append(doubled / delta)
    return ratios


def verify(
    m: MetricSpec,
    weights: Weights,
    sol: ExtremalSolution,
    grid_size: Optional[int] = None,
    seed: Optional[int] = None,
) -> VerificationReport:
    """Run every check and compare against the configured thresholds"""
    residual = el_residual(m, weights, sol.profile)
    first_integral = first_integral_deviation(m, weights, sol.profile, sol.alpha)
    duality = duality_check(m, weights, sol)
    closed = closed_form_gap(m, weights, sol)
    perturbations = perturbation_test(m, weights, sol, grid_size=grid_size, seed=seed)

    energy = sol.energy
    moving = [p for p in perturbations if p.family != ROTATION and p.accepted and p.amplitude]
    rotations = [p for p in perturbations if p.family == ROTATION and p.amplitude]
    min_delta = min((min(p.delta_energy, p.delta_energy_negative) for p in moving), default=0.0) / energy
    fd_max = max((abs(p.fd_derivative) for p in moving), default=0.0)
    fd_worst = max(first_variation_ratios(perturbations, energy), default=0.0)
    rotation_max = max((max(abs(p.delta_energy), abs(p.delta_energy_negative)) for p in rotations), default=0.0)
    ratios = _quadratic_ratios(perturbations)

    checks = {
        "el_residual": CheckOutcome(residual, settings.EL_RESIDUAL_MAX, residual <= settings.EL_RESIDUAL_MAX),
        "first_integral": CheckOutcome(first_integral, settings.FIRST_INTEGRAL_MAX,
                                       first_integral <= settings.FIRST_INTEGRAL_MAX),
        "duality_gap": CheckOutcome(max(duality, closed), settings.DUALITY_GAP_MAX,
                                    max(duality, closed) <= settings.DUALITY_GAP_MAX),
        "perturbation_min": CheckOutcome(min_delta, -settings.PERTURBATION_SLACK,
                                         min_delta >= -settings.PERTURBATION_SLACK, comparison=">="),
        "first_variation": CheckOutcome(fd_worst, settings.FIRST_VARIATION_MAX,
                                        fd_worst <= settings.FIRST_VARIATION_MAX),
        "rotation": CheckOutcome(rotation_max / energy, settings.ROTATION_MAX,
                                 rotation_max / energy <= settings.ROTATION_MAX),
    }
    if ratios:
        worst = max(ratios, key=lambda value: abs(value - 4.0))
        checks["quadratic_scaling"] = CheckOutcome(worst, 4.0, 3.0 <= worst <= 5.0, comparison="in [3, 5]")

    report = VerificationReport(
        el_residual_sup=residual,
        first_integral_dev=first_integral,
        duality_gap_rel=duality,
        closed_form_gap_rel=closed,
        fd_first_variation=fd_max,
        energy=energy,
        perturbation_results=perturbations,
        checks=checks,
    )
    for name, check in checks.items():
        logger.info(f"check {name}: {check.value:.3g} {check.comparison} {check.threshold:g} -> "
                    f"{'pass' if check.passed else 'FAIL'}")
    return report

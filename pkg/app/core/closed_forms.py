"""
Explicit extremal maps and bounds for rho = 1 and rho = s^(-lam).

With k = b/a:

rho = 1
    H(t) = ((1 - mu) + (1 + mu) t^(2k)) / (2 t^k),  mu = sqrt(1 + alpha/b^2)
    feasible iff R >= cosh(k log r)

rho = s^(-lam), lam != 1, p = lam - 1, kappa = p k, m = sqrt(1 + eps/b^2)
    H(t)^p = 2 (1 + m) t^kappa / ((1 + m)^2 - t^(2 kappa) eps / b^2)
    feasible iff r <= exp((a / (b |p|)) acosh(R^|p|))

These serve as independent oracles for the numerical solver.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.optimize import brentq

from app.core.errors import InfeasibleCase, LambdaOne, ParseError
from app.core.extremal import RadialProfile, profile_from_function
from app.core.metric import MetricKind, MetricSpec

logger = logging.getLogger(__name__)

_SLACK = 1e-12
_MAX_EXPANSIONS = 200


class ClosedFormFamily(str, Enum):
    RHO1 = "rho1"
    RHO_INV_SQUARE = "rho_inv_square"
    RHO_POWER = "rho_power"


@dataclass(frozen=True)
class ClosedFormCase:
    """An explicit extremal profile and the constant that pins it"""
    family: ClosedFormFamily
    a: float
    b: float
    r: float
    R: float
    lam: float
    constant_name: str
    constant: float
    alpha_equivalent: float
    H: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    Hdot: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    c: Optional[float] = None

    def metric(self) -> MetricSpec:
        if self.family == ClosedFormFamily.RHO1:
            return MetricSpec.constant()
        return MetricSpec.power(self.lam)

    def profile(self, n: Optional[int] = None, t: Optional[np.ndarray] = None) -> RadialProfile:
        return profile_from_function(self.H, self.Hdot, self.r, n=n, t=t)

    def to_dict(self) -> Dict[str, Any]:
        result = {
            "family": self.family.value,
            "metric": self.metric().to_text(),
            "a": self.a,
            "b": self.b,
            "r": self.r,
            "R": self.R,
            self.constant_name: self.constant,
            "alpha_equivalent": self.alpha_equivalent,
        }
        if self.c is not None:
            result["c"] = self.c
        return result


def bound_rho1(a: float, b: float, r: float) -> float:
    """Smallest R admitting an extremal map from radius r when rho = 1"""
    return math.cosh((b / a) * math.log(r))


def bound_power(a: float, b: float, lam: float, R: float) -> float:
    """
    Largest r admitting an extremal map onto radius R when rho = s^(-lam).
    Equals (R^|p| + sqrt(R^(2|p|) - 1))^(a / (b |p|)) with p = lam - 1.
    """
    if lam == 1:
        raise LambdaOne("rho = 1/s has no finite bound", {"lambda": lam})
    p = abs(lam - 1.0)
    return math.exp((a / (b * p)) * math.acosh(R ** p))


def alpha0_power(b: float, lam: float, R: float) -> float:
    """Lower admissibility limit -b^2 min(1, R^(2 - 2 lam)) for rho = s^(-lam)"""
    return -b * b * min(1.0, R ** (2.0 - 2.0 * lam))


def rho1_profile(a: float, b: float, r: float, R: float) -> ClosedFormCase:
    """Extremal for rho = 1; mu solved from H(r) = R"""
    r_min_target = bound_rho1(a, b, r)
    if R < r_min_target * (1.0 - _SLACK):
        raise InfeasibleCase(
            "R is below cosh((b/a) log r)",
            {"a": a, "b": b, "r": r, "R": R, "R_min": r_min_target},
        )

    k = b / a
    rk = r ** k
    mu = max((2.0 * R * rk - rk * rk - 1.0) / (rk * rk - 1.0), 0.0)

    def H(t):
        t = np.asarray(t, dtype=float)
        return ((1.0 - mu) + (1.0 + mu) * t ** (2.0 * k)) / (2.0 * t ** k)

    def Hdot(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * k * ((1.0 + mu) * t ** (k - 1.0) - (1.0 - mu) * t ** (-k - 1.0))

    return ClosedFormCase(
        family=ClosedFormFamily.RHO1,
        a=a, b=b, r=r, R=R, lam=0.0,
        constant_name="mu",
        constant=mu,
        alpha_equivalent=b * b * (mu * mu - 1.0),
        H=H, Hdot=Hdot,
        c=a / b,
    )


def _power_case(a: float, b: float, lam: float, r: float, R: float, family: ClosedFormFamily,
                constant_name: str) -> ClosedFormCase:
    if lam == 1:
        raise LambdaOne("rho = 1/s has the exponential solution instead", {"lambda": lam})

    r_max = bound_power(a, b, lam, R)
    if r > r_max * (1.0 + _SLACK):
        raise InfeasibleCase("r exceeds the power-metric bound", {"a": a, "b": b, "lambda": lam, "r": r, "R": R, "r_max": r_max})

    p = lam - 1.0
    kappa = p * b / a
    r2k = r ** (2.0 * kappa)
    target = p * math.log(R)
    m_min = math.sqrt(max(1.0 + alpha0_power(b, lam, R) / (b * b), 0.0))

    def boundary(m: float) -> float:
        denominator = (1.0 + m) ** 2 - r2k * (m * m - 1.0)
        return math.log(2.0 * (1.0 + m)) + kappa * math.log(r) - math.log(denominator) - target

    g_lo = boundary(m_min)
    if abs(g_lo) <= _SLACK:
        m_value = m_min
    else:
        if p > 0:
            pole = (r2k + 1.0) / (r2k - 1.0)
            m_hi = pole * (1.0 - 1e-13)
            g_hi = boundary(m_hi)
        else:
            m_hi = max(2.0, 2.0 * m_min)
            g_hi = boundary(m_hi)
            expansions = 0
            while math.copysign(1.0, g_hi) == math.copysign(1.0, g_lo):
                expansions += 1
                if expansions > _MAX_EXPANSIONS:
                    raise InfeasibleCase("boundary equation has no root", {"lambda": lam, "r": r, "R": R})
                m_hi *= 2.0
                g_hi = boundary(m_hi)
        if math.copysign(1.0, g_hi) == math.copysign(1.0, g_lo):
            raise InfeasibleCase("boundary equation has no root on the admissible branch",
                                 {"lambda": lam, "r": r, "R": R})
        m_value = brentq(boundary, m_min, m_hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)

    eps = b * b * (m_value * m_value - 1.0)
    ratio = eps / (b * b)

    def D(t):
        return (1.0 + m_value) ** 2 - t ** (2.0 * kappa) * ratio

    def H(t):
        t = np.asarray(t, dtype=float)
        return (2.0 * (1.0 + m_value) * t ** kappa / D(t)) ** (1.0 / p)

    def Hdot(t):
        t = np.asarray(t, dtype=float)
        return H(t) * (b / (a * t) + 2.0 * (b / a) * t ** (2.0 * kappa - 1.0) * ratio / D(t))

    logger.debug(f"{family.value} case lambda={lam:g}: {constant_name}={eps:.15g}")
    return ClosedFormCase(
        family=family,
        a=a, b=b, r=r, R=R, lam=lam,
        constant_name=constant_name,
        constant=eps,
        alpha_equivalent=eps,
        H=H, Hdot=Hdot,
    )


def inverse_square_profile(a: float, b: float, r: float, R: float) -> ClosedFormCase:
    """Extremal for rho = s^(-2); delta solved from H(r) = R"""
    return _power_case(a, b, 2.0, r, R, ClosedFormFamily.RHO_INV_SQUARE, "delta")


def power_profile(a: float, b: float, lam: float, r: float, R: float) -> ClosedFormCase:
    """Extremal for rho = s^(-lam), lam != 1; epsilon solved from H(r) = R"""
    return _power_case(a, b, lam, r, R, ClosedFormFamily.RHO_POWER, "epsilon")


def case_for_metric(m: MetricSpec, a: float, b: float, r: float, R: float) -> ClosedFormCase:
    """Closed-form case matching a const or power metric"""
    if m.kind == MetricKind.CONSTANT:
        return rho1_profile(a, b, r, R)
    if m.kind == MetricKind.POWER:
        if m.lam == 0:
            return rho1_profile(a, b, r, R)
        if m.lam == 2:
            return inverse_square_profile(a, b, r, R)
        return power_profile(a, b, m.lam, r, R)
    raise ParseError("closed forms exist only for const and power metrics", {"metric": m.to_text()})


@dataclass
class ClosedFormComparison:
    """Closed-form case against the numerical extremal of the same instance"""
    case: ClosedFormCase
    profile: RadialProfile
    numeric_alpha: Optional[float] = None
    sup_gap: Optional[float] = None
    energy_gap_rel: Optional[float] = None
    alpha_gap: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        result = self.case.to_dict()
        result.update({
            "numeric_alpha": self.numeric_alpha,
            "alpha_gap": self.alpha_gap,
            "sup_gap": self.sup_gap,
            "energy_gap_rel": self.energy_gap_rel,
            "profile": self.profile.to_dict(),
        })
        return result


def compare_with_numeric(case: ClosedFormCase, n: Optional[int] = None) -> ClosedFormComparison:
    """Solve the same instance numerically and measure sup-norm and energy gaps"""
    from app.core.energy import radial_energy
    from app.core.extremal import solve
    from app.core.metric import AnnulusPair, Weights

    m = case.metric()
    weights = Weights(case.a, case.b)
    solution = solve(m, weights, AnnulusPair(case.r, case.R), n=n)
    numeric = solution.profile

    closed_profile = case.profile(t=numeric.t_samples)
    sup_gap = float(np.max(np.abs(case.H(numeric.t_samples) - numeric.H_samples)))
    closed_energy = radial_energy(m, weights, closed_profile).total
    energy_gap = abs(closed_energy - solution.energy) / max(closed_energy, solution.energy)

    logger.info(f"closed form {case.family.value}: sup gap {sup_gap:.3g}, energy gap {energy_gap:.3g}")
    return ClosedFormComparison(
        case=case,
        profile=closed_profile,
        numeric_alpha=solution.alpha,
        sup_gap=sup_gap,
        energy_gap_rel=energy_gap,
        alpha_gap=abs(solution.alpha - case.alpha_equivalent),
    )

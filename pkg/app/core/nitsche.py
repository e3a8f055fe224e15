"""
Feasibility bound for the extremal problem.

alpha0 = -min_{1<=s<=R} b^2 s^2 rho(s)^2 is the lower admissibility limit of
the solution parameter, and the bound

    r_max = exp( integral_1^R a rho(s) / sqrt(w(s) + alpha0) ds )

is the largest source radius r for which an extremal radial map exists.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from app.config import settings
from app.core.errors import BracketFailure, Infeasible, NonFiniteIntegrand, SingularIntegrand
from app.core.metric import (
    AnnulusPair,
    MetricSpec,
    Weights,
    breakpoints,
    eval_rho,
    minimize_weight,
    weight_gap,
)
from app.core.quadrature import integrate
from app.models import Regime

logger = logging.getLogger(__name__)

_STEP_FRACTION = 1e-5
# relative slope below which the weight counts as flat next to s*
_FLAT_TOLERANCE = 1e-13
# local order of w - w_min at s*; order >= 2 makes the bound integral diverge
_DIVERGENT_ORDER = 1.5


@dataclass
class NitscheReport:
    """Bound, feasibility and regime of one problem instance"""
    alpha0: float
    s_star: float
    r_max: float
    feasible: bool
    regime: Regime
    alpha: Optional[float] = None
    critical: bool = False
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "alpha0": self.alpha0,
            "s_star": self.s_star,
            "r_max": self.r_max,
            "feasible": self.feasible,
            "regime": self.regime.value,
            "alpha": self.alpha,
            "critical": self.critical,
            "flags": list(self.flags),
        }


def alpha0(m: MetricSpec, weights: Weights, R: float) -> Tuple[float, float]:
    """Returns (alpha0, s_star)"""
    s_star, w_min = minimize_weight(m, weights, R)
    return -w_min, s_star


def _local_order(m: MetricSpec, weights: Weights, R: float, s_star: float, w_min: float) -> float:
    """
    Growth order p of w(s) - w_min ~ |s - s*|^p next to the minimizer,
    estimated from two samples on each admissible side. Returns inf when the
    weight is flat there.
    """
    step = _STEP_FRACTION * (R - 1.0)
    flat = _FLAT_TOLERANCE * w_min * step / s_star
    orders = []
    for direction in (1.0, -1.0):
        s2 = s_star + 2.0 * direction * step
        if not (1.0 <= s2 <= R):
            continue
        d1 = float(weight_gap(m, weights, s_star, direction * step, w_min))
        d2 = float(weight_gap(m, weights, s_star, 2.0 * direction * step, w_min))
        if d1 <= flat:
            return math.inf
        orders.append(math.log2(d2 / d1))
    return max(orders) if orders else math.inf


def bound_exponent(
    m: MetricSpec,
    weights: Weights,
    R: float,
    rel_tol: Optional[float] = None,
) -> Tuple[float, List[str]]:
    """log r_max together with any flags raised while computing it"""
    s_star, w_min = minimize_weight(m, weights, R)
    flags: List[str] = []

    order = _local_order(m, weights, R, s_star, w_min)
    if order > _DIVERGENT_ORDER:
        flags.append("divergent:flat" if math.isinf(order) else "divergent:order")
        logger.info(f"bound integral diverges at s*={s_star:.6g} (local order {order:.3g})")
        return math.inf, flags

    def integrand(s, base, offset):
        gap = weight_gap(m, weights, base, offset, w_min)
        return weights.a * eval_rho(m, s) / np.sqrt(gap)

    try:
        result = integrate(
            integrand,
            1.0,
            R,
            rel_tol=rel_tol,
            split_points=breakpoints(m, 1.0, R),
            graded_points=(s_star,),
            offsets=True,
        )
    except NonFiniteIntegrand as exc:
        # divergence is decided by the local order above; a non-finite sample here is a numerical failure
        raise SingularIntegrand("bound integrand is not finite", {"R": R, "s_star": s_star, **exc.details}) from exc

    if not result.converged:
        flags.append("tolerance_not_met")
    if result.value > settings.OVERFLOW_EXPONENT:
        flags.append("divergent:overflow")
        logger.warning(f"bound exponent {result.value:.6g} exceeds overflow guard")
        return math.inf, flags
    return result.value, flags


def nitsche_bound(m: MetricSpec, weights: Weights, R: float, rel_tol: Optional[float] = None) -> float:
    """r_max, or inf when the bound integral diverges"""
    exponent, _ = bound_exponent(m, weights, R, rel_tol)
    r_max = math.exp(exponent) if math.isfinite(exponent) else math.inf
    logger.info(f"bound for {m.to_text()} a={weights.a:g} b={weights.b:g} R={R:g}: r_max={r_max:.15g}")
    return r_max


def regime_for(alpha: float, alpha0_value: float) -> Regime:
    tol_zero = 1e-10 * (1.0 + abs(alpha0_value))
    if alpha > tol_zero:
        return Regime.ELASTIC
    if abs(alpha) <= tol_zero:
        return Regime.CONFORMAL
    return Regime.NON_ELASTIC


def classify(
    m: MetricSpec,
    weights: Weights,
    ann: AnnulusPair,
    solve: bool = True,
    rel_tol: Optional[float] = None,
) -> NitscheReport:
    """
    Feasibility and regime of an instance. With ``solve=False`` a feasible
    instance is reported with regime UNKNOWN.
    """
    a0, s_star = alpha0(m, weights, ann.R)
    exponent, flags = bound_exponent(m, weights, ann.R, rel_tol)
    r_max = math.exp(exponent) if math.isfinite(exponent) else math.inf
    feasible = math.log(ann.r) <= exponent + settings.FEASIBILITY_SLACK

    report = NitscheReport(
        alpha0=a0,
        s_star=s_star,
        r_max=r_max,
        feasible=feasible,
        regime=Regime.INFEASIBLE if not feasible else Regime.UNKNOWN,
        flags=flags,
    )
    if not feasible or not solve:
        return report

    from app.core.extremal import solve_alpha_details

    solved = solve_alpha_details(m, weights, ann, rel_tol=rel_tol)
    report.alpha = solved.alpha
    report.critical = solved.critical
    report.regime = regime_for(solved.alpha, a0)
    logger.info(f"instance r={ann.r:g} R={ann.R:g}: alpha={solved.alpha:.12g} regime={report.regime.value}")
    return report


def min_target_radius(
    m: MetricSpec,
    weights: Weights,
    r: float,
    rel_tol: Optional[float] = None,
) -> float:
    """
    Smallest R with nitsche_bound(R) >= r, by bracketed root finding on
    log r_max(R) - log r.
    """
    if not (math.isfinite(r) and r > 1.0):
        raise Infeasible("r must be a finite number > 1", {"r": r})
    log_r = math.log(r)
    cap = 2.0 * settings.OVERFLOW_EXPONENT

    def gap(R: float) -> float:
        exponent, _ = bound_exponent(m, weights, R, rel_tol)
        return min(exponent, cap) - log_r

    lo = 1.0 + 1e-6
    if gap(lo) >= 0:
        return lo

    ceiling = m.upper_limit
    hi = min(2.0, ceiling)
    for _ in range(200):
        if gap(hi) >= 0:
            break
        if hi >= ceiling:
            raise Infeasible("no target radius inside the metric domain reaches r", {"r": r, "R_max": ceiling})
        lo, hi = hi, min(2.0 * hi, ceiling)
    else:
        raise BracketFailure("could not bracket the minimal target radius", {"r": r})

    return brentq(gap, lo, hi, xtol=1e-14, rtol=1e-13)

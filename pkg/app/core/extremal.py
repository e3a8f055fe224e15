"""
Extremal radial map.

For alpha > alpha0 the inverse profile is

    q(s) = exp( integral_1^s a rho(u) / sqrt(w(u) + alpha) du )

and the extremal map is h(t e^{i theta}) = H(t) e^{i theta} with H = q^{-1}.
alpha is fixed by the boundary condition q(R) = r.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from app.config import settings
from app.core.errors import (
    BracketFailure,
    DegenerateGrid,
    Infeasible,
    NonFiniteIntegrand,
    NonMonotone,
    OutOfDomain,
    SingularIntegrand,
)
from app.core.metric import (
    AnnulusPair,
    MetricSpec,
    Weights,
    breakpoints,
    eval_rho,
    minimize_weight,
    weight_gap,
)
from app.core.nitsche import bound_exponent, regime_for
from app.core.quadrature import cumulative, integrate
from app.models import Regime

logger = logging.getLogger(__name__)

HDOT_FLOOR = 1e-300
_T_WEIGHT = 2.0 / 3.0


def _limited_slopes(t: np.ndarray, H: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """Clip Hermite slopes into the Fritsch-Carlson monotonicity region"""
    delta = np.diff(H) / np.diff(t)
    m = np.array(slopes, dtype=float)

    left = np.concatenate([[delta[0]], delta])
    right = np.concatenate([delta, [delta[-1]]])
    bad = ~np.isfinite(m)
    m[bad] = 3.0 * np.minimum(left, right)[bad]
    m = np.maximum(m, 0.0)

    for k in range(len(delta)):
        if delta[k] <= 0:
            m[k] = m[k + 1] = 0.0
            continue
        alpha = m[k] / delta[k]
        beta = m[k + 1] / delta[k]
        radius = alpha * alpha + beta * beta
        if radius > 9.0:
            tau = 3.0 / math.sqrt(radius)
            m[k] = tau * alpha * delta[k]
            m[k + 1] = tau * beta * delta[k]
    return m


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    Strictly increasing sampled profile H: [1, r] -> [1, R] with slopes.

    The same type carries sampled inverse maps, with the roles of (t, r)
    and (H, R) exchanged.
    """
    t_samples: np.ndarray
    H_samples: np.ndarray
    Hdot_samples: np.ndarray
    r: float
    R: float

    def __post_init__(self):
        t = np.asarray(self.t_samples, dtype=float)
        H = np.asarray(self.H_samples, dtype=float)
        Hdot = np.asarray(self.Hdot_samples, dtype=float)
        object.__setattr__(self, "t_samples", t)
        object.__setattr__(self, "H_samples", H)
        object.__setattr__(self, "Hdot_samples", Hdot)

        if t.ndim != 1 or t.shape != H.shape or t.shape != Hdot.shape or t.size < 2:
            raise DegenerateGrid("profile needs matching 1-d sample arrays of length >= 2")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(H))):
            raise NonMonotone("profile samples must be finite")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(H) <= 0):
            raise NonMonotone("profile samples must be strictly increasing")
        if np.any(np.isnan(Hdot)) or np.any(Hdot <= 0):
            raise NonMonotone("profile slopes must be positive")
        if abs(t[0] - 1.0) > 1e-12 or abs(t[-1] - self.r) > 1e-12 * self.r:
            raise OutOfDomain("profile must span [1, r]", {"t0": float(t[0]), "t_end": float(t[-1]), "r": self.r})
        if abs(H[0] - 1.0) > 1e-10 or abs(H[-1] - self.R) > 1e-10 * self.R:
            raise OutOfDomain("profile must satisfy H(1)=1 and H(r)=R", {"H0": float(H[0]), "H_end": float(H[-1]), "R": self.R})

    @classmethod
    def from_samples(cls, t, H, Hdot=None) -> "RadialProfile":
        """Build from (t, H) samples; missing slopes come from PCHIP"""
        t = np.asarray(t, dtype=float)
        H = np.asarray(H, dtype=float)
        if Hdot is None:
            if np.any(np.diff(t) <= 0):
                raise NonMonotone("profile t samples must be strictly increasing")
            Hdot = PchipInterpolator(t, H).derivative()(t)
            Hdot = np.maximum(Hdot, HDOT_FLOOR)
        return cls(t, H, np.asarray(Hdot, dtype=float), r=float(t[-1]), R=float(H[-1]))

    def __len__(self) -> int:
        return int(self.t_samples.size)

    @cached_property
    def interpolant(self) -> CubicHermiteSpline:
        slopes = _limited_slopes(self.t_samples, self.H_samples, self.Hdot_samples)
        return CubicHermiteSpline(self.t_samples, self.H_samples, slopes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "R": self.R,
            "t": self.t_samples.tolist(),
            "H": self.H_samples.tolist(),
            "Hdot": self.Hdot_samples.tolist(),
        }


def eval_H(p: RadialProfile, t) -> Tuple[Any, Any]:
    """(H(t), H'(t)) from the shape-preserving Hermite interpolant"""
    t_arr = np.asarray(t, dtype=float)
    lo, hi = p.t_samples[0], p.t_samples[-1]
    slack = 1e-12 * max(1.0, hi)
    if np.any(~((t_arr >= lo - slack) & (t_arr <= hi + slack))):
        raise OutOfDomain("profile evaluated outside [1, r]", {"domain": [float(lo), float(hi)]})

    clipped = np.clip(t_arr, lo, hi)
    H = p.interpolant(clipped)
    Hdot = np.maximum(p.interpolant(clipped, 1), HDOT_FLOOR)
    if np.ndim(t) == 0:
        return float(H), float(Hdot)
    return H, Hdot


def invert_profile(p: RadialProfile) -> RadialProfile:
    """Sampled inverse map s -> t, with slopes 1/H'"""
    with np.errstate(divide="ignore"):
        slopes = np.where(p.Hdot_samples > HDOT_FLOOR, 1.0 / p.Hdot_samples, np.inf)
    return RadialProfile(p.H_samples, p.t_samples, slopes, r=p.R, R=p.r)


def profile_from_function(
    H: Callable[[np.ndarray], np.ndarray],
    Hdot: Callable[[np.ndarray], np.ndarray],
    r: float,
    n: Optional[int] = None,
    R: Optional[float] = None,
    t: Optional[np.ndarray] = None,
) -> RadialProfile:
    """Sample an analytic profile on a geometric t-grid (or the given one)"""
    if t is None:
        n = n or settings.SAMPLES
        t = np.geomspace(1.0, r, n)
    t = np.array(t, dtype=float)
    t[0], t[-1] = 1.0, r
    H_values = np.asarray(H(t), dtype=float)
    Hdot_values = np.maximum(np.asarray(Hdot(t), dtype=float), HDOT_FLOOR)
    return RadialProfile(t, H_values, Hdot_values, r=r, R=float(H_values[-1]) if R is None else R)


@dataclass
class AlphaSolution:
    alpha: float
    alpha0: float
    s_star: float
    delta: float
    r_max: float
    critical: bool
    flags: List[str] = field(default_factory=list)


@dataclass
class ExtremalSolution:
    """Solved instance: alpha, the sampled extremal profile and its energies"""
    metric: MetricSpec
    weights: Weights
    annulus: AnnulusPair
    alpha: float
    alpha0: float
    s_star: float
    r_max: float
    profile: RadialProfile
    energy: float
    distortion: float
    regime: Regime
    critical: bool = False
    flags: List[str] = field(default_factory=list)

    def to_dict(self, include_samples: bool = True) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        result = {
            "metric": self.metric.to_text(),
            "a": self.weights.a,
            "b": self.weights.b,
            "r": self.annulus.r,
            "R": self.annulus.R,
            "alpha": self.alpha,
            "alpha0": self.alpha0,
            "s_star": self.s_star,
            "r_max": self.r_max,
            "critical": self.critical,
            "regime": self.regime.value,
            "energy": self.energy,
            "distortion": self.distortion,
            "flags": list(self.flags),
        }
        if include_samples:
            result["profile"] = self.profile.to_dict()
        return result


def _q_integrand(m: MetricSpec, weights: Weights, w_min: float, delta: float):
    # w(s) + alpha written as (w(s) - w_min) + (alpha - alpha0), in offset form
    def integrand(s, base, offset):
        gap = weight_gap(m, weights, base, offset, w_min)
        return weights.a * eval_rho(m, s) / np.sqrt(gap + delta)
    return integrand


def _log_phi(
    m: MetricSpec,
    weights: Weights,
    R: float,
    delta: float,
    s_star: float,
    w_min: float,
    rel_tol: float,
) -> float:
    result = integrate(
        _q_integrand(m, weights, w_min, delta),
        1.0,
        R,
        rel_tol=rel_tol,
        split_points=breakpoints(m, 1.0, R),
        graded_points=(s_star,),
        offsets=True,
    )
    return result.value


def phi(m: MetricSpec, weights: Weights, R: float, alpha: float, rel_tol: Optional[float] = None) -> float:
    """q(R) for the given alpha; strictly decreasing in alpha"""
    s_star, w_min = minimize_weight(m, weights, R)
    delta = alpha + w_min
    if delta <= 1e-300:
        raise SingularIntegrand("alpha must exceed alpha0", {"alpha": alpha, "alpha0": -w_min})
    rel_tol = settings.REL_TOL if rel_tol is None else rel_tol
    return math.exp(_log_phi(m, weights, R, delta, s_star, w_min, rel_tol))


def solve_alpha_details(
    m: MetricSpec,
    weights: Weights,
    ann: AnnulusPair,
    rel_tol: Optional[float] = None,
    iter_tol: Optional[float] = None,
) -> AlphaSolution:
    """
    Solve q(R) = r for alpha.

    Works in delta = alpha - alpha0 > 0. The bracket grows geometrically
    from 1e-8 (1 + |alpha0|) and Brent's method finishes it. An instance at
    the bound (within the feasibility slack) returns alpha = alpha0 and is
    marked critical.
    """
    rel_tol = settings.REL_TOL if rel_tol is None else rel_tol
    iter_tol = settings.ITER_REL_TOL if iter_tol is None else iter_tol

    s_star, w_min = minimize_weight(m, weights, ann.R)
    a0 = -w_min
    exponent, flags = bound_exponent(m, weights, ann.R, rel_tol)
    r_max = math.exp(exponent) if math.isfinite(exponent) else math.inf
    log_r = math.log(ann.r)

    margin = exponent - log_r
    if margin < -settings.FEASIBILITY_SLACK:
        raise Infeasible(
            "r exceeds the feasibility bound",
            {"r": ann.r, "R": ann.R, "r_max": r_max, "alpha0": a0},
        )
    if margin <= settings.FEASIBILITY_SLACK:
        logger.info(f"critical instance r={ann.r:g} R={ann.R:g}: alpha = alpha0 = {a0:.12g}")
        return AlphaSolution(a0, a0, s_star, 0.0, r_max, True, flags)

    def g(delta: float, tol: float) -> float:
        return _log_phi(m, weights, ann.R, delta, s_star, w_min, tol) - log_r

    max_steps = settings.BRACKET_MAX_DOUBLINGS
    hi = 1e-8 * (1.0 + abs(a0))
    g_hi = g(hi, iter_tol)
    if g_hi > 0:
        lo = hi
        steps = 0
        while g_hi > 0:
            steps += 1
            if steps > max_steps:
                raise BracketFailure("alpha bracket expansion exceeded the doubling limit", {"delta": hi})
            lo, hi = hi, 2.0 * hi
            g_hi = g(hi, iter_tol)
        logger.debug(f"alpha bracket after {steps} doublings: delta in [{lo:.6g}, {hi:.6g}]")
    else:
        lo = hi
        steps = 0
        while g(lo, iter_tol) <= 0:
            steps += 1
            if steps > max_steps:
                raise BracketFailure("alpha bracket contraction exceeded the halving limit", {"delta": lo})
            hi, lo = lo, 0.5 * lo
        logger.debug(f"alpha bracket after {steps} halvings: delta in [{lo:.6g}, {hi:.6g}]")

    if g_hi == 0.0:
        delta = hi
    else:
        try:
            delta = brentq(lambda d: g(d, rel_tol), lo, hi, xtol=1e-300, rtol=1e-12)
        except ValueError as exc:
            raise BracketFailure(f"alpha root not bracketed: {exc}", {"lo": lo, "hi": hi}) from exc

    alpha = a0 + delta
    logger.info(f"solved alpha={alpha:.15g} (alpha0={a0:.12g}) for r={ann.r:g} R={ann.R:g}")
    return AlphaSolution(alpha, a0, s_star, delta, r_max, False, flags)


def solve_alpha(
    m: MetricSpec,
    weights: Weights,
    ann: AnnulusPair,
    rel_tol: Optional[float] = None,
) -> float:
    return solve_alpha_details(m, weights, ann, rel_tol=rel_tol).alpha


def _sample_points(integrand, R: float, n: int, s_star: float, knots, rel_tol: float) -> np.ndarray:
    """
    n points in [1, R] spaced evenly in a blend of log s and log q(s), so
    both the profile and its inverse stay resolved near a singular s*.
    """
    fine = np.geomspace(1.0, R, 8 * n)
    fine[0], fine[-1] = 1.0, R
    extra = [x for x in (s_star, *knots) if 1.0 < x < R]
    fine = np.union1d(fine, np.asarray(extra, dtype=float))

    x_fine = cumulative(integrand, 1.0, fine, rel_tol=max(rel_tol, settings.ITER_REL_TOL),
                        split_points=knots, graded_points=(s_star,), offsets=True)
    sigma = _T_WEIGHT * x_fine / x_fine[-1] + (1.0 - _T_WEIGHT) * np.log(fine) / math.log(R)

    s = np.interp(np.linspace(0.0, 1.0, n), sigma, fine)
    s[0], s[-1] = 1.0, R
    return s


def build_profile(
    m: MetricSpec,
    weights: Weights,
    alpha: float,
    ann: AnnulusPair,
    n: Optional[int] = None,
    rel_tol: Optional[float] = None,
) -> RadialProfile:
    """
    Sample H = q^{-1}: t_i = q(s_i) by cumulative quadrature, and
    H'(t_i) = sqrt(w(s_i) + alpha) / (a rho(s_i) t_i).
    """
    n = settings.SAMPLES if n is None else int(n)
    if n < settings.MIN_SAMPLES:
        raise DegenerateGrid(f"profile needs at least {settings.MIN_SAMPLES} samples", {"n": n})
    rel_tol = settings.REL_TOL if rel_tol is None else rel_tol

    s_star, w_min = minimize_weight(m, weights, ann.R)
    delta = alpha + w_min
    if delta < 0.0:
        raise SingularIntegrand("alpha must not be below alpha0", {"alpha": alpha, "alpha0": -w_min})

    integrand = _q_integrand(m, weights, w_min, delta)
    knots = breakpoints(m, 1.0, ann.R)
    try:
        s = _sample_points(integrand, ann.R, n, s_star, knots, rel_tol)
        x = cumulative(integrand, 1.0, s, rel_tol=rel_tol, split_points=knots, graded_points=(s_star,), offsets=True)
    except NonFiniteIntegrand as exc:
        raise SingularIntegrand("q integral is singular for this alpha", {"alpha": alpha, **exc.details}) from exc

    log_r = math.log(ann.r)
    r_end = ann.r
    if abs(x[-1] - log_r) <= 1e-6 * log_r:
        x = x * (log_r / x[-1])
    else:
        r_end = math.exp(x[-1])
        logger.warning(f"alpha={alpha:.12g} does not solve q(R)=r (q(R)={r_end:.12g}, r={ann.r:g})")

    t = np.exp(x)
    t[0], t[-1] = 1.0, r_end
    gap = weight_gap(m, weights, s_star, s - s_star, w_min)
    Hdot = np.sqrt(gap + delta) / (weights.a * np.asarray(eval_rho(m, s)) * t)
    Hdot = np.maximum(Hdot, HDOT_FLOOR)
    return RadialProfile(t, s, Hdot, r=r_end, R=ann.R)


def solve(
    m: MetricSpec,
    weights: Weights,
    ann: AnnulusPair,
    n: Optional[int] = None,
    rel_tol: Optional[float] = None,
) -> ExtremalSolution:
    """Solve alpha, build the profile and evaluate energy and distortion"""
    from app.core.energy import distortion_closed_form, radial_energy

    solved = solve_alpha_details(m, weights, ann, rel_tol=rel_tol)
    profile = build_profile(m, weights, solved.alpha, ann, n=n, rel_tol=rel_tol)
    energy = radial_energy(m, weights, profile, rel_tol=rel_tol).total
    distortion = distortion_closed_form(m, weights, solved.alpha, ann.R, rel_tol=rel_tol)

    return ExtremalSolution(
        metric=m,
        weights=weights,
        annulus=ann,
        alpha=solved.alpha,
        alpha0=solved.alpha0,
        s_star=solved.s_star,
        r_max=solved.r_max,
        profile=profile,
        energy=energy,
        distortion=distortion,
        regime=regime_for(solved.alpha, solved.alpha0),
        critical=solved.critical,
        flags=solved.flags,
    )

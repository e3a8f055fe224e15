"""
Weighted combined energy and distortion.

    E[h] = integral over the source annulus of (a^2 |h_N|^2 + b^2 |h_T|^2) rho(|h|)^2
    K[f] = integral over the target annulus of
           (b^2 |grad varrho|^2 + a^2 varrho^2 |grad Theta|^2) / J_f  rho(|w|)^2

where h_N = h_t and h_T = h_theta / t, and f = varrho e^{i Theta} is the
inverse map with Jacobian J_f.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from app.config import settings
from app.core.errors import DegenerateGrid, NonFiniteIntegrand, NonMonotone, OutOfDomain, SingularIntegrand
from app.core.extremal import RadialProfile, eval_H
from app.core.metric import MetricSpec, Weights, breakpoints, eval_rho, minimize_weight, weight_gap
from app.core.quadrature import integrate

logger = logging.getLogger(__name__)

_MIN_GRID = 16
_TWO_PI = 2.0 * math.pi


@dataclass
class EnergyBreakdown:
    """Energy split into its normal and tangential contributions"""
    total: float
    normal_part: float
    tangential_part: float

    @classmethod
    def from_parts(cls, normal: float, tangential: float) -> "EnergyBreakdown":
        return cls(total=normal + tangential, normal_part=normal, tangential_part=tangential)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "normal": self.normal_part,
            "tangential": self.tangential_part,
        }


@dataclass(frozen=True, eq=False)
class PolarGridMap:
    """Samples h(t_i e^{i theta_j}) on a tensor grid over the source annulus"""
    t_grid: np.ndarray
    theta_grid: np.ndarray
    values: np.ndarray
    R: float

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        theta = np.asarray(self.theta_grid, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "theta_grid", theta)
        object.__setattr__(self, "values", values)

        if t.size < _MIN_GRID or theta.size < _MIN_GRID:
            raise DegenerateGrid(
                f"grid must be at least {_MIN_GRID}x{_MIN_GRID}",
                {"n_t": int(t.size), "n_theta": int(theta.size)},
            )
        if values.shape != (t.size, theta.size):
            raise DegenerateGrid("grid values must have shape (n_t, n_theta)", {"shape": list(values.shape)})
        if np.any(np.diff(t) <= 0):
            raise DegenerateGrid("t grid must be strictly increasing")
        step = 2.0 * math.pi / theta.size
        if not np.allclose(np.diff(theta), step, rtol=0.0, atol=1e-12):
            raise DegenerateGrid("theta grid must be uniform over [0, 2 pi)")

        tol = 1e-9 * max(1.0, self.R)
        inner = np.abs(np.abs(values[0]) - 1.0).max()
        outer = np.abs(np.abs(values[-1]) - self.R).max()
        if inner > tol or outer > tol:
            raise OutOfDomain(
                "grid map must send |z|=1 to |w|=1 and |z|=r to |w|=R",
                {"inner_error": float(inner), "outer_error": float(outer)},
            )

    @property
    def r(self) -> float:
        return float(self.t_grid[-1])


def radial_energy(
    m: MetricSpec,
    weights: Weights,
    p: RadialProfile,
    rel_tol: Optional[float] = None,
) -> EnergyBreakdown:
    """E = 2 pi integral_1^r (a^2 H'^2 + b^2 H^2 / t^2) rho(H)^2 t dt"""
    a2, b2 = weights.a ** 2, weights.b ** 2

    def normal(t):
        H, Hdot = eval_H(p, t)
        return _TWO_PI * a2 * Hdot * Hdot * eval_rho(m, H) ** 2 * t

    def tangential(t):
        H, _ = eval_H(p, t)
        return _TWO_PI * b2 * H * H * eval_rho(m, H) ** 2 / t

    splits = p.t_samples[1:-1]
    normal_part = integrate(normal, 1.0, p.r, rel_tol=rel_tol, split_points=splits).value
    tangential_part = integrate(tangential, 1.0, p.r, rel_tol=rel_tol, split_points=splits).value
    return EnergyBreakdown.from_parts(normal_part, tangential_part)


def _theta_derivative(values: np.ndarray) -> np.ndarray:
    n = values.shape[1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values, axis=1), axis=1)


def grid_energy(m: MetricSpec, weights: Weights, g: PolarGridMap) -> EnergyBreakdown:
    """
    Energy of a grid-sampled map. t-derivatives are second-order central
    differences; theta-derivatives are spectral since every grid map is
    periodic in theta. Trapezoidal rule in t, periodic sum in theta.
    """
    t = g.t_grid
    h_t = np.gradient(g.values, t, axis=0, edge_order=2)
    h_T = _theta_derivative(g.values) / t[:, None]

    rho2 = np.asarray(eval_rho(m, np.abs(g.values))) ** 2
    d_theta = 2.0 * math.pi / g.theta_grid.size
    normal_density = weights.a ** 2 * np.abs(h_t) ** 2 * rho2 * t[:, None]
    tangential_density = weights.b ** 2 * np.abs(h_T) ** 2 * rho2 * t[:, None]

    normal = float(trapezoid(normal_density.sum(axis=1) * d_theta, t))
    tangential = float(trapezoid(tangential_density.sum(axis=1) * d_theta, t))
    return EnergyBreakdown.from_parts(normal, tangential)


def lift_profile(
    p: RadialProfile,
    n_t: Optional[int] = None,
    n_theta: Optional[int] = None,
    beta: float = 0.0,
) -> PolarGridMap:
    """Radial map H(t) e^{i (theta + beta)} on a uniform polar grid"""
    n_t = settings.GRID_SIZE if n_t is None else n_t
    n_theta = settings.GRID_SIZE if n_theta is None else n_theta
    t = np.linspace(1.0, p.r, n_t)
    t[-1] = p.r
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    H, _ = eval_H(p, t)
    values = H[:, None] * np.exp(1j * (theta + beta))[None, :]
    return PolarGridMap(t, theta, values, R=p.R)


def radial_distortion(
    m: MetricSpec,
    weights: Weights,
    inv: RadialProfile,
    rel_tol: Optional[float] = None,
) -> float:
    """
    K of a radial inverse map varrho: [1, R] -> [1, r], from |grad varrho| = varrho',
    |grad Theta| = 1/s and J = varrho' varrho / s:

        K = 2 pi integral_1^R (b^2 varrho' s^2 / varrho + a^2 varrho / varrho') rho(s)^2 ds
    """
    if np.any(np.diff(inv.H_samples) <= 0) or np.any(inv.Hdot_samples <= 0):
        raise NonMonotone("inverse map must be strictly increasing")
    a2, b2 = weights.a ** 2, weights.b ** 2

    def integrand(s):
        varrho, slope = eval_H(inv, s)
        rho2 = eval_rho(m, s) ** 2
        return _TWO_PI * (b2 * slope * s * s / varrho + a2 * varrho / slope) * rho2

    return integrate(integrand, 1.0, inv.r, rel_tol=rel_tol, split_points=inv.t_samples[1:-1]).value


def distortion_closed_form(
    m: MetricSpec,
    weights: Weights,
    alpha: float,
    R: float,
    rel_tol: Optional[float] = None,
) -> float:
    """
    K of the extremal inverse in terms of alpha alone:

        4 pi integral_1^R a b^2 s^2 rho^3 / sqrt(w + alpha) ds
      + 2 pi alpha integral_1^R a rho / sqrt(w + alpha) ds
    """
    s_star, w_min = minimize_weight(m, weights, R)
    delta = alpha + w_min
    if delta < 0.0:
        raise SingularIntegrand("alpha must not be below alpha0", {"alpha": alpha, "alpha0": -w_min})
    a, b2 = weights.a, weights.b ** 2

    def root(base, offset):
        return np.sqrt(weight_gap(m, weights, base, offset, w_min) + delta)

    def stretch(s, base, offset):
        rho = eval_rho(m, s)
        return 4.0 * math.pi * a * b2 * s * s * rho ** 3 / root(base, offset)

    def shear(s, base, offset):
        return a * eval_rho(m, s) / root(base, offset)

    options = dict(rel_tol=rel_tol, split_points=breakpoints(m, 1.0, R), graded_points=(s_star,), offsets=True)
    try:
        first = integrate(stretch, 1.0, R, **options).value
        second = integrate(shear, 1.0, R, **options).value
    except NonFiniteIntegrand as exc:
        raise SingularIntegrand("distortion integrand is singular", {"alpha": alpha, **exc.details}) from exc
    return first + 2.0 * math.pi * alpha * second

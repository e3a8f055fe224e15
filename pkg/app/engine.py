"""
Extremal Engine
Dispatches validated run configurations to the numerical core and renders
the emitted documents
"""

import logging
import math
import time
from typing import Any, Dict

import pandas as pd

from app.core.closed_forms import case_for_metric, compare_with_numeric
from app.core.energy import radial_distortion, radial_energy
from app.core.errors import NonFiniteIntegrand, SingularIntegrand
from app.core.extremal import invert_profile, solve
from app.core.metric import AnnulusPair, MetricSpec, Weights
from app.core.nitsche import alpha0, bound_exponent, classify
from app.core.serialization import (
    frame_to_csv,
    load_profile,
    profile_document,
    profile_to_frame,
    to_json,
)
from app.core.sweep import run_sweep, sweep_grid
from app.core.variation import verify
from app.models import Command, OutputFormat, RunConfig

logger = logging.getLogger(__name__)


class ExtremalEngine:
    """Runs bound / solve / verify / energy / sweep / closed-form requests"""

    def __init__(self, config):
        """
        Initialize the engine

        Args:
            config: Settings object with numerical defaults
        """
        self.config = config
        self.stats = {"runs": 0, "failures": 0, "by_command": {c.value: 0 for c in Command}}
        self._handlers = {
            Command.BOUND: self.bound,
            Command.SOLVE: self.solve,
            Command.VERIFY: self.verify,
            Command.ENERGY: self.energy,
            Command.SWEEP: self.sweep,
            Command.CLOSED_FORM: self.closed_form,
        }
        logger.info(f"Extremal engine ready (samples={config.SAMPLES}, tol={config.REL_TOL:g})")

    def run(self, run_config: RunConfig) -> Any:
        """Execute one command and return its result object"""
        start = time.time()
        self.stats["runs"] += 1
        self.stats["by_command"][run_config.command.value] += 1
        try:
            result = self._handlers[run_config.command](run_config)
        except Exception:
            self.stats["failures"] += 1
            raise
        logger.info(f"{run_config.command.value} finished in {time.time() - start:.3f}s")
        return result

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------
    def bound(self, run_config: RunConfig) -> Dict[str, Any]:
        m = MetricSpec.parse(run_config.metric)
        weights = Weights(run_config.a, run_config.b)
        result: Dict[str, Any] = {
            "metric": m.to_text(),
            "a": weights.a,
            "b": weights.b,
            "R": run_config.R,
        }
        if run_config.r is not None:
            report = classify(m, weights, AnnulusPair(run_config.r, run_config.R), rel_tol=run_config.tol)
            result["r"] = run_config.r
            result.update(report.to_dict())
            return result

        a0, s_star = alpha0(m, weights, run_config.R)
        exponent, flags = bound_exponent(m, weights, run_config.R, run_config.tol)
        result.update({
            "alpha0": a0,
            "s_star": s_star,
            "r_max": math.exp(exponent) if math.isfinite(exponent) else math.inf,
            "flags": flags,
        })
        logger.info(f"bound R={run_config.R:g}: r_max={result['r_max']:.15g}")
        return result

    def solve(self, run_config: RunConfig):
        m = MetricSpec.parse(run_config.metric)
        return solve(
            m,
            Weights(run_config.a, run_config.b),
            AnnulusPair(run_config.r, run_config.R),
            n=run_config.samples,
            rel_tol=run_config.tol,
        )

    def verify(self, run_config: RunConfig) -> Dict[str, Any]:
        solution = self.solve(run_config)
        report = verify(solution.metric, solution.weights, solution)
        if not report.passed:
            failed = [name for name, check in report.checks.items() if not check.passed]
            logger.warning(f"verification failed: {', '.join(failed)}")
        return {"solution": solution.to_dict(include_samples=False), "verification": report.to_dict()}

    def energy(self, run_config: RunConfig) -> Dict[str, Any]:
        m = MetricSpec.parse(run_config.metric)
        weights = Weights(run_config.a, run_config.b)
        profile = load_profile(run_config.profile)
        breakdown = radial_energy(m, weights, profile, rel_tol=run_config.tol)

        result: Dict[str, Any] = {
            "metric": m.to_text(),
            "a": weights.a,
            "b": weights.b,
            "r": profile.r,
            "R": profile.R,
            "energy": breakdown.to_dict(),
        }
        try:
            result["distortion"] = radial_distortion(m, weights, invert_profile(profile), rel_tol=run_config.tol)
        except (NonFiniteIntegrand, SingularIntegrand) as e:
            logger.warning(f"distortion of the inverse profile is not finite: {e.message}")
            result["distortion"] = math.inf
        return result

    def sweep(self, run_config: RunConfig) -> pd.DataFrame:
        cells = sweep_grid(
            run_config.metrics,
            run_config.a_values,
            run_config.b_values,
            run_config.r_values,
            run_config.R_values,
        )
        return run_sweep(cells, samples=run_config.samples, rel_tol=run_config.tol, workers=run_config.workers)

    def closed_form(self, run_config: RunConfig):
        m = MetricSpec.parse(run_config.metric)
        case = case_for_metric(m, run_config.a, run_config.b, run_config.r, run_config.R)
        return compare_with_numeric(case, n=run_config.samples)

    # ------------------------------------------------------------------
    # Rendering
    # ------------------------------------------------------------------
    def render(self, run_config: RunConfig, result: Any) -> str:
        """Text of the emitted document in the requested format"""
        if run_config.format == OutputFormat.JSON:
            if run_config.command == Command.SOLVE:
                return to_json(profile_document(result))
            return to_json(result)
        return frame_to_csv(self._frame(run_config.command, result))

    @staticmethod
    def _frame(command: Command, result: Any) -> pd.DataFrame:
        if command == Command.SWEEP:
            return result
        if command in (Command.SOLVE, Command.CLOSED_FORM):
            return profile_to_frame(result.profile)
        if command == Command.VERIFY:
            checks = result["verification"]["checks"]
            rows = [{"check": name, **check} for name, check in checks.items()]
            return pd.DataFrame(rows, columns=["check", "value", "threshold", "comparison", "passed"])
        if command == Command.ENERGY:
            row = {key: value for key, value in result.items() if key != "energy"}
            row.update({f"energy_{key}": value for key, value in result["energy"].items()})
            return pd.DataFrame([row])
        row = dict(result)
        row["flags"] = ";".join(row.get("flags", []))
        return pd.DataFrame([row])

    def get_stats(self) -> Dict[str, Any]:
        return dict(self.stats)

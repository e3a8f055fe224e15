"""
Simple data models for CLI / API request and response handling
"""

import math
from typing import Dict, Any, Optional, List
from enum import Enum

from app.core.errors import ParseError


class Regime(str, Enum):
    ELASTIC = "elastic"
    CONFORMAL = "conformal"
    NON_ELASTIC = "non_elastic"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


class Command(str, Enum):
    BOUND = "bound"
    SOLVE = "solve"
    VERIFY = "verify"
    ENERGY = "energy"
    SWEEP = "sweep"
    CLOSED_FORM = "closed-form"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


# Parameters each command needs before any computation runs
_REQUIRED = {
    Command.BOUND: ("R",),
    Command.SOLVE: ("r", "R"),
    Command.VERIFY: ("r", "R"),
    Command.ENERGY: ("profile",),
    Command.SWEEP: ("r", "R"),
    Command.CLOSED_FORM: ("r", "R"),
}


def _positive(name: str, value: Any, minimum: float = 0.0, strict: bool = True) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name} must be a number", {name: value}) from exc
    if not math.isfinite(number) or number < minimum or (strict and number == minimum):
        bound = ">" if strict else ">="
        raise ParseError(f"{name} must be finite and {bound} {minimum:g}", {name: value})
    return number


class RunConfig:
    """A validated request for one engine command"""

    def __init__(
        self,
        command: str,
        metric: Any = "const",
        a: Any = 1.0,
        b: Any = 1.0,
        r: Any = None,
        R: Any = None,
        samples: Any = 512,
        tol: Any = 1e-10,
        output: Optional[str] = None,
        format: str = "json",
        profile: Optional[str] = None,
        workers: Any = 1,
    ):
        try:
            self.command = Command(command)
        except ValueError as exc:
            raise ParseError(f"unknown command: {command!r}", {"commands": [c.value for c in Command]}) from exc
        try:
            self.format = OutputFormat(format)
        except ValueError as exc:
            raise ParseError(f"unknown format: {format!r}", {"formats": ["json", "csv"]}) from exc

        self.output = output
        self.profile = profile
        self.samples = int(_positive("samples", samples, minimum=16, strict=False))
        self.tol = _positive("tol", tol)
        if self.tol >= 1e-2:
            raise ParseError("tol must be < 1e-2", {"tol": self.tol})
        self.workers = int(_positive("workers", workers, minimum=1, strict=False))

        if self.command == Command.SWEEP:
            # every sweep parameter is a list; the grid is their Cartesian product
            self.metrics = self._text_list("metric", metric)
            self.a_values = self._number_list("a", a)
            self.b_values = self._number_list("b", b)
            self.r_values = self._number_list("r", r, minimum=1.0)
            self.R_values = self._number_list("R", R, minimum=1.0)
            self.metric, self.a, self.b, self.r, self.R = (
                self.metrics[0], self.a_values[0], self.b_values[0], self.r_values[0], self.R_values[0]
            )
            return

        self.metric = str(metric)
        self.a = _positive("a", a)
        self.b = _positive("b", b)
        self.r = None if r is None else _positive("r", r, minimum=1.0)
        self.R = None if R is None else _positive("R", R, minimum=1.0)

        for name in _REQUIRED[self.command]:
            if getattr(self, name) is None:
                raise ParseError(f"{self.command.value} requires {name}")

    @staticmethod
    def _text_list(name: str, value: Any) -> List[str]:
        items = value if isinstance(value, (list, tuple)) else str(value).split(",")
        items = [str(item).strip() for item in items if str(item).strip()]
        if not items:
            raise ParseError(f"sweep requires at least one {name}")
        return items

    @classmethod
    def _number_list(cls, name: str, value: Any, minimum: float = 0.0) -> List[float]:
        if value is None:
            raise ParseError(f"sweep requires {name}")
        items = value if isinstance(value, (list, tuple)) else cls._text_list(name, value)
        return [_positive(name, item, minimum=minimum) for item in items]

    @classmethod
    def from_dict(cls, command: str, data: Dict[str, Any]) -> "RunConfig":
        """Build from a JSON request body"""
        if not isinstance(data, dict):
            raise ParseError("request body must be a JSON object")
        allowed = {"metric", "a", "b", "r", "R", "samples", "tol", "format", "profile", "workers"}
        unknown = set(data) - allowed
        if unknown:
            raise ParseError("unknown request fields", {"fields": sorted(unknown)})
        return cls(command, **data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        result = {
            "command": self.command.value,
            "metric": self.metric,
            "a": self.a,
            "b": self.b,
            "r": self.r,
            "R": self.R,
            "samples": self.samples,
            "tol": self.tol,
            "format": self.format.value,
        }
        if self.command == Command.SWEEP:
            result.update({
                "metrics": self.metrics,
                "a_values": self.a_values,
                "b_values": self.b_values,
                "r_values": self.r_values,
                "R_values": self.R_values,
                "workers": self.workers,
            })
        if self.profile:
            result["profile"] = self.profile
        return result


class ErrorResponse:
    """Error response rendered on stderr or as an HTTP body"""

    def __init__(self, error: str, message: str, details: Optional[Dict[str, Any]] = None):
        self.error = error
        self.message = message
        self.details = details or {}

    @classmethod
    def from_exception(cls, exc: Exception) -> "ErrorResponse":
        if hasattr(exc, "to_dict"):
            body = exc.to_dict()
            return cls(body["error"], body["message"], body.get("details"))
        return cls("internal_error", str(exc))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "error": self.error,
            "message": self.message,
            "details": self.details,
        }

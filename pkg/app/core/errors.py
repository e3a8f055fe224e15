"""
Error types raised by the numerical core.

Every error carries a short machine-readable ``code`` and a ``details`` dict so
the CLI and the HTTP API can render the same JSON body.
"""

from typing import Any, Dict, Optional


class ExtremalError(Exception):
    """Base class for all engine errors"""

    code = "extremal_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "error": self.code,
            "message": self.message,
            "details": self.details,
        }


class ParseError(ExtremalError, ValueError):
    code = "parse_error"


class OutOfDomain(ExtremalError, ValueError):
    code = "out_of_domain"


class NonPositive(ExtremalError, ValueError):
    code = "non_positive"


class DegenerateGrid(ExtremalError, ValueError):
    code = "degenerate_grid"


class NonMonotone(ExtremalError, ValueError):
    code = "non_monotone"


class NonFiniteIntegrand(ExtremalError, ArithmeticError):
    code = "non_finite_integrand"


class ToleranceNotMet(ExtremalError, ArithmeticError):
    code = "tolerance_not_met"


class SingularIntegrand(ExtremalError, ArithmeticError):
    code = "singular_integrand"


class BracketFailure(ExtremalError, ArithmeticError):
    code = "bracket_failure"


class Infeasible(ExtremalError):
    code = "infeasible"


class InfeasibleCase(Infeasible):
    code = "infeasible_case"


class LambdaOne(ExtremalError, ValueError):
    code = "lambda_one"


class PerturbationLeavesAnnulus(ExtremalError):
    code = "perturbation_leaves_annulus"

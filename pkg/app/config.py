"""
Configuration for the Annulus Extremal Engine
"""

import os

from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Engine Configuration"""

    # Service Configuration
    HOST: str = os.getenv("EXTREMAL_HOST", "0.0.0.0")
    PORT: int = int(os.getenv("EXTREMAL_PORT", "5010"))
    DEBUG: bool = os.getenv("EXTREMAL_DEBUG", "false").lower() == "true"

    # Profile sampling
    SAMPLES: int = int(os.getenv("EXTREMAL_SAMPLES", "512"))
    MIN_SAMPLES: int = 16

    # Quadrature Configuration
    REL_TOL: float = float(os.getenv("EXTREMAL_TOL", "1e-10"))
    ITER_REL_TOL: float = float(os.getenv("EXTREMAL_ITER_TOL", "1e-8"))
    MAX_SUBDIVISIONS: int = int(os.getenv("EXTREMAL_MAX_SUBDIVISIONS", "1000000"))

    # Nitsche bound
    OVERFLOW_EXPONENT: float = float(os.getenv("EXTREMAL_OVERFLOW_EXPONENT", "700.0"))
    FEASIBILITY_SLACK: float = 1e-12

    # Weight minimization
    WEIGHT_GRID_POINTS: int = 1024

    # alpha solve
    BRACKET_MAX_DOUBLINGS: int = 1000

    # Grid energies and perturbations
    GRID_SIZE: int = int(os.getenv("EXTREMAL_GRID_SIZE", "256"))
    PERTURBATION_AMPLITUDES = (0.005, 0.01, 0.02)
    PERTURBATION_SEED: int = int(os.getenv("EXTREMAL_PERTURBATION_SEED", "7"))

    # Verification thresholds
    EL_RESIDUAL_MAX: float = float(os.getenv("EL_RESIDUAL_MAX", "1e-5"))
    FIRST_INTEGRAL_MAX: float = float(os.getenv("FIRST_INTEGRAL_MAX", "1e-6"))
    DUALITY_GAP_MAX: float = float(os.getenv("DUALITY_GAP_MAX", "1e-5"))
    PERTURBATION_SLACK: float = float(os.getenv("PERTURBATION_SLACK", "1e-6"))
    # bound on |fd| / (E eps)
    FIRST_VARIATION_MAX: float = float(os.getenv("FIRST_VARIATION_MAX", "1e-3"))
    ROTATION_MAX: float = 1e-10

    # Sweep
    SWEEP_WORKERS: int = int(os.getenv("EXTREMAL_SWEEP_WORKERS", "1"))

    # Logging
    LOG_LEVEL: str = os.getenv("EXTREMAL_LOG_LEVEL", "INFO")


# Global settings instance
settings = Settings()

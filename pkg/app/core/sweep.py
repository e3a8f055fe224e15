"""
Parameter sweeps over the Cartesian product of metrics, weights and radii.
Infeasible cells become rows with status=infeasible instead of aborting.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.config import settings
from app.core.errors import ExtremalError, Infeasible
from app.core.extremal import solve
from app.core.metric import AnnulusPair, MetricSpec, Weights
from app.models import Regime

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["metric", "a", "b", "r", "R", "status", "alpha", "energy", "distortion", "regime"]

Cell = Tuple[str, float, float, float, float]


def sweep_grid(
    metrics: Sequence[str],
    a_values: Sequence[float],
    b_values: Sequence[float],
    r_values: Sequence[float],
    R_values: Sequence[float],
) -> List[Cell]:
    return list(itertools.product(metrics, a_values, b_values, r_values, R_values))


def evaluate_cell(cell: Cell, samples: Optional[int] = None, rel_tol: Optional[float] = None) -> Dict[str, Any]:
    """One sweep row; never raises for per-instance failures"""
    metric_text, a, b, r, R = cell
    row: Dict[str, Any] = {
        "metric": metric_text, "a": a, "b": b, "r": r, "R": R,
        "status": "ok", "alpha": math.nan, "energy": math.nan, "distortion": math.nan,
        "regime": Regime.UNKNOWN.value,
    }
    try:
        m = MetricSpec.parse(metric_text)
        solution = solve(m, Weights(a, b), AnnulusPair(r, R), n=samples, rel_tol=rel_tol)
    except Infeasible:
        row.update(status="infeasible", regime=Regime.INFEASIBLE.value)
        return row
    except ExtremalError as exc:
        logger.warning(f"sweep cell {cell} failed: {exc.code}: {exc.message}")
        row.update(status=f"error:{exc.code}")
        return row

    row.update(
        alpha=solution.alpha,
        energy=solution.energy,
        distortion=solution.distortion,
        regime=solution.regime.value,
    )
    if solution.critical:
        row["status"] = "critical"
    return row


def run_sweep(
    cells: Sequence[Cell],
    samples: Optional[int] = None,
    rel_tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Evaluate every cell; rows keep the order of ``cells``"""
    workers = settings.SWEEP_WORKERS if workers is None else workers
    task = partial(evaluate_cell, samples=samples, rel_tol=rel_tol)
    logger.info(f"sweeping {len(cells)} instance(s) with {workers} worker(s)")

    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, cells))
    else:
        rows = []
        for index, cell in enumerate(cells, start=1):
            rows.append(task(cell))
            logger.debug(f"sweep progress {index}/{len(cells)}")

    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)

"""
Shared fixtures for the extremal engine tests
"""

import numpy as np
import pandas as pd
import pytest

from app.core.extremal import solve
from app.core.metric import AnnulusPair, MetricSpec, Weights


@pytest.fixture(scope="session")
def identity_case():
    """rho = 1/s, a=2, b=1, r=R=5: the identity is extremal with alpha = 3"""
    m = MetricSpec.power(1.0)
    weights = Weights(2.0, 1.0)
    ann = AnnulusPair(5.0, 5.0)
    return m, weights, ann


@pytest.fixture(scope="session")
def identity_solution(identity_case):
    m, weights, ann = identity_case
    return solve(m, weights, ann)


@pytest.fixture(scope="session")
def nitsche_solution():
    """rho = 1, a=b=1, r=2, R=1.5: a non-elastic instance"""
    m = MetricSpec.constant()
    weights = Weights(1.0, 1.0)
    return solve(m, weights, AnnulusPair(2.0, 1.5))


@pytest.fixture(scope="session")
def exp_table_path(tmp_path_factory):
    """Tabulated rho = exp(-0.3 (s - 1)) on [1, 5]"""
    s = np.linspace(1.0, 5.0, 41)
    path = tmp_path_factory.mktemp("metrics") / "exp_decay.csv"
    pd.DataFrame({"s": s, "rho": np.exp(-0.3 * (s - 1.0))}).to_csv(path, index=False, float_format="%.17g")
    return str(path)


@pytest.fixture(scope="session")
def dip_table():
    """Table whose weight s^2 rho^2 has its minimum at the knot s = 1.5"""
    return MetricSpec.tabulated([1.0, 1.5, 2.0, 2.5, 3.0], [1.0, 0.5, 0.4, 0.5, 0.6])

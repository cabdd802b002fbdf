import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ggmscan.core import FitStats, GaussianModel, PriorGraph
from ggmscan.graphs import full_graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240701)


def random_spd_model(d: int, gen: np.random.Generator, graph: PriorGraph | None = None) -> GaussianModel:
    """A well-conditioned random Gaussian model for scoring tests."""
    a = gen.standard_normal((d, d))
    theta = a @ a.T + d * np.eye(d)
    if graph is not None:
        off = np.where(graph.adjacency == 1, theta, 0.0)
        np.fill_diagonal(off, 0.0)
        off = (off + off.T) / 2.0
        theta = off + np.diag(np.abs(off).sum(axis=1) + 0.5)
    return GaussianModel(gen.standard_normal(d), theta,
                         graph if graph is not None else full_graph(d),
                         0.0, FitStats())

import numpy as np
import pytest

from rendezvous.core import RobotModel
from rendezvous.io import load_scenario, shipped_scenarios
from rendezvous.sim import Scenario
from rendezvous.topology import Topology

BASE_X0 = [[-0.2, 0.0], [-0.1, 0.0], [0.0, 0.0], [0.3, 0.0]]


@pytest.fixture(scope="session")
def shipped():
    return shipped_scenarios()


@pytest.fixture(scope="session")
def load(shipped):
    def _load(name):
        return load_scenario(shipped[name])
    return _load


def base_scenario(q=3.0, r=1.0, bound=0.5, topology=None, **kw) -> Scenario:
    lo, hi = (None, None) if bound is None else (-bound, bound)
    return Scenario(RobotModel.planar(), topology or Topology.default4(), BASE_X0,
                    q, r, lo, hi, **kw)


def scalar_scenario(adjacency, x0, lo=None, hi=None, q=1.0, r=1.0, **kw) -> Scenario:
    return Scenario(RobotModel.scalar(), Topology(np.asarray(adjacency, dtype=float)),
                    x0, q, r, lo, hi, **kw)

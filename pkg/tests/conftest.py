import math

import numpy as np
import pytest

from axiflow.field_core import RigidHelixFlow, StagnationSwirl
from axiflow.lagrange import ArcCurve, axis_length_reparam, integrate_trajectory


@pytest.fixture(scope="session")
def helix():
    return RigidHelixFlow(omega=2.0, W=1.0)


@pytest.fixture(scope="session")
def helix_arc(helix):
    traj = integrate_trajectory(helix, 0.5, 0.0, 0.0, (0.0, 3.0))
    return ArcCurve(axis_length_reparam(traj))


@pytest.fixture(scope="session")
def swirl():
    return StagnationSwirl(alpha=1.0, omega0=1.0)


@pytest.fixture(scope="session")
def swirl_arc(swirl):
    traj = integrate_trajectory(swirl, 1.0, 0.0, 1.0, (0.0, 1.0))
    return ArcCurve(axis_length_reparam(traj))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)

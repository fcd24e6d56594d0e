import numpy as np
import pytest

from prometheus_teleop.kinematics import default_dh_table


@pytest.fixture(scope="session")
def dh():
    return default_dh_table()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_joints(rng, n=1, singular_margin=1e-3):
    """Random configurations away from the wrist singularity."""
    out = []
    while len(out) < n:
        q = rng.uniform(-np.pi, np.pi, 6)
        if abs(np.sin(q[4])) >= singular_margin:
            out.append(q)
    return out if n > 1 else out[0]

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

GOLDEN = json.loads((Path(__file__).parent / "golden" / "golden.json").read_text())


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


def random_stochastic_pair(rng, singular=False, equal_dormant=False):
    """Random valid stochastic-switcher parameters as a ``Stochastic`` spec."""
    from seedbank.strategies import Stochastic

    m_a = rng.uniform(0.5, 4.0)
    m_d = rng.uniform(0.1, 4.0)
    alpha = rng.uniform(0.02, 0.9)
    ws, ds = [], []
    for _ in range(2):
        if singular:
            w = rng.uniform(0.05, 0.95) / (1.0 + m_d / m_a)
            d = 1.0 - w * (1.0 + m_d / m_a)
        else:
            w = rng.uniform(0.05, 0.6)
            d = rng.uniform(0.0, 1.0 - w - 0.05)
        ws.append(w)
        ds.append(d)
    if equal_dormant:
        ws[1], ds[1] = ws[0], ds[0]
    return Stochastic(m_a, m_d, ws[0], ws[1], ds[0], ds[1], alpha)


def random_env(rng):
    from seedbank.linalg_env import BinaryEnvironment

    return BinaryEnvironment(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

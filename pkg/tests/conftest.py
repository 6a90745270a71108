"""Shared fixtures: the hospital databases, the adaptive ZIP/Date/Age strategy
and seeded generators of random mechanisms and strategies."""

from pathlib import Path

import numpy as np
import pytest

from core.formats import load_mechanism, load_strategy
from core.mechanism import Mechanism
from core.strategy import Strategy

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / 'data'
FIXTURES = Path(__file__).resolve().parent / 'fixtures'

TOL = 1e-9


def random_mechanism(rng: np.random.Generator, max_secrets=5, max_obs=3, max_actions=3) -> Mechanism:
    n_sec = int(rng.integers(2, max_secrets + 1))
    n_obs = int(rng.integers(2, max_obs + 1))
    n_act = int(rng.integers(1, max_actions + 1))
    mats = rng.dirichlet(np.ones(n_obs), size=(n_act, n_sec))
    return Mechanism([f"x{i}" for i in range(n_sec)], [f"y{j}" for j in range(n_obs)],
                     [f"a{k}" for k in range(n_act)], mats)


def random_deterministic_mechanism(rng: np.random.Generator, max_secrets=6, max_obs=3,
                                   max_actions=3) -> Mechanism:
    """Every action maps each secret to one observation."""
    n_sec = int(rng.integers(2, max_secrets + 1))
    n_obs = int(rng.integers(2, max_obs + 1))
    n_act = int(rng.integers(1, max_actions + 1))
    mats = np.zeros((n_act, n_sec, n_obs))
    for a in range(n_act):
        mats[a, np.arange(n_sec), rng.integers(n_obs, size=n_sec)] = 1.0
    return Mechanism([f"x{i}" for i in range(n_sec)], [f"y{j}" for j in range(n_obs)],
                     [f"a{k}" for k in range(n_act)], mats)


def random_strategy(rng: np.random.Generator, mech: Mechanism, max_length=3) -> Strategy:
    """Adaptive strategy of length <= max_length; some branches stop early."""

    def grow(depth):
        action = mech.actions[int(rng.integers(len(mech.actions)))]
        if depth == 1:
            return Strategy(action)
        children = {y: grow(depth - 1) for y in mech.observations if rng.random() < 0.7}
        return Strategy(action, children)

    return grow(int(rng.integers(1, max_length + 1)))


def random_prior(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


@pytest.fixture
def medical_db():
    mech, prior = load_mechanism(str(DATA / 'medical-db.json'))
    return mech, (prior if prior is not None else mech.uniform_prior())


@pytest.fixture
def noisy_db():
    mech, prior = load_mechanism(str(DATA / 'noisy-db.json'))
    return mech, (prior if prior is not None else mech.uniform_prior())


@pytest.fixture
def zip_date_age():
    return load_strategy(str(DATA / 'adaptive-strategy.json'))


@pytest.fixture
def random_instances():
    """100 seeded (mechanism, prior, strategy) triples."""
    rng = np.random.default_rng(20140901)
    out = []
    for _ in range(100):
        mech = random_mechanism(rng)
        out.append((mech, random_prior(rng, len(mech.secrets)), random_strategy(rng, mech)))
    return out

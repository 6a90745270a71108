"""
Monte Carlo Simulator

Seeded sampling of attack traces and Monte Carlo estimates of leakage, used
to cross-check the exact computations. Every trace is scored with the exact
Bayes posterior of its observations, so only the outer expectation over
traces is estimated.

Random streams: numpy's PCG64 generator. Trials are split into fixed-size
chunks, chunk i draws from SeedSequence(seed).spawn(n_chunks)[i], and chunk
results are concatenated in chunk order. The estimate therefore depends only
on (seed, trials, chunk_size), not on how many worker threads run the chunks.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .leakage import PRUNE_THRESHOLD, lockstep_profile, max_leakage
from .measures import UncertaintyMeasure, as_probs
from .mechanism import Mechanism, posterior
from .strategy import EMPTY, Strategy, check_against

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int
    chunk_size: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be at least 1")


@dataclass(frozen=True)
class Trace:
    secret: str
    actions: Tuple[str, ...]
    observations: Tuple[str, ...]


@dataclass(frozen=True)
class SimulationResult:
    estimate: float
    std_error: float
    trials: int
    seed: int
    prior_uncertainty: float
    conditional_uncertainty: float

    def to_dict(self) -> Dict[str, object]:
        return {
            'estimate': self.estimate,
            'std_error': self.std_error,
            'trials': self.trials,
            'seed': self.seed,
        }


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_trace(mech: Mechanism, prior, s: Strategy, rng: np.random.Generator) -> Trace:
    """Draws a secret from the prior and plays s until it runs out of actions."""
    p = as_probs(prior)
    x = int(rng.choice(p.size, p=p))
    actions, observations = [], []
    node = s
    while node is not EMPTY:
        row = mech.matrix(node.action)[x]
        y = int(rng.choice(row.size, p=row / row.sum()))
        obs = mech.observations[y]
        actions.append(node.action)
        observations.append(obs)
        node = node.child(obs)
    return Trace(mech.secrets[x], tuple(actions), tuple(observations))


def _trace_groups(mech: Mechanism, p: np.ndarray, s: Strategy, trials: int,
                  rng: np.random.Generator):
    """Samples `trials` traces at once.

    Returns the sampled secret indices and a list of
    (trial indices, observation path, exact posterior) groups, one per
    distinct complete trace, in observation-index order.
    """
    secrets = rng.choice(p.size, size=trials, p=p)
    groups = []

    def descend(idx: np.ndarray, node: Strategy, belief: np.ndarray, path: Tuple[str, ...]):
        matrix = mech.matrix(node.action)
        cdf = np.cumsum(matrix, axis=1)
        cdf /= cdf[:, -1:]
        u = rng.random(idx.size)
        ys = np.argmax(u[:, None] < cdf[secrets[idx]], axis=1)
        for y in np.unique(ys):
            sel = idx[ys == y]
            obs = mech.observations[int(y)]
            _, post = posterior(belief, matrix[:, int(y)])
            sub = node.child(obs)
            if sub is EMPTY:
                groups.append((sel, path + (obs,), post))
            else:
                descend(sel, sub, post, path + (obs,))

    descend(np.arange(trials), s, p, ())
    return secrets, groups


def sample_traces(mech: Mechanism, prior, s: Strategy, trials: int, seed: int) -> List[Trace]:
    check_against(s, mech)
    secrets, groups = _trace_groups(mech, as_probs(prior), s, trials, make_rng(seed))
    paths: List[Optional[Tuple[str, ...]]] = [None] * trials
    for sel, path, _ in groups:
        for i in sel:
            paths[int(i)] = path
    out = []
    for i in range(trials):
        actions, node = [], s
        for obs in paths[i]:
            actions.append(node.action)
            node = node.child(obs)
        out.append(Trace(mech.secrets[int(secrets[i])], tuple(actions), paths[i]))
    return out


def _chunk_values(mech, p, s, measure, trials, seed_seq) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    _, groups = _trace_groups(mech, p, s, trials, rng)
    values = np.empty(trials)
    for sel, _, post in groups:
        values[sel] = measure(post)
    return values


def estimate_leakage(mech: Mechanism, prior, s: Strategy, measure: UncertaintyMeasure,
                     config: SimConfig) -> SimulationResult:
    check_against(s, mech)
    p = as_probs(prior)
    sizes = [config.chunk_size] * (config.trials // config.chunk_size)
    if config.trials % config.chunk_size:
        sizes.append(config.trials % config.chunk_size)
    streams = np.random.SeedSequence(config.seed).spawn(len(sizes))

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        chunks = list(pool.map(lambda job: _chunk_values(mech, p, s, measure, *job), zip(sizes, streams)))
    values = np.concatenate(chunks)

    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    before = measure(p)
    logger.info("Simulated %d traces in %d chunks: leakage %.6f +/- %.6f",
                config.trials, len(sizes), before - mean, se)
    return SimulationResult(before - mean, se, config.trials, config.seed, before, mean)


@dataclass(frozen=True)
class ConvergenceProfile:
    actions: Tuple[str, ...]
    leakages: Tuple[float, ...]
    max_leakage: float

    def gaps(self) -> List[float]:
        return [self.max_leakage - v for v in self.leakages]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'round': range(1, len(self.leakages) + 1),
            'action': [self.actions[r % len(self.actions)] for r in range(len(self.leakages))],
            'leakage': self.leakages,
            'gap': self.gaps(),
        })


def convergence_probe(mech: Mechanism, prior, measure: UncertaintyMeasure, max_rounds: int,
                      node_budget: Optional[int] = None,
                      prune: float = PRUNE_THRESHOLD) -> ConvergenceProfile:
    """Exact leakage of the lock-step strategy a1..ak a1.. truncated at rounds 1..max_rounds."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    values = lockstep_profile(mech, prior, mech.actions, measure, max_rounds,
                              prune=prune, node_budget=node_budget)
    return ConvergenceProfile(tuple(mech.actions), tuple(values), max_leakage(mech, prior, measure))

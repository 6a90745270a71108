"""
Uncertainty Measures Module

Beliefs over a finite secret set, the concave uncertainty measures evaluated on
them (Shannon, error, guessing, variance or a user-supplied function) and the
proper scoring rules induced by a measure through its supporting hyperplanes.

All logarithms are base 2; results are in bits for Shannon entropy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import (BoundaryForecast, InvalidBelief, MissingSecretValues,
                     NoSubgradient, UnsupportedMeasure)

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
LN2 = math.log(2.0)


class Belief:
    """A probability distribution over secrets, indexed like the mechanism's secrets."""

    __slots__ = ('probs',)

    def __init__(self, probs: Iterable[float], tol: float = TOLERANCE):
        try:
            arr = np.array(probs, dtype=float)
        except (TypeError, ValueError) as e:
            raise InvalidBelief(f"Belief entries must be numbers: {e}") from e
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidBelief("Belief must be a nonempty one-dimensional vector.")
        if not np.all(np.isfinite(arr)):
            raise InvalidBelief("Belief entries must be finite.")
        if np.any(arr < 0):
            raise InvalidBelief(f"Belief has negative entries: {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > tol:
            raise InvalidBelief(f"Belief entries sum to {total!r}, not 1.")
        arr.setflags(write=False)
        self.probs = arr

    @classmethod
    def uniform(cls, n: int) -> 'Belief':
        if n < 1:
            raise InvalidBelief("Uniform belief needs at least one secret.")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, index: int) -> 'Belief':
        arr = np.zeros(n)
        arr[index] = 1.0
        return cls(arr)

    @classmethod
    def uniform_on(cls, n: int, support: Iterable[int]) -> 'Belief':
        idx = sorted(set(support))
        if not idx:
            raise InvalidBelief("Support must be nonempty.")
        arr = np.zeros(n)
        arr[idx] = 1.0 / len(idx)
        return cls(arr)

    def support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.probs > 0))

    def is_interior(self) -> bool:
        return bool(np.all(self.probs > 0))

    def mix(self, other: 'Belief', lam: float) -> 'Belief':
        return Belief(lam * self.probs + (1.0 - lam) * other.probs)

    def __len__(self):
        return int(self.probs.size)

    def __getitem__(self, i):
        return float(self.probs[i])

    def __iter__(self):
        return iter(self.probs.tolist())

    def __eq__(self, other):
        if not isinstance(other, Belief) or len(other) != len(self):
            return NotImplemented
        return bool(np.allclose(self.probs, other.probs, rtol=0.0, atol=TOLERANCE))

    __hash__ = None

    def __repr__(self):
        return f"Belief({self.probs.tolist()})"


def as_probs(belief) -> np.ndarray:
    """Accepts a Belief or any array-like and returns the probability vector."""
    if isinstance(belief, Belief):
        return belief.probs
    return Belief(belief).probs


# --- Built-in measures ---

def shannon_entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def error_entropy(p: np.ndarray) -> float:
    return float(1.0 - p.max())


def _guess_ranks(p: np.ndarray) -> np.ndarray:
    # descending probability, ties to the smallest secret index
    order = np.argsort(-p, kind='stable')
    ranks = np.empty(p.size)
    ranks[order] = np.arange(1, p.size + 1)
    return ranks


def guessing_entropy(p: np.ndarray) -> float:
    return float(np.dot(_guess_ranks(p), p))


def secret_variance(p: np.ndarray, values: np.ndarray) -> float:
    mean = float(np.dot(p, values))
    return float(np.dot(p, (values - mean) ** 2))


def _shannon_subgradient(q: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return -(np.log2(q) + 1.0 / LN2)


def _error_subgradient(q: np.ndarray) -> np.ndarray:
    c = np.zeros(q.size)
    c[int(np.argmax(q))] = -1.0
    return c


def _variance_subgradient(q: np.ndarray, values: np.ndarray) -> np.ndarray:
    mean = float(np.dot(q, values))
    return values ** 2 - 2.0 * mean * values


@dataclass(frozen=True, eq=False)
class UncertaintyMeasure:
    """A concave, continuous function on beliefs.

    value_fn and subgradient_fn take the raw probability vector. For the
    variance measure the secret encoding is already bound into both.
    """
    kind: str
    value_fn: Callable[[np.ndarray], float]
    secret_values: Optional[Tuple[float, ...]] = None
    subgradient_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    def __call__(self, probs) -> float:
        return float(self.value_fn(np.asarray(probs, dtype=float)))


def shannon() -> UncertaintyMeasure:
    return UncertaintyMeasure('shannon', shannon_entropy, subgradient_fn=_shannon_subgradient)


def error() -> UncertaintyMeasure:
    return UncertaintyMeasure('error', error_entropy, subgradient_fn=_error_subgradient)


def guessing() -> UncertaintyMeasure:
    return UncertaintyMeasure('guessing', guessing_entropy, subgradient_fn=_guess_ranks)


def variance(secret_values: Optional[Sequence[float]]) -> UncertaintyMeasure:
    if secret_values is None:
        raise MissingSecretValues("The variance measure needs a numeric value for every secret.")
    values = np.array(secret_values, dtype=float)
    values.setflags(write=False)
    return UncertaintyMeasure(
        'variance',
        lambda p: secret_variance(p, values),
        secret_values=tuple(values.tolist()),
        subgradient_fn=lambda q: _variance_subgradient(q, values),
    )


def custom(value_fn: Callable[[np.ndarray], float],
           subgradient_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
           name: Optional[str] = None) -> UncertaintyMeasure:
    return UncertaintyMeasure('custom', value_fn, subgradient_fn=subgradient_fn, name=name)


MEASURES: Dict[str, Callable[..., UncertaintyMeasure]] = {
    'shannon': shannon,
    'error': error,
    'guessing': guessing,
    'variance': variance,
}


def get_measure(name: str, secret_values: Optional[Sequence[float]] = None) -> UncertaintyMeasure:
    """Looks up a built-in measure by name."""
    key = (name or '').strip().lower()
    if key not in MEASURES:
        raise UnsupportedMeasure(f"Unknown measure '{name}'. Choose from: {', '.join(MEASURES)}")
    if key == 'variance':
        return variance(secret_values)
    return MEASURES[key]()


def uncertainty_eval(measure: UncertaintyMeasure, belief) -> float:
    p = as_probs(belief)
    if measure.secret_values is not None and len(measure.secret_values) != p.size:
        raise MissingSecretValues(
            f"Measure has {len(measure.secret_values)} secret values but the belief has {p.size} entries.")
    return measure(p)


# --- Concavity probe ---

@dataclass(frozen=True)
class ConcavityReport:
    worst_violation: float
    samples: int
    seed: int
    witness: Optional[Tuple[float, Tuple[float, ...], Tuple[float, ...]]] = None

    @property
    def concave(self) -> bool:
        return self.worst_violation <= TOLERANCE


def _probe_point(rng: np.random.Generator, n: int) -> np.ndarray:
    if rng.random() < 0.25:
        p = np.zeros(n)
        p[rng.integers(n)] = 1.0
        return p
    return rng.dirichlet(np.ones(n))


def concavity_probe(measure: UncertaintyMeasure, samples: int, seed: int,
                    size: Optional[int] = None) -> ConcavityReport:
    """Reports the largest observed value of lam*U(p) + (1-lam)*U(q) - U(lam*p + (1-lam)*q).

    Probes mix Dirichlet(1) interior points with simplex vertices.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if size is None:
        if measure.secret_values is None:
            raise ValueError("size is required for measures without secret values")
        size = len(measure.secret_values)

    rng = np.random.default_rng(seed)
    worst = -math.inf
    witness = None
    for _ in range(samples):
        p = _probe_point(rng, size)
        q = _probe_point(rng, size)
        lam = float(rng.random())
        mixed = lam * p + (1.0 - lam) * q
        gap = lam * measure(p) + (1.0 - lam) * measure(q) - measure(mixed)
        if gap > worst:
            worst = gap
            witness = (lam, tuple(p.tolist()), tuple(q.tolist()))
    logger.debug("Concavity probe for %s: worst violation %.3e over %d samples",
                 measure.label, worst, samples)
    return ConcavityReport(float(worst), samples, seed, witness)


# --- Proper scoring rules ---

@dataclass(frozen=True, eq=False)
class ScoringRule:
    """S(x_i, q) = U(q) + c_i - <c, q> for a subgradient c of U at q."""
    base_measure: UncertaintyMeasure
    subgradient_fn: Callable[[np.ndarray], np.ndarray]

    def scores(self, forecast) -> np.ndarray:
        q = as_probs(forecast)
        if not np.all(q > 0):
            raise BoundaryForecast(f"Forecast {q.tolist()} lies on the boundary of the simplex.")
        c = np.asarray(self.subgradient_fn(q), dtype=float)
        return self.base_measure(q) + c - float(np.dot(c, q))

    def score(self, secret_index: int, forecast) -> float:
        return float(self.scores(forecast)[secret_index])


def psr_from_measure(measure: UncertaintyMeasure) -> ScoringRule:
    if measure.subgradient_fn is None:
        raise NoSubgradient(f"Measure '{measure.label}' has no subgradient function.")
    return ScoringRule(measure, measure.subgradient_fn)


def expected_score(rule: ScoringRule, truth, forecast) -> float:
    p = as_probs(truth)
    q = as_probs(forecast)
    if p.size != q.size:
        raise InvalidBelief(f"Truth has {p.size} entries, forecast has {q.size}.")
    return float(np.dot(p, rule.scores(q)))

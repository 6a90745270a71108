"""
Mechanism Model Module

An action-based randomization mechanism: ordered secret, observation and
action alphabets plus one |secrets| x |observations| stochastic matrix per
action. Provides validation, Bayesian belief updates, the indistinguishability
quotient and a few constructors (action-observable lift, function-of-secret
devices with additive integer noise).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import (Any, Callable, Dict, Iterable, List, Mapping, Optional,
                    Sequence, Tuple, Union)

import numpy as np

from .errors import (InvalidMechanism, UnknownAction, UnknownObservation,
                     ZeroProbabilityObservation)
from .measures import TOLERANCE, Belief, as_probs

logger = logging.getLogger(__name__)

MatrixInput = Union[np.ndarray, Mapping[str, Any], Sequence[Any]]


def _labels(values: Iterable[Any], what: str) -> Tuple[str, ...]:
    labels = tuple(str(v).strip() for v in values)
    if not labels:
        raise InvalidMechanism(f"The {what} set must be nonempty.")
    if len(set(labels)) != len(labels):
        dupes = sorted({v for v in labels if labels.count(v) > 1})
        raise InvalidMechanism(f"Duplicate {what} labels: {dupes}")
    return labels


class Mechanism:
    """Secrets X, observations Y, actions Act and the matrices p_a(y|x).

    Construction checks shapes and labels only; stochasticity is reported by
    validate() so that broken files can still be loaded and diagnosed.
    """

    def __init__(self, secrets: Iterable[Any], observations: Iterable[Any],
                 actions: Iterable[Any], matrices: MatrixInput,
                 secret_values: Optional[Sequence[float]] = None):
        self.secrets = _labels(secrets, 'secret')
        self.observations = _labels(observations, 'observation')
        self.actions = _labels(actions, 'action')

        if isinstance(matrices, Mapping):
            missing = [a for a in self.actions if a not in matrices]
            if missing:
                raise InvalidMechanism(f"No matrix given for actions: {missing}")
            stacked = [np.asarray(matrices[a], dtype=float) for a in self.actions]
        else:
            stacked = list(np.asarray(matrices, dtype=float))
        try:
            arr = np.array(stacked, dtype=float)
        except ValueError as e:
            raise InvalidMechanism(f"Ragged matrices: {e}") from e

        expected = (len(self.actions), len(self.secrets), len(self.observations))
        if arr.shape != expected:
            raise InvalidMechanism(
                f"Matrices have shape {arr.shape}, expected (actions, secrets, observations) = {expected}")
        if not np.all(np.isfinite(arr)):
            raise InvalidMechanism("Matrix entries must be finite numbers.")
        arr.setflags(write=False)
        self.matrices = arr

        if secret_values is not None:
            values = tuple(float(v) for v in secret_values)
            if len(values) != len(self.secrets):
                raise InvalidMechanism(
                    f"{len(values)} secret values given for {len(self.secrets)} secrets.")
            self.secret_values: Optional[Tuple[float, ...]] = values
        else:
            self.secret_values = None

        self._action_idx = {a: i for i, a in enumerate(self.actions)}
        self._obs_idx = {y: i for i, y in enumerate(self.observations)}
        self._secret_idx = {x: i for i, x in enumerate(self.secrets)}

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.matrices.shape

    def action_index(self, action: str) -> int:
        try:
            return self._action_idx[action]
        except KeyError:
            raise UnknownAction(f"Unknown action '{action}'. Known actions: {list(self.actions)}") from None

    def observation_index(self, obs: str) -> int:
        try:
            return self._obs_idx[obs]
        except KeyError:
            raise UnknownObservation(f"Unknown observation '{obs}'.") from None

    def secret_index(self, secret: str) -> int:
        try:
            return self._secret_idx[secret]
        except KeyError:
            raise InvalidMechanism(f"Unknown secret '{secret}'.") from None

    def matrix(self, action: str) -> np.ndarray:
        return self.matrices[self.action_index(action)]

    def uniform_prior(self) -> Belief:
        return Belief.uniform(len(self.secrets))

    def __eq__(self, other):
        if not isinstance(other, Mechanism):
            return NotImplemented
        return (self.secrets == other.secrets
                and self.observations == other.observations
                and self.actions == other.actions
                and self.secret_values == other.secret_values
                and bool(np.allclose(self.matrices, other.matrices, rtol=0.0, atol=1e-12)))

    __hash__ = None

    def __repr__(self):
        a, x, y = self.shape
        return f"Mechanism(|X|={x}, |Y|={y}, |Act|={a})"


# --- Validation ---

@dataclass(frozen=True)
class RowViolation:
    action: str
    secret: str
    row_sum: float
    min_entry: float

    def __str__(self):
        text = f"action {self.action}, secret {self.secret}: row sum {self.row_sum:.12g}"
        if self.min_entry < 0:
            text += f", negative entry {self.min_entry:.12g}"
        return text


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[RowViolation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> List[str]:
        return [str(v) for v in self.violations]


def validate(mech: Mechanism, tol: float = TOLERANCE) -> ValidationReport:
    """Lists every row that has a negative entry or does not sum to 1."""
    violations = []
    sums = mech.matrices.sum(axis=2)
    mins = mech.matrices.min(axis=2)
    for a, action in enumerate(mech.actions):
        for x, secret in enumerate(mech.secrets):
            row_sum = float(sums[a, x])
            min_entry = float(mins[a, x])
            if min_entry < 0 or abs(row_sum - 1.0) > tol:
                violations.append(RowViolation(action, secret, row_sum, min_entry))
    if violations:
        logger.info("Mechanism has %d invalid rows", len(violations))
    return ValidationReport(tuple(violations))


def is_deterministic(mech: Mechanism, tol: float = TOLERANCE) -> bool:
    m = mech.matrices
    return bool(np.all((np.abs(m) <= tol) | (np.abs(m - 1.0) <= tol)))


# --- Bayesian updates ---

def observation_dist(mech: Mechanism, belief, action: str) -> np.ndarray:
    """Returns y -> sum_x belief(x) p_a(y|x), indexed like mech.observations."""
    p = as_probs(belief)
    return p @ mech.matrix(action)


def posterior(p: np.ndarray, column: np.ndarray) -> Tuple[float, np.ndarray]:
    """Unnormalized-safe Bayes step on raw vectors: returns (p(y), posterior)."""
    joint = p * column
    mass = float(joint.sum())
    if mass <= 0.0:
        return 0.0, joint
    return mass, joint / mass


def belief_update(mech: Mechanism, belief, action: str, obs: str) -> Belief:
    p = as_probs(belief)
    column = mech.matrix(action)[:, mech.observation_index(obs)]
    mass, post = posterior(p, column)
    if mass <= 0.0:
        raise ZeroProbabilityObservation(
            f"Observation '{obs}' has probability 0 after action '{action}' under this belief.")
    return Belief(post)


# --- Indistinguishability ---

@dataclass(frozen=True)
class Partition:
    classes: Tuple[Tuple[int, ...], ...]
    class_of: Tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.classes)

    def representatives(self) -> Tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    def class_masses(self, belief) -> np.ndarray:
        p = as_probs(belief)
        return np.array([p[list(c)].sum() for c in self.classes])

    def labelled(self, mech: Mechanism) -> List[List[str]]:
        return [[mech.secrets[i] for i in c] for c in self.classes]


def indistinguishability_classes(mech: Mechanism, tol: float = TOLERANCE,
                                 actions: Optional[Sequence[str]] = None) -> Partition:
    """Groups secrets whose rows agree in every (selected) action matrix.

    Rows are concatenated across actions. Each secret joins the first class
    whose representative (its first member) lies within tol in every entry;
    otherwise it opens a new class.
    """
    if actions is None:
        sel = mech.matrices
    else:
        sel = mech.matrices[[mech.action_index(a) for a in actions]]
    n = len(mech.secrets)
    rows = np.transpose(sel, (1, 0, 2)).reshape(n, -1)

    anchors = np.empty_like(rows)
    members: List[List[int]] = []
    class_of = []
    for x in range(n):
        if members:
            gaps = np.abs(anchors[:len(members)] - rows[x]).max(axis=1)
            hits = np.flatnonzero(gaps <= tol)
        else:
            hits = ()
        if len(hits):
            cls = int(hits[0])
        else:
            cls = len(members)
            anchors[cls] = rows[x]
            members.append([])
        members[cls].append(x)
        class_of.append(cls)
    logger.debug("Indistinguishability quotient: %d secrets, %d classes", n, len(members))
    return Partition(tuple(tuple(m) for m in members), tuple(class_of))


# --- Constructors ---

def lift_actions_observable(mech: Mechanism, separator: str = ':') -> Mechanism:
    """Makes the played action part of every observation: Y' = Act x Y."""
    n_act, n_sec, n_obs = mech.shape
    observations = [f"{a}{separator}{y}" for a in mech.actions for y in mech.observations]
    lifted = np.zeros((n_act, n_sec, n_act * n_obs))
    for a in range(n_act):
        lifted[a, :, a * n_obs:(a + 1) * n_obs] = mech.matrices[a]
    return Mechanism(mech.secrets, observations, mech.actions, lifted, mech.secret_values)


def uniform_offset_noise(radius: int) -> Dict[int, float]:
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    weight = 1.0 / (2 * radius + 1)
    return {r: weight for r in range(-radius, radius + 1)}


def binomial_noise(trials: int, p: float = 0.5) -> Dict[int, float]:
    """Pmf of a Binomial(trials, p) offset."""
    if trials < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("binomial noise needs trials >= 0 and 0 <= p <= 1")
    return {k: math.comb(trials, k) * p ** k * (1.0 - p) ** (trials - k) for k in range(trials + 1)}


def _sort_labels(values: Iterable[Any]) -> List[Any]:
    distinct = list(dict.fromkeys(values))
    try:
        return sorted(distinct)
    except TypeError:
        return distinct


def function_mechanism(secrets: Sequence[Any], actions: Sequence[Any],
                       fn: Callable[[Any, Any], Any],
                       noise: Optional[Mapping[int, float]] = None,
                       secret_values: Optional[Sequence[float]] = None) -> Mechanism:
    """Device model p_m(y|k) = Pr(fn(k, m) + N = y).

    Without noise the mechanism is deterministic. With noise the outputs of fn
    must be integers and N is drawn from the given offset pmf.
    """
    outputs = [[fn(k, m) for k in secrets] for m in actions]
    if noise is None:
        observed = _sort_labels(v for row in outputs for v in row)
        index = {v: j for j, v in enumerate(observed)}
        mats = np.zeros((len(actions), len(secrets), len(observed)))
        for a, row in enumerate(outputs):
            for x, v in enumerate(row):
                mats[a, x, index[v]] = 1.0
    else:
        offsets = {int(r): float(w) for r, w in noise.items() if w > 0}
        observed = sorted({int(v) + r for row in outputs for v in row for r in offsets})
        index = {v: j for j, v in enumerate(observed)}
        mats = np.zeros((len(actions), len(secrets), len(observed)))
        for a, row in enumerate(outputs):
            for x, v in enumerate(row):
                for r, w in offsets.items():
                    mats[a, x, index[int(v) + r]] += w
    return Mechanism(secrets, observed, actions, mats, secret_values)

"""
Leakage Module

Exact leakage of finite strategies through the attack tree they induce,
maximum leakage through the indistinguishability quotient, closed-form and
searched capacities, and the one-step chain decomposition of leakage.

Sums over observations always run in observation-index order, so repeated
evaluations are bit-identical.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import BudgetExceeded, UnsupportedMeasure
from .measures import TOLERANCE, Belief, UncertaintyMeasure, as_probs
from .mechanism import Mechanism, Partition, indistinguishability_classes
from .strategy import EMPTY, Strategy, check_against

logger = logging.getLogger(__name__)

PRUNE_THRESHOLD = 1e-12
CLOSED_FORM_CAPACITY = ('shannon', 'error')


class _NodeCounter:
    def __init__(self, budget: Optional[int]):
        self.budget = budget
        self.count = 0

    def tick(self, n: int = 1):
        self.count += n
        if self.budget is not None and self.count > self.budget:
            raise BudgetExceeded(f"Attack tree exceeds the budget of {self.budget} nodes.")


def _branches(mech: Mechanism, p: np.ndarray, action: str, prune: float):
    """(obs index, p_a(y), posterior) for every observation with p_a(y) >= prune."""
    joint = p[:, None] * mech.matrix(action)
    masses = joint.sum(axis=0)
    for y in range(masses.size):
        mass = float(masses[y])
        if mass >= prune and mass > 0.0:
            yield y, mass, joint[:, y] / mass


# --- Attack trees ---

@dataclass
class AttackNode:
    history: Tuple[Tuple[str, str], ...]
    belief: np.ndarray
    weight: float
    action: Optional[str] = None
    arcs: List['AttackArc'] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.arcs


@dataclass
class AttackArc:
    observation: str
    probability: float
    target: AttackNode


@dataclass
class AttackTree:
    root: AttackNode
    secrets: Tuple[str, ...]

    def nodes(self) -> Iterator[AttackNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(arc.target for arc in reversed(node.arcs))

    def leaves(self) -> List[AttackNode]:
        return [n for n in self.nodes() if n.is_leaf]

    def total_leaf_weight(self) -> float:
        return float(sum(leaf.weight for leaf in self.leaves()))

    def conditional_uncertainty(self, measure: UncertaintyMeasure) -> float:
        return float(sum(leaf.weight * measure(leaf.belief) for leaf in self.leaves()))


def build_attack_tree(mech: Mechanism, prior, s: Strategy,
                      prune: float = PRUNE_THRESHOLD,
                      node_budget: Optional[int] = None) -> AttackTree:
    """Expands s from the prior; zero-probability branches are dropped with their subtrees."""
    check_against(s, mech)
    p = as_probs(prior)
    counter = _NodeCounter(node_budget)

    def expand(node: AttackNode, strat: Strategy):
        node.action = strat.action
        for y, mass, post in _branches(mech, node.belief, strat.action, prune):
            counter.tick()
            obs = mech.observations[y]
            child = AttackNode(node.history + ((strat.action, obs),), post, node.weight * mass)
            node.arcs.append(AttackArc(obs, mass, child))
            sub = strat.child(obs)
            if sub is not EMPTY:
                expand(child, sub)

    root = AttackNode((), np.array(p), 1.0)
    expand(root, s)
    logger.debug("Attack tree built: %d nodes", counter.count + 1)
    return AttackTree(root, mech.secrets)


# --- Leakage ---

@dataclass(frozen=True)
class LeakageReport:
    measure: str
    prior_uncertainty: float
    conditional_uncertainty: float
    leakage: float
    strategy_length: int
    trace_count: int

    def to_dict(self) -> Dict[str, object]:
        return {
            'measure': self.measure,
            'prior_uncertainty': self.prior_uncertainty,
            'conditional_uncertainty': self.conditional_uncertainty,
            'leakage': self.leakage,
            'strategy_length': self.strategy_length,
            'trace_count': self.trace_count,
        }


def _conditional(mech, p, strat, measure, prune, counter) -> Tuple[float, int]:
    total = 0.0
    traces = 0
    for y, mass, post in _branches(mech, p, strat.action, prune):
        counter.tick()
        sub = strat.child(mech.observations[y])
        if sub is EMPTY:
            total += mass * measure(post)
            traces += 1
        else:
            value, count = _conditional(mech, post, sub, measure, prune, counter)
            total += mass * value
            traces += count
    return total, traces


def conditional_uncertainty(mech: Mechanism, prior, s, measure: UncertaintyMeasure,
                            prune: float = PRUNE_THRESHOLD,
                            node_budget: Optional[int] = None) -> float:
    """U_s(X|Y); the empty strategy observes nothing and returns U(prior)."""
    p = as_probs(prior)
    if s is EMPTY:
        return measure(p)
    value, _ = _conditional(mech, p, s, measure, prune, _NodeCounter(node_budget))
    return value


def leakage(mech: Mechanism, prior, s: Strategy, measure: UncertaintyMeasure,
            prune: float = PRUNE_THRESHOLD,
            node_budget: Optional[int] = None) -> LeakageReport:
    check_against(s, mech)
    p = as_probs(prior)
    counter = _NodeCounter(node_budget)
    before = measure(p)
    after, traces = _conditional(mech, p, s, measure, prune, counter)
    logger.debug("Leakage of a length-%d strategy: %d traces, %d nodes", s.length, traces, counter.count)
    return LeakageReport(measure.label, before, after, before - after, s.length, traces)


def leakage_value(mech: Mechanism, prior, s, measure: UncertaintyMeasure, **kwargs) -> float:
    if s is EMPTY:
        return 0.0
    p = as_probs(prior)
    return measure(p) - conditional_uncertainty(mech, p, s, measure, **kwargs)


def lockstep_profile(mech: Mechanism, prior, actions: Sequence[str], measure: UncertaintyMeasure,
                     rounds: int, prune: float = PRUNE_THRESHOLD,
                     node_budget: Optional[int] = None) -> List[float]:
    """Leakage of [a1, ..., ar] for r = 1..rounds, where the list cycles through `actions`.

    The frontier of beliefs is advanced one round at a time. Traces that end in
    the same belief are merged; their continuations are identical, so the
    values are those of the uncoalesced tree.
    """
    p = as_probs(prior)
    before = measure(p)
    frontier: Dict[bytes, Tuple[float, np.ndarray]] = {b'': (1.0, np.array(p))}
    counter = _NodeCounter(node_budget)
    profile = []
    for r in range(rounds):
        action = actions[r % len(actions)]
        nxt: Dict[bytes, Tuple[float, np.ndarray]] = {}
        for weight, belief in frontier.values():
            for _, mass, post in _branches(mech, belief, action, prune):
                counter.tick()
                key = np.round(post, 12).tobytes()
                if key in nxt:
                    nxt[key] = (nxt[key][0] + weight * mass, nxt[key][1])
                else:
                    nxt[key] = (weight * mass, post)
        frontier = nxt
        after = sum(weight * measure(belief) for weight, belief in frontier.values())
        profile.append(before - after)
        logger.debug("Lock-step round %d: %d distinct beliefs", r + 1, len(frontier))
    return profile


# --- Maximum leakage and capacities ---

def _quotient_uncertainty(p: np.ndarray, partition: Partition, measure: UncertaintyMeasure) -> float:
    total = 0.0
    for members in partition.classes:
        idx = list(members)
        mass = float(p[idx].sum())
        if mass <= 0.0:
            continue
        cond = np.zeros(p.size)
        cond[idx] = p[idx] / mass
        total += mass * measure(cond)
    return total


def max_leakage(mech: Mechanism, prior, measure: UncertaintyMeasure,
                tol: float = TOLERANCE, partition: Optional[Partition] = None) -> float:
    """I(X;[X]) = U(X) - U(X|[X]), the supremum of leakage over all strategies."""
    p = as_probs(prior)
    partition = partition or indistinguishability_classes(mech, tol)
    return measure(p) - _quotient_uncertainty(p, partition, measure)


def capacity(mech: Mechanism, measure: Union[str, UncertaintyMeasure], tol: float = TOLERANCE) -> float:
    """Closed forms in the number K of indistinguishability classes."""
    kind = measure if isinstance(measure, str) else measure.kind
    if kind not in CLOSED_FORM_CAPACITY:
        raise UnsupportedMeasure(f"No closed-form capacity for the '{kind}' measure; use the search instead.")
    K = indistinguishability_classes(mech, tol).K
    if kind == 'shannon':
        return float(np.log2(K))
    return 1.0 - 1.0 / K


@dataclass(frozen=True)
class CapacityResult:
    prior: Belief
    value: float
    restarts: int
    seed: int


def _directions(order: np.ndarray, K: int) -> Iterator[np.ndarray]:
    # single transfers between two classes
    for i in range(K):
        for j in range(K):
            if i != j:
                d = np.zeros(K)
                d[i] = -1.0
                d[j] = 1.0
                yield d
    # flatten: the k heaviest classes feed the m lightest
    for k in range(1, K):
        for m in range(1, K - k + 1):
            d = np.zeros(K)
            d[order[:k]] = -1.0 / k
            d[order[K - m:]] = 1.0 / m
            yield d


def _hill_climb(objective, w: np.ndarray, step: float = 0.25,
                min_step: float = 1e-10, max_iter: int = 20_000) -> Tuple[np.ndarray, float]:
    K = w.size
    value = objective(w)
    for _ in range(max_iter):
        if step < min_step:
            break
        order = np.argsort(-w, kind='stable')
        best_value, best_w = value, None
        for d in _directions(order, K):
            neg = d < 0
            room = float(np.min(w[neg] / -d[neg]))
            move = min(step, room)
            if move <= 0.0:
                continue
            cand = np.clip(w + move * d, 0.0, None)
            cand /= cand.sum()
            v = objective(cand)
            if v > best_value + 1e-15:
                best_value, best_w = v, cand
        if best_w is None:
            step /= 2.0
        else:
            value, w = best_value, best_w
            step = min(2.0 * step, 0.5)
    return w, value


def capacity_search(mech: Mechanism, measure: UncertaintyMeasure, restarts: int = 32,
                    seed: int = 0, tol: float = TOLERANCE) -> CapacityResult:
    """Maximizes I(X;[X]) over priors supported on one representative per class."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    partition = indistinguishability_classes(mech, tol)
    reps = list(partition.representatives())
    n = len(mech.secrets)
    K = len(reps)

    def to_prior(w):
        p = np.zeros(n)
        p[reps] = w
        return p

    # on such priors every class posterior is a point mass
    point_values = np.array([measure(to_prior(np.eye(K)[c])) for c in range(K)])

    def objective(w):
        return measure(to_prior(w)) - float(np.dot(w, point_values))

    rng = np.random.default_rng(seed)
    best_w, best_value = None, -np.inf
    for r in range(restarts):
        start = rng.dirichlet(np.ones(K)) if K > 1 else np.ones(1)
        w, value = _hill_climb(objective, start)
        logger.debug("Capacity restart %d: %.12g", r, value)
        if value > best_value:
            best_w, best_value = w, value
    prior = to_prior(best_w)
    return CapacityResult(Belief(prior / prior.sum()), float(best_value), restarts, seed)


# --- Chain decomposition ---

@dataclass(frozen=True)
class ChainTerm:
    observation: str
    probability: float
    continuation: float


@dataclass(frozen=True)
class ChainDecomposition:
    head_action: str
    head: float
    terms: Tuple[ChainTerm, ...]

    @property
    def recombined(self) -> float:
        return self.head + sum(t.probability * t.continuation for t in self.terms)


def chain_decompose(mech: Mechanism, prior, s: Strategy, measure: UncertaintyMeasure,
                    prune: float = PRUNE_THRESHOLD) -> ChainDecomposition:
    """I_s(p) = I_a(p) + sum_y p_a(y) I_{s_y}(p^{ay}), with a the root action of s."""
    check_against(s, mech)
    p = as_probs(prior)
    before = measure(p)
    after = 0.0
    terms = []
    for y, mass, post in _branches(mech, p, s.action, prune):
        after += mass * measure(post)
        obs = mech.observations[y]
        terms.append(ChainTerm(obs, mass, leakage_value(mech, post, s.child(obs), measure, prune=prune)))
    return ChainDecomposition(s.action, before - after, tuple(terms))

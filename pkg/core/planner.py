"""
Optimal Strategy Planner

Finite-horizon backward induction on the decision process induced by a
mechanism and a prior. A decision node is a belief with a number of remaining
moves; its value is the best, over actions, of the immediate gain I_a(p) plus
the probability-weighted values of the successor beliefs. Only the chosen
action's successors are retained in the plan.

An exhaustive enumeration of complete strategies is provided as an independent
oracle for small instances.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import BudgetExceeded, InvalidHorizon, TooManyStrategies
from .leakage import PRUNE_THRESHOLD, leakage_value
from .measures import UncertaintyMeasure, as_probs
from .mechanism import Mechanism
from .strategy import Strategy

logger = logging.getLogger(__name__)

NODE_BUDGET = 10_000_000
ORACLE_LIMIT = 100_000
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MdpSize:
    decision_nodes: int
    time_space: int


def mdp_size_estimate(mech: Mechanism, horizon: int) -> MdpSize:
    """Bounds (|Y||Act|)^(l+1) - 1 on decision nodes and |X| (|Y||Act|)^(l+1) on time and space."""
    if horizon < 0:
        raise InvalidHorizon("horizon must be nonnegative")
    n_act, n_sec, n_obs = mech.shape
    fan = (n_obs * n_act) ** (horizon + 1)
    return MdpSize(fan - 1, n_sec * fan)


@dataclass
class PlanNode:
    belief: np.ndarray
    remaining: int
    value: float = 0.0
    action: Optional[str] = None
    gains: Dict[str, float] = field(default_factory=dict)
    action_values: Dict[str, float] = field(default_factory=dict)
    children: Dict[str, 'PlanNode'] = field(default_factory=dict)
    probabilities: Dict[str, float] = field(default_factory=dict)

    def to_strategy(self) -> Strategy:
        return Strategy(self.action, {y: c.to_strategy() for y, c in self.children.items()})

    def walk(self):
        yield self
        for child in self.children.values():
            yield from child.walk()


@dataclass(frozen=True)
class PlanResult:
    strategy: Strategy
    value: float
    horizon: int
    nodes_expanded: int
    root: Optional[PlanNode] = None

    @property
    def root_action(self) -> str:
        return self.strategy.action

    def root_action_values(self) -> Dict[str, float]:
        return dict(self.root.action_values) if self.root is not None else {}

    def to_dict(self) -> Dict[str, object]:
        out = {
            'value': self.value,
            'horizon': self.horizon,
            'nodes_expanded': self.nodes_expanded,
            'root_action': self.root_action,
        }
        if self.root is not None:
            out['root_action_values'] = self.root_action_values()
        return out


class _Solver:
    def __init__(self, mech: Mechanism, measure: UncertaintyMeasure, prune: float):
        self.mech = mech
        self.measure = measure
        self.prune = prune
        self.expanded = 0

    def solve(self, p: np.ndarray, remaining: int) -> PlanNode:
        self.expanded += 1
        node = PlanNode(p, remaining)
        here = self.measure(p)
        best_q = -math.inf
        for a, action in enumerate(self.mech.actions):
            joint = p[:, None] * self.mech.matrices[a]
            masses = joint.sum(axis=0)
            after = 0.0
            future = 0.0
            kids: Dict[str, PlanNode] = {}
            probs: Dict[str, float] = {}
            for y in range(masses.size):
                mass = float(masses[y])
                if mass < self.prune or mass <= 0.0:
                    continue
                post = joint[:, y] / mass
                after += mass * self.measure(post)
                if remaining > 1:
                    obs = self.mech.observations[y]
                    child = self.solve(post, remaining - 1)
                    future += mass * child.value
                    kids[obs] = child
                    probs[obs] = mass
            gain = here - after
            q = gain + future
            node.gains[action] = gain
            node.action_values[action] = q
            # ties keep the smallest action index
            if q > best_q + TIE_TOLERANCE:
                best_q = q
                node.action = action
                node.value = q
                node.children = kids
                node.probabilities = probs
        return node


def optimal_strategy(mech: Mechanism, prior, measure: UncertaintyMeasure, horizon: int,
                     node_budget: int = NODE_BUDGET, prune: float = PRUNE_THRESHOLD) -> PlanResult:
    if horizon < 1:
        raise InvalidHorizon("The planning horizon must be at least 1.")
    size = mdp_size_estimate(mech, horizon)
    if size.decision_nodes > node_budget:
        raise BudgetExceeded(
            f"Horizon {horizon} needs up to {size.decision_nodes} decision nodes; "
            f"the budget is {node_budget}.")
    solver = _Solver(mech, measure, prune)
    root = solver.solve(np.array(as_probs(prior)), horizon)
    logger.info("Backward induction, horizon %d: %d decision nodes, value %.12g",
                horizon, solver.expanded, root.value)
    return PlanResult(root.to_strategy(), root.value, horizon, solver.expanded, root)


def _complete_tree_nodes(n_obs: int, horizon: int) -> int:
    if n_obs == 1:
        return horizon
    return (n_obs ** horizon - 1) // (n_obs - 1)


def complete_strategy_count(mech: Mechanism, horizon: int) -> int:
    n_act, _, n_obs = mech.shape
    return n_act ** _complete_tree_nodes(n_obs, horizon)


def _build_complete(mech: Mechanism, paths: List[Tuple[int, ...]], choice: Tuple[int, ...],
                    horizon: int) -> Strategy:
    index = {path: i for i, path in enumerate(paths)}

    def node(path):
        action = mech.actions[choice[index[path]]]
        if len(path) == horizon - 1:
            return Strategy(action)
        return Strategy(action, {mech.observations[y]: node(path + (y,))
                                 for y in range(len(mech.observations))})

    return node(())


def exhaustive_oracle(mech: Mechanism, prior, measure: UncertaintyMeasure, horizon: int,
                      limit: int = ORACLE_LIMIT, prune: float = PRUNE_THRESHOLD) -> PlanResult:
    """Scores every complete strategy of the given length.

    Strategies are enumerated as action choices for the tree nodes in
    breadth-first order, lexicographically; the first maximizer wins ties.
    """
    if horizon < 1:
        raise InvalidHorizon("The planning horizon must be at least 1.")
    n_act, _, n_obs = mech.shape
    n_nodes = _complete_tree_nodes(n_obs, horizon)
    if n_nodes * math.log(n_act) > math.log(limit) + 1e-12:
        raise TooManyStrategies(
            f"{n_act}^{n_nodes} complete strategies exceed the oracle limit of {limit}.")

    paths = [path for depth in range(horizon)
             for path in itertools.product(range(n_obs), repeat=depth)]
    p = as_probs(prior)
    best_value, best_choice = -math.inf, None
    enumerated = 0
    for choice in itertools.product(range(n_act), repeat=n_nodes):
        enumerated += 1
        value = leakage_value(mech, p, _build_complete(mech, paths, choice, horizon), measure, prune=prune)
        if value > best_value + TIE_TOLERANCE:
            best_value, best_choice = value, choice
    logger.info("Exhaustive oracle, horizon %d: %d strategies, value %.12g",
                horizon, enumerated, best_value)
    return PlanResult(_build_complete(mech, paths, best_choice, horizon), float(best_value),
                      horizon, enumerated)

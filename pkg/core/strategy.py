"""
Strategy Module

A strategy is a prefix-closed map from observation sequences to actions,
stored as a tree: each node carries the action to play and its children keyed
by the observation just seen. A node may also carry a default continuation
that applies to every observation not listed explicitly; a non-adaptive list
[a1, ..., an] is the chain of defaults a1 -> a2 -> ... -> an and therefore
stays linear in size whatever the observation alphabet.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import NotDeterministic, NotNonAdaptive, UnknownObservation
from .mechanism import Mechanism, is_deterministic

logger = logging.getLogger(__name__)

WILDCARD = '*'


class _EmptyStrategy:
    """Marker for the empty strategy (no further action is played)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return 'EMPTY'


EMPTY = _EmptyStrategy()


@dataclass(frozen=True, eq=False)
class Strategy:
    action: str
    children: Mapping[str, 'Strategy'] = field(default_factory=dict)
    default: Optional['Strategy'] = None

    def __post_init__(self):
        object.__setattr__(self, 'children', MappingProxyType(dict(self.children)))

    def child(self, obs: str) -> Union['Strategy', _EmptyStrategy]:
        node = self.children.get(obs, self.default)
        return EMPTY if node is None else node

    def branches(self, observations: Optional[Sequence[str]] = None) -> List[Tuple[str, 'Strategy']]:
        """Explicit children in alphabet order, then the default under '*'.

        Without an alphabet the children are sorted by label, so the order
        never depends on how a strategy file listed them.
        """
        keys = sorted(self.children)
        if observations is not None:
            rank = {y: i for i, y in enumerate(observations)}
            keys.sort(key=lambda y: (rank.get(y, len(rank)), y))
        out = [(y, self.children[y]) for y in keys]
        if self.default is not None:
            out.append((WILDCARD, self.default))
        return out

    @property
    def length(self) -> int:
        depth = 0
        for _, sub in self.branches():
            depth = max(depth, sub.length)
        return 1 + depth

    def __eq__(self, other):
        if not isinstance(other, Strategy):
            return NotImplemented
        return (self.action == other.action
                and self.default == other.default
                and dict(self.children) == dict(other.children))

    __hash__ = None

    def __repr__(self):
        seq = as_list(self)
        if seq is not None:
            return f"Strategy({seq})"
        return f"Strategy({self.action!r}, {dict(self.children)!r}, default={self.default!r})"


def length(s) -> int:
    return 0 if s is EMPTY else s.length


def from_list(actions: Sequence[str]) -> Strategy:
    if not actions:
        raise ValueError("A strategy needs at least one action")
    node = None
    for a in reversed(list(actions)):
        node = Strategy(str(a), {}, node)
    return node


def as_list(s: Strategy) -> Optional[List[str]]:
    """The action list when s is a pure default chain, else None."""
    seq = []
    node = s
    while node is not None:
        if node.children:
            return None
        seq.append(node.action)
        node = node.default
    return seq


def walk(s: Strategy, observations: Optional[Sequence[str]] = None
         ) -> Iterator[Tuple[Tuple[str, ...], Strategy]]:
    """Breadth-first (path, node) pairs."""
    queue = deque([((), s)])
    while queue:
        path, node = queue.popleft()
        yield path, node
        for y, sub in node.branches(observations):
            queue.append((path + (y,), sub))


def truncate(s: Strategy, n: int) -> Strategy:
    """Restriction of s to observation sequences of length <= n."""
    if n < 0:
        raise ValueError("truncation depth must be nonnegative")
    if n == 0:
        return Strategy(s.action)
    children = {y: truncate(sub, n - 1) for y, sub in s.children.items()}
    default = truncate(s.default, n - 1) if s.default is not None else None
    return Strategy(s.action, children, default)


def derivative(s: Strategy, obs: str):
    return s.child(obs)


def range_actions(s: Strategy, observations: Optional[Sequence[str]] = None) -> List[str]:
    """Distinct actions in order of first appearance along a breadth-first walk."""
    seen = []
    for _, node in walk(s, observations):
        if node.action not in seen:
            seen.append(node.action)
    return seen


def is_nonadaptive(s: Strategy, observations: Optional[Sequence[str]] = None) -> bool:
    """Same action at every depth and complete over the alphabet.

    Without an alphabet only default continuations count as covering every
    observation.
    """
    total = s.length
    level = [s]
    for depth in range(total):
        if len({node.action for node in level}) != 1:
            return False
        if depth == total - 1:
            break
        nxt = []
        for node in level:
            if node.default is None:
                if observations is None or any(y not in node.children for y in observations):
                    return False
            nxt.extend(sub for _, sub in node.branches(observations))
        level = nxt
    return True


def action_sequence(s: Strategy, observations: Optional[Sequence[str]] = None) -> List[str]:
    seq = as_list(s)
    if seq is not None:
        return seq
    if not is_nonadaptive(s, observations):
        raise NotNonAdaptive("Strategy depends on past observations; no action list exists.")
    seq = []
    node = s
    while node is not None:
        seq.append(node.action)
        nxt = node.branches(observations)
        node = nxt[0][1] if nxt else None
    return seq


def expand_nonadaptive(s: Strategy, observations: Optional[Sequence[str]] = None) -> Strategy:
    """The list range(s) repeated length(s) times; leaks at least as much as s."""
    actions = range_actions(s, observations)
    return from_list(actions * s.length)


def dedupe_for_deterministic(s: Strategy, mech: Mechanism) -> Strategy:
    if not is_deterministic(mech):
        raise NotDeterministic("Mechanism is not deterministic; repeated actions may still leak.")
    seq = action_sequence(s, mech.observations)
    return from_list(list(dict.fromkeys(seq)))


def all_actions_pass(mech: Mechanism) -> Strategy:
    return from_list(mech.actions)


def lockstep(actions: Sequence[str], rounds: int) -> Strategy:
    """[a1, ..., ak, a1, a2, ...] truncated to `rounds` actions."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    return from_list([actions[i % len(actions)] for i in range(rounds)])


def check_against(s: Strategy, mech: Mechanism) -> None:
    """Raises when s names an action or observation the mechanism does not have."""
    for path, node in walk(s):
        mech.action_index(node.action)
        for y in node.children:
            if y not in mech.observations:
                raise UnknownObservation(
                    f"Strategy branches on '{y}' after {list(path)}, which is not an observation.")

"""
Graphviz DOT rendering of strategy trees and attack trees.

Output is built line by line with fixed node numbering (depth-first,
observation order) so the same input always yields the same bytes.
"""

from typing import List, Optional, Sequence

import numpy as np

from .formats import MAX_DENOMINATOR, SIGNIFICANT_DIGITS, as_fraction
from .leakage import AttackNode, AttackTree
from .strategy import Strategy


def _escape(text: str) -> str:
    return text.replace('\\', '\\\\').replace('"', '\\"')


def format_probability(x: float, max_denominator: int = MAX_DENOMINATOR,
                       digits: int = SIGNIFICANT_DIGITS) -> str:
    frac = as_fraction(x, max_denominator)
    return frac if frac is not None else f"{x:.{digits}g}"


def belief_label(belief: np.ndarray, secrets: Sequence[str],
                 max_denominator: int = MAX_DENOMINATOR) -> str:
    """Support of the belief as 'secret:probability' pairs."""
    parts = [f"{secrets[i]}:{format_probability(float(belief[i]), max_denominator)}"
             for i in np.flatnonzero(belief > 0)]
    return ", ".join(parts)


def strategy_dot(s: Strategy, observations: Optional[Sequence[str]] = None,
                 name: str = 'Strategy') -> str:
    """Nodes are actions, arcs are observations; '*' marks the default branch."""
    lines = [f"digraph {name} {{", "  rankdir=TB;", "  node [shape=circle];"]
    counter = [0]

    def emit(node: Strategy) -> int:
        my_id = counter[0]
        counter[0] += 1
        lines.append(f'  n{my_id} [label="{_escape(node.action)}"];')
        for y, sub in node.branches(observations):
            child_id = emit(sub)
            lines.append(f'  n{my_id} -> n{child_id} [label="{_escape(y)}"];')
        return my_id

    emit(s)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _coalesced_arcs(node: AttackNode):
    """Merges sibling leaves that carry the same belief (display only)."""
    merged: List[list] = []
    for arc in node.arcs:
        if arc.target.is_leaf:
            for entry in merged:
                target = entry[2]
                if target.is_leaf and np.allclose(target.belief, arc.target.belief, rtol=0.0, atol=1e-12):
                    entry[0].append(arc.observation)
                    entry[1] += arc.probability
                    break
            else:
                merged.append([[arc.observation], arc.probability, arc.target])
        else:
            merged.append([[arc.observation], arc.probability, arc.target])
    return [("|".join(obs), prob, target) for obs, prob, target in merged]


def attack_tree_dot(tree: AttackTree, coalesce: bool = False,
                    max_denominator: int = MAX_DENOMINATOR, name: str = 'AttackTree') -> str:
    lines = [f"digraph {name} {{", "  rankdir=TB;", "  node [shape=box];"]
    counter = [0]

    def emit(node: AttackNode) -> int:
        my_id = counter[0]
        counter[0] += 1
        label = _escape(belief_label(node.belief, tree.secrets, max_denominator))
        shape = ', shape=ellipse' if node.is_leaf else ''
        lines.append(f'  n{my_id} [label="{label}"{shape}];')
        arcs = _coalesced_arcs(node) if coalesce else [
            (arc.observation, arc.probability, arc.target) for arc in node.arcs]
        for obs, prob, target in arcs:
            child_id = emit(target)
            arc_label = _escape(f"{obs}, {format_probability(prob, max_denominator)}")
            lines.append(f'  n{my_id} -> n{child_id} [label="{arc_label}"];')
        return my_id

    emit(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"

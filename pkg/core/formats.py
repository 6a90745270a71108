"""
File Formats

JSON encodings of mechanisms, strategies and reports.

Mechanism file:
    {
      "secrets": ["1", "2", ...],
      "observations": ["z1", ...],
      "actions": [{"name": "ZIP", "matrix": [[1, 0, ...], ...]}, ...],
      "prior": [0.1, ...],            (optional, default uniform)
      "secret_values": [65, ...]      (optional, needed by the variance measure)
    }
Probabilities are numbers or reduced fraction strings such as "1/3".

Strategy file: a list of action names (non-adaptive) or a node
{"action": a, "children": {obs: node, ...}}; the child key "*" applies to
every observation not listed.
"""

import json
import logging
import math
from fractions import Fraction
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import InvalidMechanism, ParseError
from .measures import Belief
from .mechanism import Mechanism
from .strategy import WILDCARD, Strategy, as_list, from_list

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
MAX_DENOMINATOR = 1_000_000


# --- Numbers ---

def round_sig(x: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


def as_fraction(x: float, max_denominator: int = MAX_DENOMINATOR) -> Optional[str]:
    """Reduced 'n/d' when x is within 1e-12 of a fraction with d <= max_denominator."""
    if not math.isfinite(x):
        return None
    frac = Fraction(x).limit_denominator(max_denominator)
    if abs(float(frac) - x) > 1e-12:
        return None
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"


def all_rational(values: Iterable[float], max_denominator: int = MAX_DENOMINATOR) -> bool:
    return all(as_fraction(float(v), max_denominator) is not None for v in values)


def parse_probability(value: Any) -> float:
    if isinstance(value, bool):
        raise ParseError(f"Expected a probability, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"Cannot read probability {value!r}") from None
    raise ParseError(f"Expected a probability, got {value!r}")


def encode_probability(x: float, digits: int = SIGNIFICANT_DIGITS,
                       max_denominator: int = MAX_DENOMINATOR):
    if x == int(x):
        return int(x)
    frac = as_fraction(x, max_denominator)
    return frac if frac is not None else round_sig(x, digits)


# --- Mechanisms ---

def _require(doc: Dict[str, Any], key: str, kind):
    if key not in doc:
        raise ParseError(f"Mechanism file is missing '{key}'")
    if not isinstance(doc[key], kind):
        raise ParseError(f"Mechanism field '{key}' has the wrong type")
    return doc[key]


def mechanism_from_dict(doc: Dict[str, Any]) -> Tuple[Mechanism, Optional[Belief]]:
    if not isinstance(doc, dict):
        raise ParseError("Mechanism file must contain a JSON object")
    secrets = _require(doc, 'secrets', list)
    observations = _require(doc, 'observations', list)
    actions = _require(doc, 'actions', list)
    names, matrices = [], []
    for entry in actions:
        if not isinstance(entry, dict) or 'name' not in entry or 'matrix' not in entry:
            raise ParseError("Every action needs a 'name' and a 'matrix'")
        rows = entry['matrix']
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ParseError(f"Matrix of action '{entry['name']}' must be a list of rows")
        names.append(entry['name'])
        matrices.append([[parse_probability(v) for v in row] for row in rows])
    for name, rows in zip(names, matrices):
        if len(rows) != len(secrets) or any(len(r) != len(observations) for r in rows):
            raise InvalidMechanism(
                f"Matrix of action '{name}' must be {len(secrets)} x {len(observations)}")

    mech = Mechanism(secrets, observations, names, np.array(matrices, dtype=float).reshape(
        len(names), len(secrets), len(observations)), doc.get('secret_values'))

    prior = None
    if doc.get('prior') is not None:
        values = [parse_probability(v) for v in doc['prior']]
        if len(values) != len(mech.secrets):
            raise InvalidMechanism(f"Prior has {len(values)} entries for {len(mech.secrets)} secrets")
        prior = Belief(values)
    return mech, prior


def mechanism_to_dict(mech: Mechanism, prior: Optional[Belief] = None,
                      digits: int = SIGNIFICANT_DIGITS,
                      max_denominator: int = MAX_DENOMINATOR) -> Dict[str, Any]:
    enc = lambda x: encode_probability(float(x), digits, max_denominator)
    doc: Dict[str, Any] = {
        'secrets': list(mech.secrets),
        'observations': list(mech.observations),
        'actions': [{'name': a, 'matrix': [[enc(v) for v in row] for row in mech.matrices[i]]}
                    for i, a in enumerate(mech.actions)],
    }
    if prior is not None:
        doc['prior'] = [enc(v) for v in prior.probs]
    if mech.secret_values is not None:
        doc['secret_values'] = [int(v) if v == int(v) else v for v in mech.secret_values]
    return doc


def read_json(path: str) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e}") from e


def load_mechanism(path: str) -> Tuple[Mechanism, Optional[Belief]]:
    mech, prior = mechanism_from_dict(read_json(path))
    logger.debug("Loaded %r from %s", mech, path)
    return mech, prior


# --- Strategies ---

def strategy_from_json(doc: Any) -> Strategy:
    if isinstance(doc, list):
        if not doc or not all(isinstance(a, str) for a in doc):
            raise ParseError("A strategy list must be a nonempty list of action names")
        return from_list(doc)
    if isinstance(doc, dict):
        if not isinstance(doc.get('action'), str):
            raise ParseError("Every strategy node needs an 'action' name")
        raw = doc.get('children') or {}
        if not isinstance(raw, dict):
            raise ParseError("Strategy 'children' must map observations to nodes")
        children = {str(y): strategy_from_json(sub) for y, sub in raw.items() if y != WILDCARD}
        default = strategy_from_json(raw[WILDCARD]) if WILDCARD in raw else None
        return Strategy(doc['action'], children, default)
    raise ParseError("A strategy must be a list of actions or a node object")


def strategy_to_json(s: Strategy) -> Any:
    seq = as_list(s)
    if seq is not None:
        return seq
    node: Dict[str, Any] = {'action': s.action}
    children = {y: strategy_to_json(sub) for y, sub in s.children.items()}
    if s.default is not None:
        children[WILDCARD] = strategy_to_json(s.default)
    if children:
        node['children'] = children
    return node


def load_strategy(path: str) -> Strategy:
    return strategy_from_json(read_json(path))


# --- Reports ---

def report_numbers(values: Dict[str, Any], digits: int = SIGNIFICANT_DIGITS,
                   max_denominator: int = MAX_DENOMINATOR,
                   rational_inputs: bool = False) -> Dict[str, Any]:
    """Rounds floats to `digits` significant digits; adds a 'fractions' map when inputs are rational."""
    out: Dict[str, Any] = {}
    fractions: Dict[str, str] = {}
    for key, value in values.items():
        if isinstance(value, float):
            out[key] = round_sig(value, digits)
            if rational_inputs:
                frac = as_fraction(value, max_denominator)
                if frac is not None:
                    fractions[key] = frac
        elif isinstance(value, dict):
            out[key] = {k: round_sig(v, digits) if isinstance(v, float) else v for k, v in value.items()}
        else:
            out[key] = value
    if fractions:
        out['fractions'] = fractions
    return out


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def write_json(doc: Any, path: Optional[str]) -> None:
    """Writes to path, or prints when path is None or '-'."""
    text = dumps(doc)
    if path in (None, '-'):
        print(text)
        return
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text + '\n')


def attack_tree_to_dict(tree, digits: int = SIGNIFICANT_DIGITS) -> Dict[str, Any]:
    """Nested JSON form of an AttackTree; beliefs list their support only."""

    def node_doc(node) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            'belief': {tree.secrets[i]: round_sig(float(node.belief[i]), digits)
                       for i in np.flatnonzero(node.belief > 0)},
            'weight': round_sig(node.weight, digits),
        }
        if node.arcs:
            doc['action'] = node.action
            doc['arcs'] = [{'observation': arc.observation,
                            'probability': round_sig(arc.probability, digits),
                            'node': node_doc(arc.target)} for arc in node.arcs]
        return doc

    return node_doc(tree.root)

"""
Boolean Form Mechanisms

Builds the mechanism f(x, z) = x AND phi(z) for a propositional formula phi over
u variables: one secret bit, one observed bit, and one action per assignment of
the variables. Under the uniform prior some single action leaks iff phi is
satisfiable, so the construction doubles as a SAT-reduction demo.

Formula syntax: identifiers, the constants true/false/1/0, parentheses and the
operators not (! ~ ¬), and (& && ∧) and or (| || ∨).
"""

import logging
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParseError, TooManyVariables
from .mechanism import Mechanism

logger = logging.getLogger(__name__)

MAX_VARIABLES = 20

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(&&|\|\||[!~¬&|∧∨])|([A-Za-z_][A-Za-z0-9_]*|[01]))")
_WORDS = {'not': '!', 'and': '&', 'or': '|'}
_SYMBOLS = {'!': '!', '~': '!', '¬': '!', '&': '&', '&&': '&', '∧': '&', '|': '|', '||': '|', '∨': '|'}
_CONSTANTS = {'true': True, '1': True, 'false': False, '0': False}


def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"Unexpected character {text[pos:].lstrip()[:1]!r} at position {pos}")
        lpar, rpar, op, word = m.groups()
        if lpar:
            tokens.append(('(', lpar))
        elif rpar:
            tokens.append((')', rpar))
        elif op:
            tokens.append(('op', _SYMBOLS[op]))
        else:
            low = word.lower()
            if low in _WORDS:
                tokens.append(('op', _WORDS[low]))
            elif low in _CONSTANTS:
                tokens.append(('const', low))
            else:
                tokens.append(('var', word))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive descent: or < and < not < atom."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise ParseError("Empty formula")
        node = self.disjunction()
        if self.pos != len(self.tokens):
            raise ParseError(f"Unexpected token {self.peek()[1]!r}")
        return node

    def disjunction(self):
        node = self.conjunction()
        while self.peek() == ('op', '|'):
            self.take()
            node = ('or', node, self.conjunction())
        return node

    def conjunction(self):
        node = self.negation()
        while self.peek() == ('op', '&'):
            self.take()
            node = ('and', node, self.negation())
        return node

    def negation(self):
        if self.peek() == ('op', '!'):
            self.take()
            return ('not', self.negation())
        return self.atom()

    def atom(self):
        kind, value = self.take()
        if kind == 'var':
            return ('var', value)
        if kind == 'const':
            return ('const', _CONSTANTS[value])
        if kind == '(':
            node = self.disjunction()
            if self.take()[0] != ')':
                raise ParseError("Missing closing parenthesis")
            return node
        raise ParseError(f"Expected a variable, constant or '(' but found {value!r}")


def _variable_key(name: str):
    m = re.match(r"^(.*?)(\d*)$", name)
    prefix, digits = m.group(1), m.group(2)
    return (prefix, int(digits) if digits else -1, name)


def _collect(node, out):
    if node[0] == 'var':
        out.add(node[1])
    elif node[0] in ('and', 'or'):
        _collect(node[1], out)
        _collect(node[2], out)
    elif node[0] == 'not':
        _collect(node[1], out)


class BooleanForm:
    """A parsed formula phi with its variables in natural order (z1, z2, ..., z10)."""

    def __init__(self, text: str):
        self.text = text
        self.tree = _Parser(_tokenize(text)).parse()
        names = set()
        _collect(self.tree, names)
        self.variables: Tuple[str, ...] = tuple(sorted(names, key=_variable_key))
        self._position = {v: i for i, v in enumerate(self.variables)}

    @property
    def u(self) -> int:
        return len(self.variables)

    def _eval(self, node, columns: np.ndarray) -> np.ndarray:
        kind = node[0]
        if kind == 'var':
            return columns[:, self._position[node[1]]]
        if kind == 'const':
            return np.full(columns.shape[0], node[1], dtype=bool)
        if kind == 'not':
            return ~self._eval(node[1], columns)
        left = self._eval(node[1], columns)
        right = self._eval(node[2], columns)
        return (left & right) if kind == 'and' else (left | right)

    def evaluate(self, bits: Sequence[int]) -> bool:
        if len(bits) != self.u:
            raise ValueError(f"Expected {self.u} bits, got {len(bits)}")
        columns = np.array([bits], dtype=bool).reshape(1, self.u)
        return bool(self._eval(self.tree, columns)[0])

    def assignments(self) -> np.ndarray:
        """All 2^u assignments, z1 as the most significant bit."""
        idx = np.arange(2 ** self.u, dtype=np.int64)
        shifts = np.arange(self.u - 1, -1, -1, dtype=np.int64)
        return ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)

    def truth_table(self) -> np.ndarray:
        return self._eval(self.tree, self.assignments())

    def satisfiable(self) -> bool:
        return bool(self.truth_table().any())

    @staticmethod
    def action_label(bits: Sequence[int]) -> str:
        return ''.join('1' if b else '0' for b in bits) or '-'

    def action_matrix(self, bits: Sequence[int]) -> np.ndarray:
        """p_b(y|x) for one assignment: Y = X when phi(b) holds, else Y = 0."""
        if self.evaluate(bits):
            return np.eye(2)
        return np.array([[1.0, 0.0], [1.0, 0.0]])

    def mechanism(self, max_variables: int = MAX_VARIABLES) -> Mechanism:
        if self.u > max_variables:
            raise TooManyVariables(
                f"Formula has {self.u} variables; at most {max_variables} can be materialized.")
        table = self.truth_table()
        labels = [self.action_label(row) for row in self.assignments()]
        mats = np.empty((table.size, 2, 2))
        mats[:] = np.array([[1.0, 0.0], [1.0, 0.0]])
        mats[table] = np.eye(2)
        logger.debug("Boolean form over %d variables: %d actions, %d satisfying",
                     self.u, table.size, int(table.sum()))
        return Mechanism(['0', '1'], ['0', '1'], labels, mats)


def boolean_form_build(formula: str, max_variables: int = MAX_VARIABLES) -> Mechanism:
    return BooleanForm(formula).mechanism(max_variables)


def random_formula(u: int, depth: int, rng: np.random.Generator) -> str:
    """Random formula over z1..zu, nesting at most `depth` binary operators deep."""
    names = [f"z{i}" for i in range(1, u + 1)]

    def grow(level: int) -> str:
        if level == 0 or (level < depth and rng.random() < 0.3):
            atom = names[int(rng.integers(len(names)))] if names else str(int(rng.integers(2)))
            return f"not {atom}" if rng.random() < 0.4 else atom
        op = 'and' if rng.random() < 0.5 else 'or'
        text = f"({grow(level - 1)} {op} {grow(level - 1)})"
        return f"not {text}" if rng.random() < 0.2 else text

    return grow(depth)

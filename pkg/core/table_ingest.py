"""
Table Ingestion Module

Turns a table of records into a mechanism: the secret is the record id and
each attribute column is an action that reveals that column's cell. Integer
columns can be queried through uniform-offset noise of a given radius.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import DuplicateSecretIds, NonNumericNoiseColumn, ParseError
from .mechanism import Mechanism, uniform_offset_noise

logger = logging.getLogger(__name__)


def read_table(path: str) -> pd.DataFrame:
    """Reads a comma separated UTF-8 file with a header row, keeping every cell as text."""
    try:
        df = pd.read_csv(path, dtype=str, encoding='utf-8', keep_default_na=False)
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"Could not read table {path}: {e}") from e
    df.columns = [str(c).strip() for c in df.columns]
    return df


def parse_noise_spec(specs: Sequence[str]) -> Dict[str, int]:
    """Parses 'column:radius' items as given on the command line."""
    noise = {}
    for item in specs or []:
        column, sep, radius = item.rpartition(':')
        if not sep or not column:
            raise ParseError(f"Noise spec '{item}' must look like column:radius")
        try:
            value = int(radius)
        except ValueError:
            raise ParseError(f"Noise radius in '{item}' must be an integer") from None
        if value < 0:
            raise ParseError(f"Noise radius in '{item}' must be nonnegative")
        noise[column.strip()] = value
    return noise


def _canonical(cells: pd.Series) -> List[str]:
    return [str(v).strip() for v in cells.tolist()]


def _integer_cells(column: str, cells: List[str]) -> List[int]:
    try:
        return [int(v) for v in cells]
    except ValueError:
        raise NonNumericNoiseColumn(
            f"Column '{column}' has non-integer cells and cannot take offset noise.") from None


def _column_alphabet(cells: List[str], radius: Optional[int]) -> List[str]:
    if radius is not None:
        values = sorted({int(v) + r for v in cells for r in range(-radius, radius + 1)})
        return [str(v) for v in values]
    try:
        return sorted(set(cells), key=lambda v: (int(v), v))
    except ValueError:
        return sorted(set(cells))


def table_ingest(rows: Union[pd.DataFrame, Sequence[Mapping[str, object]]],
                 secret_column: str,
                 attribute_columns: Sequence[str],
                 noise: Optional[Mapping[str, int]] = None,
                 secret_values_column: Optional[str] = None) -> Mechanism:
    """Builds one action per attribute column.

    The observation alphabet is the union of the per-column alphabets, taken
    column by column in attribute order; within a column integer values are
    sorted numerically and other labels lexicographically.
    """
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    noise = dict(noise or {})
    attribute_columns = [str(c).strip() for c in attribute_columns]
    if not attribute_columns:
        raise ParseError("At least one attribute column is required.")
    for col in [secret_column, *attribute_columns, *noise]:
        if col not in df.columns:
            raise ParseError(f"Column '{col}' not found. Columns: {list(df.columns)}")
    unknown_noise = [c for c in noise if c not in attribute_columns]
    if unknown_noise:
        raise ParseError(f"Noise given for non-attribute columns: {unknown_noise}")

    secrets = _canonical(df[secret_column])
    dupes = sorted({s for s in secrets if secrets.count(s) > 1})
    if dupes:
        raise DuplicateSecretIds(f"Secret column '{secret_column}' repeats ids: {dupes}")

    cells = {c: _canonical(df[c]) for c in attribute_columns}
    for col in noise:
        _integer_cells(col, cells[col])

    observations: List[str] = []
    for col in attribute_columns:
        for label in _column_alphabet(cells[col], noise.get(col)):
            if label not in observations:
                observations.append(label)
    index = {y: j for j, y in enumerate(observations)}

    mats = np.zeros((len(attribute_columns), len(secrets), len(observations)))
    for a, col in enumerate(attribute_columns):
        if col in noise:
            offsets = uniform_offset_noise(noise[col])
            for x, v in enumerate(_integer_cells(col, cells[col])):
                for r, w in offsets.items():
                    mats[a, x, index[str(v + r)]] += w
        else:
            for x, v in enumerate(cells[col]):
                mats[a, x, index[v]] = 1.0

    secret_values = None
    if secret_values_column is not None:
        try:
            secret_values = [float(v) for v in _canonical(df[secret_values_column])]
        except (KeyError, ValueError) as e:
            raise ParseError(f"Secret values column '{secret_values_column}' is unusable: {e}") from e

    logger.info("Ingested %d records, %d actions, %d observations",
                len(secrets), len(attribute_columns), len(observations))
    return Mechanism(secrets, observations, attribute_columns, mats, secret_values)

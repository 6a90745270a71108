"""
Built-in Mechanisms

Small reference mechanisms used by the tests and the `catalog` command:
the ten-record hospital table (exact and with noisy ages), the envelopes game,
a noisy binary channel and a Hamming-weight leaking device.
"""

from typing import Callable, Dict, Sequence

import numpy as np
import pandas as pd

from .mechanism import Mechanism, binomial_noise, function_mechanism
from .table_ingest import table_ingest

MEDICAL_ATTRIBUTES = ('ZIP', 'Age', 'Date')


def medical_records() -> pd.DataFrame:
    return pd.DataFrame({
        'Id': [str(i) for i in range(1, 11)],
        'ZIP': ['z1', 'z1', 'z1', 'z1', 'z1', 'z3', 'z3', 'z3', 'z2', 'z2'],
        'Age': ['65', '65', '67', '68', '68', '66', '67', '31', '30', '31'],
        'Date': ['d2', 'd2', 'd2', 'd1', 'd1', 'd2', 'd2', 'd2', 'd3', 'd3'],
        'Disease': ['Heart disease', 'Flu', 'Short breath', 'Obesity', 'Heart disease',
                    'Heart disease', 'Obesity', 'Short breath', 'Heart disease', 'Obesity'],
    })


def medical(noisy: bool = False) -> Mechanism:
    """Queries on ZIP, Age and Date of the hospital table; noisy ages are off by -1, 0 or +1."""
    noise = {'Age': 1} if noisy else None
    return table_ingest(medical_records(), 'Id', MEDICAL_ATTRIBUTES, noise)


def envelopes(n: int) -> Mechanism:
    """A secret bit sits in one of n envelopes; every other envelope names that envelope.

    Secrets are (bit, envelope) pairs, actions open one envelope.
    """
    if n < 2:
        raise ValueError("the envelopes game needs at least two envelopes")
    secrets = [(s, e) for s in ('b0', 'b1') for e in range(1, n + 1)]
    return function_mechanism(
        [f"{s}@{e}" for s, e in secrets],
        [str(k) for k in range(1, n + 1)],
        lambda key, k: key.split('@')[0] if key.split('@')[1] == k else f"e{key.split('@')[1]}",
    )


def noisy_binary_channel(flips: Sequence[float] = (0.2,)) -> Mechanism:
    """Two secrets observed through binary symmetric channels, one action per crossover probability."""
    mats = np.array([[[1.0 - f, f], [f, 1.0 - f]] for f in flips])
    return Mechanism(['0', '1'], ['0', '1'], [f"c{i + 1}" for i in range(len(flips))], mats, [0.0, 1.0])


def hamming_device(key_bits: int = 3, noise_trials: int = 0) -> Mechanism:
    """Observes the Hamming weight of key XOR message, plus Binomial(noise_trials, 1/2) noise."""
    keys = list(range(2 ** key_bits))
    noise = binomial_noise(noise_trials, 0.5) if noise_trials > 0 else None
    return function_mechanism(
        [format(k, f'0{key_bits}b') for k in keys],
        [format(m, f'0{key_bits}b') for m in keys],
        lambda k, m: bin(int(k, 2) ^ int(m, 2)).count('1'),
        noise=noise,
        secret_values=[float(k) for k in keys],
    )


CATALOG: Dict[str, Callable[..., Mechanism]] = {
    'medical': lambda size=None: medical(False),
    'medical-noisy': lambda size=None: medical(True),
    'envelopes': lambda size=None: envelopes(size or 3),
    'binary-channel': lambda size=None: noisy_binary_channel(),
    'hamming': lambda size=None: hamming_device(size or 3),
}

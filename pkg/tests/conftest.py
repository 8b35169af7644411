import math

import numpy as np
import pytest

from hybridbss.channel import MixingMatrix, separability_index
from hybridbss.signals import ModulationScheme, make_pilot, modulate


def offdiag_leakage_db(gain_matrix: np.ndarray) -> float:
    """Off-diagonal power of W@A relative to its diagonal, permutation-resolved."""
    g = np.abs(np.asarray(gain_matrix))
    if g[0, 1] * g[1, 0] > g[0, 0] * g[1, 1]:
        diag = g[0, 1] ** 2 + g[1, 0] ** 2
        off = g[0, 0] ** 2 + g[1, 1] ** 2
    else:
        diag = g[0, 0] ** 2 + g[1, 1] ** 2
        off = g[0, 1] ** 2 + g[1, 0] ** 2
    if off == 0.0:
        return -math.inf
    return 10.0 * math.log10(off / diag)


def random_qam_stream(scheme: ModulationScheme, n: int, rng) -> np.ndarray:
    bits = rng.integers(0, 2, size=n * scheme.bits_per_symbol)
    return modulate(bits, scheme)


def random_well_conditioned_matrix(rng, sep_limit: float = 5.0) -> MixingMatrix:
    """Rejection-sample positive matrices whose separability index is small."""
    while True:
        e = rng.uniform(0.2, 1.0, size=4)
        m = MixingMatrix(*e)
        if separability_index(m) < sep_limit:
            return m


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pilot():
    return make_pilot(64)

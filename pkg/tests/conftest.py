from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from spikefisher.limitlaw import wachter_support
from spikefisher.model import Regime, build_spike_model, paper_spike_schedule


@pytest.fixture(scope="session")
def paper_setup():
    q, spikes = paper_spike_schedule(200)
    return Regime(200, 1000, 600, q), build_spike_model(spikes)


def random_orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def wachter_density_stieltjes(z: float, c: float, y: float) -> float:
    """Stieltjes transform by quadrature of the Wachter density (plus the atom at 0 when c > 1)."""
    a, b = wachter_support(c, y)

    def density(x: float) -> float:
        return (1 - y) * math.sqrt(max((b - x) * (x - a), 0.0)) / (2 * math.pi * x * (c + x * y))

    value = quad(lambda x: density(x) / (x - z), a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0]
    return value + max(0.0, 1.0 - 1.0 / c) / (0.0 - z)

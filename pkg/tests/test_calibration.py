import math

import numpy as np
import pytest

from gasnet_wft import ConfigError, PressureLaw
from gasnet_wft.calibration import calibrate_constants
from gasnet_wft.network import random_dissipative_network

LAW = PressureLaw(1.0, 2.0)
NAMES = ("K", "K_J", "C_b", "c_min", "Lambda_max")


@pytest.fixture(scope="module")
def net():
    return random_dissipative_network(LAW, 3, np.random.default_rng(3), radius_fraction=0.3)


def test_zero_samples_rejected(net):
    with pytest.raises(ConfigError):
        calibrate_constants(LAW, net, n_samples=0)


def test_local_search_beats_sampling(net):
    plain = calibrate_constants(LAW, net, n_samples=100, max_strength=0.02, seed=1, n_polish=0, maxfev=1)
    full = calibrate_constants(LAW, net, n_samples=100, max_strength=0.02, seed=1)
    for k in ("K", "K_J", "C_b"):
        assert full.raw[k] >= plain.raw[k]


def test_constants_sane(net):
    c = calibrate_constants(LAW, net, n_samples=100, max_strength=0.02, seed=1)
    assert c.K_J >= 1.0
    assert all(getattr(c, k) > 0 and math.isfinite(getattr(c, k)) for k in NAMES)
    assert c.c_min < c.Lambda_max
    # safety inflation
    assert c.K == pytest.approx(1.25 * c.raw["K"])
    assert c.c_min == pytest.approx(c.raw["c_min"] / 1.25)


def test_calibration_deterministic(net):
    a = calibrate_constants(LAW, net, n_samples=50, max_strength=0.02, seed=4)
    b = calibrate_constants(LAW, net, n_samples=50, max_strength=0.02, seed=4)
    assert a.as_dict() == b.as_dict()


def test_doubling_samples_converges(net):
    a = calibrate_constants(LAW, net, n_samples=200, max_strength=0.02, seed=0)
    b = calibrate_constants(LAW, net, n_samples=400, max_strength=0.02, seed=0)
    for k in NAMES:
        x, y = getattr(a, k), getattr(b, k)
        assert abs(y - x) <= 0.05 * abs(x), k

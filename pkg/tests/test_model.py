import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikefisher.errors import (
    DimensionError,
    InvalidRotationError,
    InvalidSpectrumError,
    SubcriticalSpikeError,
)
from spikefisher.model import EntryDist, Regime, build_spike_model, check_assumptions, kappa, paper_spike_schedule

from conftest import random_orthogonal


def test_two_simple_spikes():
    model = build_spike_model([5, 3], [1, 1], None, "gaussian")
    assert model.n_blocks == 2
    assert model.cumulative == (1, 2)
    assert np.array_equal(model.rotation, np.eye(2))
    assert model.entry_dist is EntryDist.GAUSSIAN


def test_multiplicity_grouping():
    model = build_spike_model([4, 4, 2], [2, 1])
    assert model.n_blocks == 2
    assert model.cumulative == (2, 3)
    assert model.block_values == (4.0, 2.0)
    assert [list(b) for b in model.blocks] == [[0, 1], [2]]


def test_subcritical_spike_rejected():
    with pytest.raises(SubcriticalSpikeError):
        build_spike_model([0.9], [1])


@pytest.mark.parametrize(
    "spikes, mult",
    [([3, 5], [1, 1]), ([4, 3, 2], [2, 1]), ([4, 4], [1, 1]), ([4, 4], [3])],
)
def test_bad_spectra_rejected(spikes, mult):
    with pytest.raises(InvalidSpectrumError):
        build_spike_model(spikes, mult)


def test_rotation_checks():
    with pytest.raises(InvalidRotationError):
        build_spike_model([5, 3], rotation=[[1.0, 1e-9], [0.0, 1.0]])
    with pytest.raises(InvalidRotationError):
        build_spike_model([5, 3], rotation=np.eye(3))
    s = 1 / math.sqrt(2)
    model = build_spike_model([5, 3], rotation=[[s, s], [-s, s]])
    assert not model.is_identity_rotation


def test_regime_ratios_exact():
    reg = Regime(200, 1000, 600, 11)
    assert reg.y_ratio.numerator == 1 and reg.y_ratio.denominator == 5
    assert reg.c_ratio == Fraction(1, 3)
    assert reg.y_tilde == 189 / 1000
    assert reg.c_tilde == 189 / 600


@pytest.mark.parametrize("args", [(0, 10, 5, 0), (10, 10, 5, 0), (10, 20, 0, 0), (10, 20, 5, 10), (10, 20, 5, -1)])
def test_regime_invariants(args):
    with pytest.raises(DimensionError):
        Regime(*args)


def test_paper_schedule_p200():
    q, spikes = paper_spike_schedule(200)
    # 2 ln 200 = 10.5966
    assert q == 11
    base = (math.log(200) / 3) ** 3
    assert spikes[-1] == pytest.approx(1.5 * base, rel=1e-15)
    assert spikes[-1] == pytest.approx(8.263069, abs=1e-6)
    assert spikes[0] == pytest.approx(476.490221, abs=1e-6)
    # values quoted as ~8.264 and ~476.6
    assert spikes[-1] == pytest.approx(8.264, rel=5e-4)
    assert spikes[0] == pytest.approx(476.6, rel=5e-4)


@given(st.integers(min_value=2, max_value=100_000))
def test_schedule_ratio_is_three_halves(p):
    q, spikes = paper_spike_schedule(p)
    assert q == math.ceil(2 * math.log(p))
    ratios = np.array(spikes[:-1]) / np.array(spikes[1:])
    assert np.allclose(ratios, 1.5, rtol=1e-13, atol=0)
    assert all(a > b for a, b in zip(spikes, spikes[1:]))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=1.01, max_value=1e4), min_size=1, max_size=8, unique=True),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_rotation_recovers_spikes(values, seed):
    spikes = sorted(values, reverse=True)
    u = random_orthogonal(np.random.default_rng(seed), len(spikes))
    if np.max(np.abs(u.T @ u - np.eye(len(spikes)))) > 1e-12:
        return
    model = build_spike_model(spikes, rotation=u)
    recovered = np.linalg.eigvalsh(model.sigma11())[::-1]
    assert np.allclose(recovered, spikes, rtol=1e-10, atol=0)


def test_assumptions_paper_configuration(paper_setup):
    regime, model = paper_setup
    report = check_assumptions(model, regime)
    assert report.a4_gap == pytest.approx(1.5, rel=1e-13)
    assert report.a4_ok
    # 11 / 1000^(1/6) = 11 / sqrt(10)
    assert report.a1_q_rate == pytest.approx(11 / math.sqrt(10), rel=1e-13)
    assert report.a1_q_rate == pytest.approx(3.4785, abs=1e-4)
    assert report.a5_max_mult == 1
    assert report.a2_qsq_over_lambda == pytest.approx(121 / model.spikes[-1])


def test_assumptions_single_spike():
    report = check_assumptions(build_spike_model([100.0]), Regime(200, 1000, 600, 1))
    assert report.all_ok
    assert math.isinf(report.a4_gap)


def test_assumptions_errors():
    with pytest.raises(DimensionError):
        check_assumptions(build_spike_model([5.0, 3.0]), Regime(200, 1000, 600, 1))


def test_assumptions_pure(paper_setup):
    regime, model = paper_setup
    assert check_assumptions(model, regime) == check_assumptions(model, regime)


def test_kappa_for_largest_paper_spike(paper_setup):
    _, model = paper_setup
    total = sum(model.spikes)
    k1, k2, k = kappa(model.spikes, 0)
    assert k1 == pytest.approx(11 + total / model.spikes[0])
    assert k == pytest.approx(14.0, abs=0.05)
    assert k == min(k1, k2)


def test_sigma1_layout():
    model = build_spike_model([9.0, 4.0])
    s1 = model.sigma1(5)
    assert np.allclose(s1, np.diag([9, 4, 1, 1, 1]))
    assert np.allclose(model.sigma11_sqrt() @ model.sigma11_sqrt(), model.sigma11())

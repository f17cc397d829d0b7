import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from spikefisher.errors import PoleError, SingularS2Error
from spikefisher.limitlaw import wachter_support
from spikefisher.model import Regime, build_spike_model
from spikefisher.sampling import CovariancePair, draw_samples, form_covariances
from spikefisher.spectra import (
    Esd,
    empirical_m_tilde,
    f0_eigenvalues,
    f0_from_covariances,
    fisher_eigenvalues,
    spectral_result,
)
from spikefisher.validation import determinant_scan_roots


def _pd_pair(rng, dim):
    a = rng.standard_normal((dim, 2 * dim))
    b = rng.standard_normal((dim, 2 * dim))
    return a @ a.T / (2 * dim) + 0.05 * np.eye(dim), b @ b.T / (2 * dim) + 0.05 * np.eye(dim)


def test_identity_pair():
    assert np.allclose(fisher_eigenvalues(CovariancePair.from_matrices(np.eye(6), np.eye(6))), 1.0)


def test_diagonal_case():
    s1 = np.diag([4.0, 1, 1, 1])
    vals = fisher_eigenvalues(CovariancePair.from_matrices(s1, np.eye(4)))
    assert vals[0] == pytest.approx(4.0)
    assert np.allclose(vals[1:], 1.0)


@pytest.mark.parametrize("dim", [3, 5])
def test_matches_determinant_scan(dim):
    rng = np.random.default_rng(dim)
    for _ in range(10):
        s1, s2 = _pd_pair(rng, dim)
        got = fisher_eigenvalues(CovariancePair.from_matrices(s1, s2))
        assert np.allclose(got, determinant_scan_roots(s1, s2), rtol=1e-8, atol=0)


def test_matches_scipy_generalized_eigh():
    rng = np.random.default_rng(17)
    s1, s2 = _pd_pair(rng, 30)
    ref = scipy.linalg.eigh(s1, s2, eigvals_only=True)[::-1]
    assert np.allclose(fisher_eigenvalues(CovariancePair.from_matrices(s1, s2)), ref, rtol=1e-10)


def test_singular_s2_rejected():
    with pytest.raises(SingularS2Error):
        CovariancePair.from_matrices(np.eye(3), np.diag([1.0, 1.0, 0.0]))


def test_paper_spectrum_properties(paper_setup):
    regime, model = paper_setup
    s = draw_samples(model, regime, 21)
    cov = form_covariances(s, regime)
    res = spectral_result(cov, regime.q)
    assert res.residual <= 1e-8
    lam = res.fisher_eigs
    assert np.all(np.diff(lam) <= 0) and lam[-1] >= 0
    assert np.all(np.diff(res.f0_eigs) <= 0) and res.f0_eigs[-1] >= 0
    # sum rule against an explicit solve
    trace = np.trace(np.linalg.solve(cov.S2, cov.S1))
    assert lam.sum() == pytest.approx(trace, rel=1e-6)
    assert np.allclose(res.f0_eigs, f0_eigenvalues(s, regime), rtol=1e-10, atol=0)


def test_f0_degenerate_q0():
    regime = Regime(30, 90, 60, 0)
    cov = form_covariances(draw_samples(build_spike_model([]), regime, 1), regime)
    assert np.array_equal(f0_from_covariances(cov, 0), fisher_eigenvalues(cov))


def test_f0_all_ones_when_blocks_match():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((6, 20))
    s = a @ a.T / 20
    assert np.allclose(fisher_eigenvalues(CovariancePair.from_matrices(s, s)), 1.0)


def test_f0_top_near_wachter_edge(paper_setup):
    regime, model = paper_setup
    _, b = wachter_support(regime.c_tilde, regime.y_tilde)
    for seed in range(20):
        mu = f0_eigenvalues(draw_samples(model, regime, 1000 + seed), regime)
        assert b - 0.35 <= mu[0] <= b + 0.35
        assert mu[-1] >= 0


def test_m_tilde_examples():
    assert empirical_m_tilde([2.0], 4.0) == pytest.approx(2.0)
    mu = np.array([0.5, 1.0, 2.0, 3.0])
    theta = 1e6 * mu.max()
    assert abs(empirical_m_tilde(mu, theta) - 1) < 10 * mu.mean() / theta
    with pytest.raises(PoleError):
        empirical_m_tilde(mu, 3.0)


def test_m_tilde_rate_at_largest_spike(paper_setup):
    regime, model = paper_setup
    mu = f0_eigenvalues(draw_samples(model, regime, 5), regime)
    theta = model.spikes[0]
    dev, dev2 = abs(empirical_m_tilde(mu, theta) - 1), abs(empirical_m_tilde(mu, 2 * theta) - 1)
    assert 2 / 1.3 <= dev / dev2 <= 2 * 1.3


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-3, max_value=10), min_size=1, max_size=40),
    st.floats(min_value=1.01, max_value=50),
    st.floats(min_value=1.01, max_value=50),
)
def test_m_tilde_monotone(mu, f1, f2):
    top = max(mu)
    t1, t2 = sorted((top * f1, top * f2))
    if t2 <= t1 * (1 + 1e-9):
        return
    assert empirical_m_tilde(mu, t2) < empirical_m_tilde(mu, t1)


def test_m_tilde_decay_ratio():
    mu = np.random.default_rng(0).uniform(0.1, 4.0, 300)
    for mult in (10, 20, 40, 80):
        theta = mult * mu.max()
        ratio = abs(empirical_m_tilde(mu, theta) - 1) / abs(empirical_m_tilde(mu, 2 * theta) - 1)
        assert 1.6 <= ratio <= 2.4


def test_esd_step_function():
    esd = Esd.from_eigenvalues([3.0, 1.0, 2.0, 2.0])
    assert esd(0.5) == 0.0
    assert esd(1.0) == 0.25
    assert esd(2.0) == 0.75
    assert esd(10.0) == 1.0
    xs = np.linspace(0, 4, 50)
    assert np.all(np.diff(esd(xs)) >= 0)
    assert esd.stieltjes(5.0) == pytest.approx(np.mean(1 / (np.array([3, 1, 2, 2]) - 5.0)))

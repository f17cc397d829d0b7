import numpy as np
import pytest

from spikefisher.errors import SingularS2Error
from spikefisher.model import Regime, build_spike_model
from spikefisher.sampling import (
    SampleMatrices,
    draw_samples,
    form_covariances,
    read_matrix,
    replication_seed,
    write_matrix,
)

from conftest import random_orthogonal

SMALL = Regime(20, 60, 40, 2)


def test_draw_is_deterministic():
    model = build_spike_model([9.0, 4.0])
    a = draw_samples(model, SMALL, 123)
    b = draw_samples(model, SMALL, 123)
    for name in ("Y", "Z", "X"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = draw_samples(model, SMALL, 124)
    assert not np.array_equal(a.Z, c.Z)


def test_rademacher_support():
    s = draw_samples(build_spike_model([9.0, 4.0], dist="rademacher"), SMALL, 5)
    assert set(np.unique(s.Y)) == {-1.0, 1.0}
    assert set(np.unique(s.Z)) == {-1.0, 1.0}


def test_uniform_entries_unit_variance():
    s = draw_samples(build_spike_model([], dist="uniform"), Regime(200, 1000, 600, 0), 3)
    assert np.max(np.abs(s.Z)) <= np.sqrt(3)
    assert s.Z.var() == pytest.approx(1.0, abs=0.02)
    assert (s.Z**4).mean() == pytest.approx(9 / 5, abs=0.03)


def test_mean_of_z_entries(paper_setup):
    regime, model = paper_setup
    s = draw_samples(model, regime, 11)
    # 4 / sqrt(p n) = 0.0089
    assert abs(s.Z.mean()) < 0.01


def test_x_blocks(paper_setup):
    regime, _ = paper_setup
    u = random_orthogonal(np.random.default_rng(0), regime.q)
    model = build_spike_model(paper_setup[1].spikes, rotation=u)
    s = draw_samples(model, regime, 4)
    assert np.array_equal(s.X2, s.Y2)
    assert np.allclose(s.X1, model.sigma11_sqrt() @ s.Y1)
    assert s.Y1.shape == (regime.q, regime.T) and s.Z2.shape == (regime.p - regime.q, regime.n)


def test_replication_seeds_distinct_and_stable():
    seeds = [replication_seed(42, r) for r in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [replication_seed(42, r) for r in range(100)]
    assert replication_seed(42, 0) != replication_seed(43, 0)


def _manual(X, Z):
    p = X.shape[0]
    return SampleMatrices(Y=X, Z=Z, X=X, seed=0, q=0), Regime(p, Z.shape[1], X.shape[1], 0)


def test_zero_x_gives_zero_s1():
    rng = np.random.default_rng(1)
    s, reg = _manual(np.zeros((5, 7)), rng.standard_normal((5, 30)))
    assert np.array_equal(form_covariances(s, reg).S1, np.zeros((5, 5)))


def test_orthogonal_rows_give_identity():
    n = 12
    q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((n, n)))
    Z = q[:4] * np.sqrt(n)
    s, reg = _manual(np.ones((4, 3)), Z)
    assert np.allclose(form_covariances(s, reg).S2, np.eye(4), atol=1e-12)


def test_singular_s2_detected():
    Z = np.ones((4, 10))
    s, reg = _manual(np.ones((4, 3)), Z)
    with pytest.raises(SingularS2Error):
        form_covariances(s, reg)


def test_s2_edge_and_trace():
    regime = Regime(200, 1000, 600, 0)
    model = build_spike_model([])
    cov = form_covariances(draw_samples(model, regime, 8), regime)
    # Marchenko-Pastur edge (1 + sqrt(0.2))^2 = 2.0944
    assert np.linalg.eigvalsh(cov.S2)[-1] == pytest.approx((1 + np.sqrt(0.2)) ** 2, abs=0.1)
    assert abs(np.trace(cov.S2) / 200 - 1) < 0.05
    assert np.max(np.abs(cov.S2 - cov.S2.T)) <= 1e-12
    assert np.max(np.abs(cov.S1 - cov.S1.T)) <= 1e-12


def test_trace_concentration_over_seeds():
    regime = Regime(200, 1000, 600, 0)
    model = build_spike_model([])
    hits = sum(
        abs(np.trace(form_covariances(draw_samples(model, regime, s), regime).S2) / 200 - 1) < 0.05
        for s in range(30)
    )
    assert hits == 30


def test_block_assembly(paper_setup):
    regime, model = paper_setup
    s = draw_samples(model, regime, 9)
    cov = form_covariances(s, regime)
    T = regime.T
    top = np.hstack([s.X1 @ s.X1.T, s.X1 @ s.X2.T]) / T
    bottom = np.hstack([s.X2 @ s.X1.T, s.X2 @ s.X2.T]) / T
    assert np.max(np.abs(np.vstack([top, bottom]) - cov.S1)) <= 1e-10


def test_matrix_file_roundtrip(tmp_path):
    m = np.random.default_rng(3).standard_normal((3, 5))
    path = tmp_path / "m.sflm"
    write_matrix(path, m)
    raw = path.read_bytes()
    assert raw[:4] == b"SFLM"
    assert int.from_bytes(raw[4:8], "little") == 3 and int.from_bytes(raw[8:12], "little") == 5
    assert len(raw) == 12 + 8 * 15
    assert np.array_equal(read_matrix(path), m)


def test_matrix_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(ValueError):
        read_matrix(path)

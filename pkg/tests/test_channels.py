import numpy as np
import pytest

from dmtkit.channels import (
    FadingFamily,
    IidChannelSpec,
    KeyholeChannelSpec,
    correlation_measure,
    exponential_correlation,
    hermitian_sqrt,
    sample_iid,
    sample_keyhole,
    sample_keyhole_vectors,
)
from dmtkit.errors import InvalidSpecError


@pytest.mark.parametrize("family", list(FadingFamily))
def test_family_moments(family):
    rng = np.random.default_rng(11)
    h = sample_iid(IidChannelSpec(10, 10, family), rng, size=10_000)  # 10^6 entries
    p = np.abs(h) ** 2
    assert 0.99 <= p.mean() <= 1.01
    assert 1.95 <= (p**2).mean() <= 2.05


def test_gaussian_moments_tighter_examples():
    rng = np.random.default_rng(3)
    h = FadingFamily.COMPLEX_GAUSSIAN.sample(rng, 1_000_000)
    p = np.abs(h) ** 2
    assert abs(p.mean() - 1.0) <= 0.01
    assert abs((p**2).mean() - 2.0) <= 0.05
    assert abs(h.mean()) < 0.01


def test_on_off_support_and_phase():
    rng = np.random.default_rng(4)
    h = FadingFamily.ON_OFF.sample(rng, 200_000)
    p = np.abs(h) ** 2
    assert np.all(np.isclose(p, 0.0) | np.isclose(p, 2.0))
    on = h[p > 1]
    # uniform phase: the circular mean vanishes
    assert abs(np.mean(on / np.abs(on))) < 0.01


def test_iid_shapes():
    rng = np.random.default_rng(0)
    spec = IidChannelSpec(3, 5)
    assert sample_iid(spec, rng).shape == (5, 3)
    assert sample_iid(spec, rng, size=7).shape == (7, 5, 3)
    assert spec.beta == pytest.approx(0.6)


@pytest.mark.parametrize("m,n", [(0, 2), (2, 0), (1.5, 2)])
def test_bad_dimensions_rejected(m, n):
    with pytest.raises(InvalidSpecError):
        IidChannelSpec(m, n)
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(m, n)


def test_same_stream_same_samples():
    spec = IidChannelSpec(4, 4, FadingFamily.ON_OFF)
    a = sample_iid(spec, np.random.default_rng(99), size=50)
    b = sample_iid(spec, np.random.default_rng(99), size=50)
    assert a.tobytes() == b.tobytes()
    k = KeyholeChannelSpec(3, 4, exponential_correlation(3, 0.4), exponential_correlation(4, 0.7))
    assert sample_keyhole(k, np.random.default_rng(5), 20).tobytes() == sample_keyhole(k, np.random.default_rng(5), 20).tobytes()


def test_keyhole_normalization_identity():
    spec = KeyholeChannelSpec(3, 4)
    H = sample_keyhole(spec, np.random.default_rng(1), size=100_000)
    ratio = np.mean(np.sum(np.abs(H) ** 2, axis=(1, 2))) / (spec.m * spec.n)
    assert abs(ratio - 1.0) <= 0.02


def test_keyhole_rank_one():
    spec = KeyholeChannelSpec(5, 4, exponential_correlation(5, 0.9), exponential_correlation(4, 0.3))
    H = sample_keyhole(spec, np.random.default_rng(2), size=500)
    s = np.linalg.svd(H, compute_uv=False)
    assert np.all(s[:, 1] <= 1e-10 * s[:, 0])


def test_keyhole_matrix_matches_vectors():
    spec = KeyholeChannelSpec(2, 3)
    h_r, h_t = sample_keyhole_vectors(spec, np.random.default_rng(8), 4)
    H = sample_keyhole(spec, np.random.default_rng(8), 4)
    np.testing.assert_allclose(H, np.einsum("ti,tj->tij", h_r, h_t.conj()))


def test_coloring_reproduces_covariance():
    R = exponential_correlation(4, 0.9)
    spec = KeyholeChannelSpec(2, 4, r_r=R)
    h_r, _ = sample_keyhole_vectors(spec, np.random.default_rng(6), 100_000)
    cov = h_r.T @ h_r.conj() / h_r.shape[0]
    assert np.max(np.abs(cov - R)) <= 0.02


def test_hermitian_sqrt_squares_back():
    R = exponential_correlation(5, 0.8)
    S = hermitian_sqrt(R)
    np.testing.assert_allclose(S @ S, R, atol=1e-12)
    np.testing.assert_allclose(S, S.conj().T, atol=1e-14)


def test_exponential_correlation_examples():
    np.testing.assert_array_equal(exponential_correlation(2, 0.0), np.eye(2))
    R = exponential_correlation(2, 0.5)
    np.testing.assert_array_equal(R, [[1.0, 0.5], [0.5, 1.0]])
    assert np.sum(R**2) == pytest.approx(2.5)
    assert np.linalg.eigvalsh(exponential_correlation(3, 0.9)).min() > 0


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
def test_exponential_correlation_rejects_rho(rho):
    with pytest.raises(ValueError):
        exponential_correlation(3, rho)


def test_correlation_measure_examples():
    assert correlation_measure(np.eye(7), 7) == 1 / 7
    assert correlation_measure(exponential_correlation(2, 0.5), 2) == pytest.approx(0.625)
    assert correlation_measure(np.ones((2, 2)), 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        correlation_measure(np.eye(3), 2)


@pytest.mark.parametrize("size", [2, 4, 10])
def test_correlation_measure_monotone_and_bounded(size):
    vals = [correlation_measure(exponential_correlation(size, rho), size) for rho in np.arange(10) / 10]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(1 / size - 1e-15 <= v <= 1.0 for v in vals)


def test_correlation_measure_bounds_random_unit_diagonal():
    rng = np.random.default_rng(12)
    for size in (2, 3, 6):
        for _ in range(20):
            A = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
            G = A @ A.conj().T
            d = np.sqrt(np.real(np.diag(G)))
            R = G / np.outer(d, d)
            v = correlation_measure(R, size)
            assert 1 / size - 1e-12 <= v <= 1.0 + 1e-12


def test_keyhole_spec_validation():
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(2, 2, r_t=2 * np.eye(2))  # trace not normalized
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(2, 2, r_t=np.array([[1.0, 0.3], [0.1, 1.0]]))  # not Hermitian
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(2, 2, r_t=np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(2, 2, r_t=np.eye(3))
    with pytest.raises(InvalidSpecError):
        KeyholeChannelSpec(2, 2, r_r=np.array([[1.0, np.nan], [np.nan, 1.0]]))

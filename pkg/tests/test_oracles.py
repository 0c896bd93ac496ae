import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlab.datagen import CovarianceSpec, reduced_tensor_features, sigma2_diagonal, tensor_mean_vector
from qrlab.errors import CapacityError, InvalidArgumentError
from qrlab.oracles import (
    gaussian_quadform_moments,
    gaussian_quadform_moments_printed,
    hermite,
    hermite_gram,
    quadform_concentration_stat,
    quadform_cross_moment,
    quadform_moment_mc,
    random_projector,
    wick_matching_count,
    wick_moment,
    wick_pairing_sum,
)


def test_hermite_low_orders():
    assert hermite(0, 3.7) == 1.0
    assert hermite(2, 0.0) == pytest.approx(-1.0 / math.sqrt(2.0), abs=1e-15)
    assert hermite(3, 2.0) == pytest.approx(2.0 / math.sqrt(6.0), abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-5.0, 5.0))
def test_hermite_matches_explicit_polynomials(x):
    explicit = {
        1: x,
        2: (x**2 - 1.0) / math.sqrt(2.0),
        3: (x**3 - 3.0 * x) / math.sqrt(6.0),
        4: (x**4 - 6.0 * x**2 + 3.0) / math.sqrt(24.0),
    }
    for order, value in explicit.items():
        assert hermite(order, x) == pytest.approx(value, abs=1e-10 * max(1.0, abs(value)))


def test_hermite_rejects_large_order():
    with pytest.raises(InvalidArgumentError):
        hermite(21, 0.0)


def test_hermite_gram_identity():
    assert hermite_gram(0).tolist() == [[1.0]]
    gram = hermite_gram(8)
    assert np.abs(gram - np.eye(9)).max() <= 1e-10
    assert abs(hermite_gram(3)[1, 3]) <= 1e-14


def test_matching_counts():
    assert wick_matching_count(0) == 1
    assert wick_matching_count(2) == 1
    assert wick_matching_count(8) == 105
    assert wick_matching_count(5) == 0


def test_wick_pairing_sum_closed_forms():
    rng = np.random.default_rng(7)
    sig = rng.uniform(0.5, 2.0, 5)
    xi = rng.normal(size=5)
    xk = rng.normal(size=5)
    w_i, w_k = np.sqrt(sig) * xi, np.sqrt(sig) * xk
    dot, ni, nk = float(w_i @ w_k), float(w_i @ w_i), float(w_k @ w_k)
    assert wick_moment(1, 1, sig, xi, xk) == pytest.approx(dot, rel=1e-12)
    assert wick_moment(3, 1, sig, xi, xk) == pytest.approx(3.0 * dot * ni, rel=1e-12)
    assert wick_moment(3, 3, sig, xi, xk) == pytest.approx(
        9.0 * dot * ni * nk + 6.0 * dot**3, rel=1e-12
    )
    assert wick_moment(4, 4, sig, xi, xk) == pytest.approx(
        72.0 * dot**2 * ni * nk + 24.0 * dot**4 + 9.0 * ni**2 * nk**2, rel=1e-12
    )
    assert wick_moment(4, 2, sig, xi, xk) == pytest.approx(
        12.0 * dot**2 * ni + 3.0 * ni**2 * nk, rel=1e-12
    )


def test_wick_pairing_bookkeeping():
    sig = np.ones(3)
    ps = wick_pairing_sum(2, 2, sig, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert len(ps.terms) == wick_matching_count(4) == 3
    assert wick_moment(2, 1, sig, np.ones(3), np.ones(3)) == 0.0
    with pytest.raises(CapacityError):
        wick_pairing_sum(7, 7, sig, np.ones(3), np.ones(3))


def test_wick_against_monte_carlo():
    rng = np.random.default_rng(11)
    d = 4
    sig = rng.uniform(0.5, 1.5, d)
    xi = rng.normal(size=d)
    xk = rng.normal(size=d)
    draws = 400_000
    g = rng.standard_normal((draws, d)) * np.sqrt(sig)
    u = g @ xi
    v = g @ xk
    for a, b in ((1, 1), (2, 2), (3, 1), (2, 4), (3, 3), (4, 4)):
        sample = u**a * v**b
        se = sample.std(ddof=1) / math.sqrt(draws)
        assert abs(sample.mean() - wick_moment(a, b, sig, xi, xk)) <= 5 * se, (a, b)


def test_hermite_orthogonality_under_projections():
    # E[h_j(<w,x>) h_k(<w,y>)] = delta_jk <x,y>^k for unit x, y.
    rng = np.random.default_rng(23)
    d = 6
    x = rng.normal(size=d)
    x /= np.linalg.norm(x)
    y = rng.normal(size=d)
    y /= np.linalg.norm(y)
    dot = float(x @ y)
    draws = 1_000_000
    w = rng.standard_normal((draws, d))
    u, v = w @ x, w @ y
    for j in range(5):
        hj = hermite(j, u)
        for k in range(5):
            sample = hj * hermite(k, v)
            se = sample.std(ddof=1) / math.sqrt(draws)
            target = dot**k if j == k else 0.0
            assert abs(sample.mean() - target) <= 5 * se, (j, k)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_quadform_moments_identity_matrix(d):
    # g'Ig is chi-square with d degrees of freedom:
    # E[(chi2_d)^s] = d (d+2) ... (d+2s-2).
    a = np.eye(d)
    assert gaussian_quadform_moments(a, 2) == pytest.approx(d * (d + 2), rel=1e-12)
    assert gaussian_quadform_moments(a, 3) == pytest.approx(d * (d + 2) * (d + 4), rel=1e-12)
    assert gaussian_quadform_moments(a, 4) == pytest.approx(
        d * (d + 2) * (d + 4) * (d + 6), rel=1e-12
    )


def test_quadform_printed_variant_disagrees_with_chi_square():
    a = np.eye(2)
    assert gaussian_quadform_moments(a, 3) == pytest.approx(48.0)
    assert gaussian_quadform_moments_printed(a, 3) == pytest.approx(72.0)
    assert gaussian_quadform_moments_printed(a, 2) == gaussian_quadform_moments(a, 2)
    mc, se = quadform_moment_mc(a, 3, draws=2_000_000, seed=5)
    assert abs(mc - 48.0) <= 5 * se
    assert abs(mc - 72.0) > 20 * se


def test_quadform_cross_moment():
    assert quadform_cross_moment(np.eye(2), np.eye(2)) == pytest.approx(8.0)
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3))
    a = (a + a.T) / 2
    b = rng.normal(size=(3, 3))
    b = (b + b.T) / 2
    draws = 1_000_000
    g = rng.standard_normal((draws, 3))
    sample = np.einsum("ij,jk,ik->i", g, a, g) * np.einsum("ij,jk,ik->i", g, b, g)
    se = sample.std(ddof=1) / math.sqrt(draws)
    assert abs(sample.mean() - quadform_cross_moment(a, b)) <= 5 * se


def test_quadform_moments_validation():
    with pytest.raises(InvalidArgumentError):
        gaussian_quadform_moments(np.eye(2), 5)
    with pytest.raises(InvalidArgumentError):
        gaussian_quadform_moments(np.array([[0.0, 1.0], [0.0, 0.0]]), 2)


def test_random_projector_properties():
    p = random_projector(30, 12, seed=4)
    assert np.abs(p - p.T).max() <= 1e-12
    assert np.abs(p @ p - p).max() <= 1e-10
    eigs = np.linalg.eigvalsh(p)
    assert eigs.max() == pytest.approx(1.0, abs=1e-10)
    assert round(eigs.sum()) == 12


def test_concentration_stat_zero_matrix():
    cov = CovarianceSpec.identity(5)
    from qrlab.datagen import MomentMatchedSampler, sample_dataset

    data = sample_dataset(20, 5, cov, MomentMatchedSampler.gaussian(), 0)
    x2 = reduced_tensor_features(data) - tensor_mean_vector(cov)[None, :]
    devs = quadform_concentration_stat(x2, sigma2_diagonal(cov), np.zeros((15, 15)))
    assert np.all(devs == 0.0)


def test_concentration_stat_identity_target():
    # For A = I and Sigma = I the target trace is sum of the coordinate
    # variances: d^2 + d (d diagonal coordinates contribute 2 each,
    # d(d-1)/2 off-diagonal coordinates contribute 2 each).
    from qrlab.datagen import MomentMatchedSampler, sample_dataset

    d, n = 12, 4000
    cov = CovarianceSpec.identity(d)
    law = sigma2_diagonal(cov)
    assert float(law.atoms.sum()) == pytest.approx(d * d + d)
    data = sample_dataset(n, d, cov, MomentMatchedSampler.gaussian(), 1)
    x2 = reduced_tensor_features(data) - tensor_mean_vector(cov)[None, :]
    norms = (x2**2).sum(axis=1)
    se = norms.std(ddof=1) / math.sqrt(n)
    assert abs(norms.mean() - (d * d + d)) <= 5 * se


def test_concentration_stat_norm_guard():
    cov = CovarianceSpec.identity(4)
    from qrlab.datagen import MomentMatchedSampler, sample_dataset

    data = sample_dataset(10, 4, cov, MomentMatchedSampler.gaussian(), 0)
    x2 = reduced_tensor_features(data) - tensor_mean_vector(cov)[None, :]
    with pytest.raises(InvalidArgumentError):
        quadform_concentration_stat(x2, sigma2_diagonal(cov), 2.0 * np.eye(10))

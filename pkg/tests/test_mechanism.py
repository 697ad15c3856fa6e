import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_lab.errors import DegenerateTruthError, InputError
from spectral_lab.linalg import spectral_norm, svd
from spectral_lab.mechanism import (
    NoiseConfig,
    perturb,
    release_covariance,
    release_subspace,
    sample_gaussian_matrix,
)
from spectral_lab.rng import derive_seed


def embedded_diag(sigma, m):
    a = np.zeros((m, len(sigma)))
    a[np.arange(len(sigma)), np.arange(len(sigma))] = sigma
    return a


def mean_stderr(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / math.sqrt(x.size)


class TestNoiseConfig:
    @pytest.mark.parametrize("T", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_T(self, T):
        with pytest.raises(InputError):
            NoiseConfig(T)

    def test_rejects_bad_seed(self):
        with pytest.raises(InputError):
            NoiseConfig(1.0, seed=-1)


class TestGaussianSampler:
    def test_deterministic(self):
        np.testing.assert_array_equal(sample_gaussian_matrix(5, 3, 9), sample_gaussian_matrix(5, 3, 9))
        assert not np.array_equal(sample_gaussian_matrix(5, 3, 9), sample_gaussian_matrix(5, 3, 10))

    def test_law_of_large_numbers(self):
        z = sample_gaussian_matrix(1000, 1000, 2024)
        assert abs(z.mean()) <= 4 / 1000
        assert abs(z.var() - 1) <= 0.01

    def test_opnorm_tail(self):
        m, d = 200, 100
        thr = math.sqrt(m) + math.sqrt(d) + 2
        exceed = sum(spectral_norm(sample_gaussian_matrix(m, d, derive_seed(5, "tail", i))) > thr for i in range(500))
        assert exceed / 500 <= 2 * math.exp(-4)
        assert exceed == 0


class TestPerturb:
    def test_tiny_T(self):
        a = embedded_diag([3.0, 1.0], 4)
        eps = 1e-14
        g = sample_gaussian_matrix(4, 2, 0)
        assert np.linalg.norm(perturb(a, NoiseConfig(eps, 0)) - a) <= math.sqrt(eps) * np.linalg.norm(g) * (1 + 1e-9)

    def test_linearity(self):
        out = perturb(np.zeros((6, 3)), NoiseConfig(4.0, 17))
        np.testing.assert_array_equal(out, 2.0 * sample_gaussian_matrix(6, 3, 17))

    def test_chi_square_moment(self):
        a = embedded_diag([5.0, 2.0, 1.0], 8)
        T = 0.3
        r = [np.linalg.norm(perturb(a, NoiseConfig(T, derive_seed(1, "chi", i))) - a) ** 2 / (8 * 3 * T) for i in range(1000)]
        mean, se = mean_stderr(r)
        assert abs(mean - 1) <= 3 * se

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32), T=st.floats(1e-6, 10.0))
    def test_weyl_consistency(self, seed, T):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((7, 4)) * 5
        g = sample_gaussian_matrix(7, 4, seed)
        moved = np.abs(svd(perturb(a, NoiseConfig(T, seed))).singular_values - svd(a).singular_values)
        assert moved.max() <= math.sqrt(T) * spectral_norm(g) + 1e-9


class TestMomentIdentity:
    def test_at_g_second_moment(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((12, 5))
        vals = [np.linalg.norm(a.T @ sample_gaussian_matrix(12, 5, derive_seed(2, "moment", i))) ** 2 for i in range(2000)]
        mean, se = mean_stderr(vals)
        assert abs(mean - 5 * np.linalg.norm(a) ** 2) <= 3 * se


class TestReleaseSubspace:
    def test_tiny_noise(self):
        res = release_subspace(embedded_diag([10.0, 2.0], 20), 1, NoiseConfig(1e-12, 3))
        assert res.error_frobenius < 1e-4

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32), T=st.floats(1e-4, 1e3), k=st.integers(1, 3))
    def test_projector_cap_and_shape(self, seed, T, k):
        a = np.random.default_rng(seed).standard_normal((8, 4))
        res = release_subspace(a, k, NoiseConfig(T, seed))
        p = res.released
        assert res.error_frobenius <= math.sqrt(2 * k) + 1e-12
        np.testing.assert_array_equal(p, p.T)
        assert np.linalg.norm(p @ p - p) < 1e-8
        assert abs(np.trace(p) - k) < 1e-8

    def test_deterministic(self):
        a = embedded_diag([4.0, 2.0, 1.0], 6)
        r1 = release_subspace(a, 2, NoiseConfig(0.5, 8))
        r2 = release_subspace(a, 2, NoiseConfig(0.5, 8))
        np.testing.assert_array_equal(r1.released, r2.released)
        assert r1.error_frobenius == r2.error_frobenius

    def test_degenerate_truth(self):
        a = embedded_diag([3.0, 3.0, 1.0], 5)
        with pytest.raises(DegenerateTruthError):
            release_subspace(a, 1, NoiseConfig(0.1, 0))
        res = release_subspace(a, 1, NoiseConfig(0.1, 0), allow_degenerate=True)
        assert res.error_frobenius is None
        assert "degenerate_truth" in res.flags

    def test_k_must_be_below_d(self):
        with pytest.raises(InputError):
            release_subspace(embedded_diag([3.0, 1.0], 4), 2, NoiseConfig(0.1))

    def test_matches_straight_line_oracle(self):
        a = embedded_diag([10.0, 2.0], 100)
        T = 1e-4
        ours, same_noise, fresh_noise = [], [], []
        oracle_rng = np.random.default_rng(77)
        truth = np.outer([1.0, 0.0], [1.0, 0.0])

        def oracle(g):
            _, _, vt = np.linalg.svd(a + math.sqrt(T) * g, full_matrices=True)
            return np.linalg.norm(np.outer(vt[0], vt[0]) - truth)

        for i in range(200):
            seed = derive_seed(0, "oracle", i)
            ours.append(release_subspace(a, 1, NoiseConfig(T, seed)).error_frobenius)
            same_noise.append(oracle(sample_gaussian_matrix(100, 2, seed)))
            fresh_noise.append(oracle(oracle_rng.standard_normal((100, 2))))
        np.testing.assert_allclose(ours, same_noise, rtol=1e-8)
        m1, s1 = mean_stderr(ours)
        m2, s2 = mean_stderr(fresh_noise)
        assert abs(m1 - m2) <= 3 * math.hypot(s1, s2)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(12)
        a = embedded_diag([6.0, 3.0, 1.0], 10)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        T = 0.2
        e1 = [release_subspace(a, 1, NoiseConfig(T, derive_seed(1, "inv", i))).error_frobenius for i in range(1000)]
        e2 = [release_subspace(a @ q, 1, NoiseConfig(T, derive_seed(2, "inv", i))).error_frobenius for i in range(1000)]
        m1, s1 = mean_stderr(e1)
        m2, s2 = mean_stderr(e2)
        assert abs(m1 - m2) <= 3 * math.hypot(s1, s2)


class TestReleaseCovariance:
    def test_tiny_noise_full_rank(self):
        res = release_covariance(embedded_diag([3.0, 1.0], 3), 2, NoiseConfig(1e-12, 1))
        np.testing.assert_allclose(res.released, np.diag([9.0, 1.0]), atol=1e-4)
        assert res.error_frobenius < 1e-4

    def test_rank_one(self):
        res = release_covariance(embedded_diag([10.0, 2.0], 10), 1, NoiseConfig(0.01, 2))
        assert np.linalg.matrix_rank(res.released, tol=1e-8) == 1
        assert np.trace(res.released) == pytest.approx(res.perturbed_sigma[0] ** 2, rel=1e-12)
        np.testing.assert_array_equal(res.released, res.released.T)
        assert np.linalg.eigvalsh(res.released).min() > -1e-10

    def test_tie_flag(self):
        res = release_covariance(embedded_diag([2.0, 2.0], 4), 1, NoiseConfig(0.01))
        assert "tie_at_k" in res.flags

    def test_full_rank_first_order_moment(self):
        sigma = np.linspace(2.0, 1.0, 10)
        a = embedded_diag(sigma, 20)
        T = 1e-6 * sigma[-1] ** 2
        errs = [release_covariance(a, 10, NoiseConfig(T, derive_seed(3, "cov", i))).error_frobenius ** 2 for i in range(500)]
        first_order = 2 * (10 + 1) * np.sum(sigma**2) * T
        assert abs(np.mean(errs) / first_order - 1) <= 0.05

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kboost import kernels, spectrum
from kboost.spectrum import Spectrum

from conftest import random_psd
from oracles import R_grid, critical_radius_scan


def sobolev_spectrum(n):
    K = kernels.build_kernel_matrix(kernels.sobolev1(), kernels.equidistant_design(n))
    return spectrum.eigenvalues(K)


class TestEigenvalues:
    def test_diagonal(self, backend):
        s = spectrum.eigenvalues(np.diag([0.5, 0.25]))
        np.testing.assert_array_equal(s.eigenvalues, [0.5, 0.25])

    def test_scaled_identity(self, backend):
        np.testing.assert_allclose(spectrum.eigenvalues(np.eye(4) / 4).eigenvalues, [0.25] * 4)

    def test_rank_one(self, backend):
        s = spectrum.eigenvalues(np.full((2, 2), 0.5) / 2)
        np.testing.assert_allclose(s.eigenvalues, [0.5, 0.0], atol=1e-16)

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 40, 129])
    def test_matches_lapack(self, backend, rng, n):
        A = random_psd(rng, n)
        ref = np.sort(np.clip(np.linalg.eigvalsh(A), 0, None))[::-1]
        s = spectrum.eigenvalues(A)
        np.testing.assert_allclose(s.eigenvalues, ref, atol=1e-13)
        assert s.eigenvalues.sum() == pytest.approx(np.trace(A), rel=1e-8)

    def test_sobolev_matches_lapack(self, backend):
        K = kernels.build_kernel_matrix(kernels.sobolev1(), kernels.equidistant_design(300))
        ref = np.sort(np.clip(np.linalg.eigvalsh(K.entries), 0, None))[::-1]
        np.testing.assert_allclose(spectrum.eigenvalues(K).eigenvalues, ref, atol=1e-14)

    @pytest.mark.parametrize("n", [64, 400])
    def test_graded_gaussian_matches_lapack(self, backend, n):
        # eigenvalues fall to round-off level; deflation must not stall there
        K = kernels.build_kernel_matrix(kernels.gaussian(0.1), kernels.equidistant_design(n))
        ref = np.sort(np.clip(np.linalg.eigvalsh(K.entries), 0, None))[::-1]
        np.testing.assert_allclose(spectrum.eigenvalues(K).eigenvalues, ref, atol=1e-14)

    def test_clustered_and_zero_eigenvalues(self, backend, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        lam = np.array([0.5] * 10 + [0.1] * 10 + [0.0] * 10)
        A = (Q * lam) @ Q.T
        A = (A + A.T) / 2
        np.testing.assert_allclose(spectrum.eigenvalues(A).eigenvalues, np.sort(lam)[::-1], atol=1e-14)

    def test_rejects_asymmetric(self):
        with pytest.raises(spectrum.NotSymmetricError):
            spectrum.eigenvalues(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_rejects_indefinite(self):
        with pytest.raises(spectrum.NotPSDError):
            spectrum.eigenvalues(np.array([[0.1, 0.3], [0.3, 0.1]]))

    def test_convergence_cap(self, backend, rng):
        with pytest.raises(spectrum.ConvergenceError):
            spectrum.symmetric_eigenvalues(random_psd(rng, 20), max_sweeps=0)

    def test_sobolev_decay_rate(self):
        for n in (64, 128, 256):
            s = sobolev_spectrum(n)
            assert spectrum.decay_slope(s, 4, n // 4) == pytest.approx(-2.0, abs=0.3)


class TestComplexity:
    def test_zero_delta(self):
        assert spectrum.complexity_R(Spectrum([0.3, 0.1]), 0.0) == 0.0

    def test_all_terms_saturated(self):
        assert spectrum.complexity_R(Spectrum([1.0, 1.0]), 0.3) == pytest.approx(0.3, abs=1e-15)

    def test_rank_one(self):
        assert spectrum.complexity_R(Spectrum([1.0, 0.0, 0.0, 0.0]), 0.5) == pytest.approx(0.25)

    def test_matches_prefix_sum_oracle(self, rng):
        mu = rng.random(50) ** 3
        s = Spectrum(mu)
        deltas = np.geomspace(1e-4, 2, 200)
        np.testing.assert_allclose([spectrum.complexity_R(s, d) for d in deltas], R_grid(mu, deltas), rtol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(
        mu=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=60),
        deltas=st.lists(st.floats(1e-6, 3.0), min_size=50, max_size=50),
    )
    def test_monotonicity(self, mu, deltas):
        s = Spectrum(mu)
        d = np.sort(deltas)
        R = np.array([spectrum.complexity_R(s, x) for x in d])
        assert np.all(np.diff(R) >= -1e-15)
        assert np.all(np.diff(R / d) <= 1e-12 * (R / d)[:-1] + 1e-300)


class TestCriticalRadius:
    def test_flat_spectrum(self):
        assert spectrum.critical_radius(Spectrum([1.0] * 8), 0.5).delta_n == pytest.approx(0.5, rel=1e-9)

    def test_rank_one(self):
        s = Spectrum([1.0] + [0.0] * 99)
        cr = spectrum.critical_radius(s, 1.0)
        assert cr.delta_n == pytest.approx(0.1, rel=1e-9)
        lo, hi = cr.bracket
        assert lo <= cr.delta_n <= hi

    def test_all_zero_is_degenerate(self):
        with pytest.raises(spectrum.DegenerateSpectrumError):
            spectrum.critical_radius(Spectrum([0.0, 0.0]), 1.0)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            spectrum.critical_radius(Spectrum([0.5]), 0.0)

    def test_residual_and_grid_oracle(self, rng):
        for _ in range(5):
            mu = rng.random(int(rng.integers(2, 80))) ** 4
            sigma = float(rng.uniform(0.1, 3))
            s = Spectrum(mu)
            d = spectrum.critical_radius(s, sigma).delta_n
            assert abs(spectrum.complexity_R(s, d) / d - d / sigma) <= 1e-8
            assert d == pytest.approx(critical_radius_scan(mu, sigma), rel=1e-6)

    def test_permutation_invariance(self, rng):
        mu = rng.random(40) ** 2
        a = spectrum.critical_radius(Spectrum(mu), 0.7).delta_n
        b = spectrum.critical_radius(Spectrum(rng.permutation(mu)), 0.7).delta_n
        assert a == pytest.approx(b, rel=1e-9)

    def test_increases_with_sigma(self):
        s = sobolev_spectrum(64)
        assert spectrum.critical_radius(s, 2.0).delta_n > spectrum.critical_radius(s, 1.0).delta_n

    def test_polynomial_decay_rate(self):
        # mu_j = j^(-2 beta): delta_n^2 ~ n^(-2 beta / (2 beta + 1))
        for beta in (1.0, 2.0):
            ns = np.array([64, 128, 256, 512, 1024])
            d2 = [
                spectrum.critical_radius(Spectrum(np.arange(1, n + 1) ** (-2 * beta)), 1.0).delta_n ** 2 for n in ns
            ]
            slope = np.polyfit(np.log(ns), np.log(d2), 1)[0]
            assert slope == pytest.approx(-2 * beta / (2 * beta + 1), abs=0.1)

    def test_exponential_decay_rate(self):
        for gamma in (1.0, 2.0):
            ns = np.array([64, 128, 256, 512, 1024])
            ratio = []
            for n in ns:
                mu = np.exp(-0.5 * np.arange(1, n + 1) ** gamma)
                d = spectrum.critical_radius(Spectrum(mu), 1.0).delta_n
                ratio.append(d * d * n / np.log(n) ** (1 / gamma))
            assert max(ratio) / min(ratio) < 4


class TestDimensionAndRegularity:
    def test_statistical_dimension(self):
        s = Spectrum([1, 0.5, 0.1, 0.01])
        assert spectrum.statistical_dimension(s, math.sqrt(0.2)) == 3
        assert spectrum.statistical_dimension(s, 1.0) == 1
        assert spectrum.statistical_dimension(s, 0.05) == 4

    def test_fallback_when_nothing_below(self):
        assert spectrum.statistical_dimension(Spectrum([0.5, 0.4]), 0.1) == 2

    def test_regular_zero_tail(self):
        reg = spectrum.regularity_check(Spectrum([1, 0, 0, 0]), 0.1, 1)
        assert reg.is_regular and reg.tail_sum == 0.0 and reg.d_n == 2

    def test_regular_fallback(self):
        reg = spectrum.regularity_check(Spectrum([0.5] * 4), 0.1, 1)
        assert reg == (True, 0.0, 4)

    def test_sobolev_is_regular(self):
        K = kernels.build_kernel_matrix(kernels.sobolev1(), kernels.equidistant_design(256))
        s = spectrum.eigenvalues(K)
        cr = spectrum.critical_radius(s, 1.0)
        reg = spectrum.regularity_check(s, cr.delta_n, 10)
        assert reg.is_regular
        assert reg.d_n == 3
        assert reg.tail_sum == pytest.approx(0.019806870046215383, rel=1e-9)
        ref = np.sort(np.linalg.eigvalsh(K.entries))[::-1]
        assert reg.tail_sum == pytest.approx(ref[reg.d_n :].sum(), rel=1e-9)


class TestDecaySlope:
    def test_exact_power_law(self):
        s = Spectrum(np.arange(1, 101, dtype=float) ** -2)
        assert spectrum.decay_slope(s, 3, 70) == pytest.approx(-2.0, abs=1e-9)

    def test_flat(self):
        assert spectrum.decay_slope(Spectrum([0.3] * 10), 1, 10) == pytest.approx(0.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            spectrum.decay_slope(Spectrum([0.5, 0.0]), 1, 2)
        with pytest.raises(ValueError):
            spectrum.decay_slope(Spectrum([0.5, 0.1]), 2, 2)

    def test_sobolev_n256(self):
        assert spectrum.decay_slope(sobolev_spectrum(256), 4, 64) == pytest.approx(-2.0, abs=0.3)

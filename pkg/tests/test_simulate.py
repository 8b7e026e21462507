import numpy as np
import pytest

from fdaconc.fda_stats import empirical_covariance
from fdaconc.ktest import k_sample_test
from fdaconc.operator_core import Grid, schatten_norm
from fdaconc.simulate import (
    DecaySpec,
    inflated_average,
    random_covariance,
    sample_gaussian,
    sample_process,
    sample_t_process,
    surrogate_pair,
)

from conftest import random_grid


class TestRandomCovariance:
    def test_flat_spectrum(self):
        S = random_covariance(DecaySpec(5, 0.0), Grid.uniform(5), seed=1)
        assert np.allclose(S.spectrum, 1.0, atol=1e-12)

    @pytest.mark.parametrize("beta,scale", [(4.0, 1.0), (2.0, 3.5), (1.0, 0.2)])
    def test_spectrum_oracle(self, rng, beta, scale):
        g = random_grid(rng, 9)
        S = random_covariance(DecaySpec(9, beta, scale), g, seed=4)
        oracle = np.sort(np.linalg.eigvalsh(S.weighted))[::-1]
        expect = scale * np.arange(1, 10, dtype=float) ** -beta
        assert np.allclose(oracle, expect, atol=1e-10)
        assert schatten_norm(S, 1) == pytest.approx(expect.sum(), abs=1e-10)
        assert np.array_equal(S.kernel, S.kernel.T)

    def test_seeds_differ_spectra_agree(self):
        g = Grid.uniform(6)
        a = random_covariance(DecaySpec(6, 2.0), g, seed=1)
        b = random_covariance(DecaySpec(6, 2.0), g, seed=2)
        assert not np.allclose(a.kernel, b.kernel)
        assert np.allclose(a.spectrum, b.spectrum, atol=1e-12)

    def test_low_rank(self):
        S = random_covariance(DecaySpec(3, 1.0), Grid.uniform(8), seed=0)
        assert np.sum(S.spectrum > 1e-12) == 3

    def test_dimension_too_big(self):
        with pytest.raises(ValueError):
            random_covariance(DecaySpec(9, 1.0), Grid.uniform(8))

    @pytest.mark.parametrize("kw", [dict(dimension=0, exponent=1.0), dict(dimension=3, exponent=-1.0),
                                    dict(dimension=3, exponent=1.0, scale=0.0)])
    def test_bad_spec(self, kw):
        with pytest.raises(ValueError):
            DecaySpec(**kw)


class TestGaussian:
    def test_zero_operator(self):
        S = random_covariance(DecaySpec(4, 1.0), Grid.uniform(4), seed=0) * 0.0
        assert np.all(sample_gaussian(S, 5, seed=1).values == 0)

    def test_consistency(self):
        g = Grid.uniform(6)
        S = random_covariance(DecaySpec(6, 2.0), g, seed=8)
        errs = {n: [] for n in (100, 1000, 10_000)}
        for seed in range(40):
            for n in errs:
                C = empirical_covariance(sample_gaussian(S, n, seed=(seed * 7919 + n)))
                errs[n].append(schatten_norm(C - S, 2) / schatten_norm(S, 2))
        means = [np.mean(errs[n]) for n in (100, 1000, 10_000)]
        assert means[0] > means[1] > means[2]
        assert np.mean(np.array(errs[10_000]) <= 0.1) >= 0.95

    def test_uncorrelated_eigen_coordinates(self):
        g = Grid.uniform(6)
        S = random_covariance(DecaySpec(6, 1.0), g, seed=3)
        n = 20_000
        coords = sample_gaussian(S, n, seed=4).weighted @ S.eigenvectors
        corr = np.corrcoef(coords.T)
        off = corr[~np.eye(6, dtype=bool)]
        assert np.max(np.abs(off)) <= 4 / np.sqrt(n)

    def test_scaling_with_shared_stream(self):
        g = Grid.uniform(5)
        S = random_covariance(DecaySpec(5, 1.0), g, seed=3)
        a = sample_gaussian(S, 7, seed=11).values
        b = sample_gaussian(S * 9.0, 7, seed=11).values
        assert np.allclose(b, 3.0 * a, rtol=1e-10, atol=1e-12)

    def test_non_psd_rejected(self):
        S = random_covariance(DecaySpec(4, 1.0), Grid.uniform(4), seed=0) * -1.0
        with pytest.raises(ValueError):
            sample_gaussian(S, 3)

    def test_bad_n(self):
        S = random_covariance(DecaySpec(4, 1.0), Grid.uniform(4), seed=0)
        with pytest.raises(ValueError):
            sample_gaussian(S, 0)


class TestTProcess:
    def test_rowwise_scalar_of_gaussian(self):
        g = Grid.uniform(5)
        S = random_covariance(DecaySpec(5, 1.0), g, seed=3)
        gx = sample_gaussian(S, 30, seed=12).values
        tx = sample_t_process(S, 4.0, 30, seed=12).values
        ratio = tx / gx
        assert np.all(ratio > 0)
        assert np.allclose(ratio, ratio[:, :1], rtol=1e-10)

    def test_nu_must_exceed_two(self):
        S = random_covariance(DecaySpec(3, 1.0), Grid.uniform(3), seed=0)
        for nu in (2.0, 1.0):
            with pytest.raises(ValueError):
                sample_t_process(S, nu, 5)

    def test_covariance_matched(self):
        g = Grid.uniform(6)
        S = random_covariance(DecaySpec(6, 2.0), g, seed=8)
        errs = []
        for seed in range(40):
            C = empirical_covariance(sample_t_process(S, 6.0, 40_000, seed=seed))
            errs.append(schatten_norm(C - S, 2) / schatten_norm(S, 2))
        assert np.mean(np.array(errs) <= 0.1) >= 0.95

    def test_large_nu_looks_gaussian(self):
        g = Grid.uniform(8)
        S = random_covariance(DecaySpec(8, 2.0), g, seed=2)
        accept = 0
        for r in range(200):
            a = sample_t_process(S, 1e6, 60, seed=2 * r)
            b = sample_gaussian(S, 60, seed=2 * r + 1)
            accept += not k_sample_test([a, b], 2, 0.05, seed=r).reject
        assert accept / 200 >= 0.9

    def test_dispatch(self):
        S = random_covariance(DecaySpec(3, 1.0), Grid.uniform(3), seed=0)
        assert sample_process(S, 4, 1, "t", 5.0).n == 4
        with pytest.raises(ValueError):
            sample_process(S, 4, 1, "cauchy")


def test_surrogate_pair_is_fixed_and_similar():
    a1, a2 = surrogate_pair()
    b1, b2 = surrogate_pair()
    assert np.array_equal(a1.kernel, b1.kernel) and np.array_equal(a2.kernel, b2.kernel)
    assert np.allclose(a1.spectrum, a2.spectrum, atol=1e-12)
    assert not np.allclose(a1.kernel, a2.kernel)


def test_inflated_average():
    S1, S2 = surrogate_pair()
    S3 = inflated_average(S1, S2, 5.0)
    avg = (S1 + S2) * 0.5
    assert S3.spectrum[0] == pytest.approx(max(avg.spectrum[0], 5 * avg.spectrum[1]))
    assert np.allclose(np.sort(S3.spectrum), np.sort(np.r_[avg.spectrum[0], 5 * avg.spectrum[1:]]))

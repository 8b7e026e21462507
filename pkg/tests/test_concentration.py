import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdaconc.concentration import (
    RadiusParams,
    confidence_radius_covariance,
    confidence_radius_general,
    covariance_confidence_set,
    membership,
)
from fdaconc.operator_core import CovOperator, Grid
from fdaconc.simulate import DecaySpec, random_covariance, sample_gaussian

# hand evaluation of the two closed forms (independent oracle, see decisions log)
GENERAL_EXAMPLE = 0.46158940811029403
COVARIANCE_EXAMPLE = 1.1376719863273124


def test_general_example():
    r = confidence_radius_general(RadiusParams(n=100, rademacher_norm=0.2, sigma=1.0, alpha=0.05))
    assert r == pytest.approx(GENERAL_EXAMPLE, abs=1e-12)


def test_covariance_example():
    r = confidence_radius_covariance(RadiusParams(n=50, rademacher_norm=0.5, sigma=2.0, alpha=0.05))
    assert r == pytest.approx(COVARIANCE_EXAMPLE, abs=1e-6)


@pytest.mark.parametrize("fn", [confidence_radius_general, confidence_radius_covariance])
def test_half_alpha_collapses(fn):
    assert fn(RadiusParams(30, 0.37, 1.9, 0.5)) == pytest.approx(0.37, abs=1e-15)


def test_sqrt_term_homogeneous_in_sigma():
    L = -math.log(0.1)

    def sqrt_term(sig):
        r = confidence_radius_general(RadiusParams(40, 0.0, sig, 0.05, u_bound=1.0))
        return r - 1.0 * L / 120

    assert sqrt_term(2.0) == pytest.approx(2 * sqrt_term(1.0), rel=1e-12)


def test_smaller_alpha_bigger_radius():
    a = confidence_radius_covariance(RadiusParams(50, 0.5, 2.0, 0.01))
    b = confidence_radius_covariance(RadiusParams(50, 0.5, 2.0, 0.05))
    assert a > b


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=0.6), dict(n=0),
                                dict(sigma=-1.0), dict(rademacher_norm=np.nan)])
def test_invalid_params(kw):
    base = dict(n=10, rademacher_norm=0.1, sigma=1.0, alpha=0.05)
    base.update(kw)
    with pytest.raises(ValueError):
        RadiusParams(**base)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 10_000), rn=st.floats(0, 10), sig=st.floats(0, 10),
       a1=st.floats(1e-6, 0.5), a2=st.floats(1e-6, 0.5), bump=st.floats(0, 5))
def test_radius_monotonicity(n, rn, sig, a1, a2, bump):
    lo, hi = sorted((a1, a2))
    for fn in (confidence_radius_general, confidence_radius_covariance):
        r_lo = fn(RadiusParams(n, rn, sig, lo))
        assert r_lo >= fn(RadiusParams(n, rn, sig, hi)) - 1e-12
        assert fn(RadiusParams(n, rn, sig + bump, lo)) >= r_lo - 1e-12
        assert fn(RadiusParams(n, rn + bump, sig, lo)) >= r_lo - 1e-12
        corr_n = fn(RadiusParams(n, rn, sig, lo)) - rn
        corr_2n = fn(RadiusParams(2 * n, rn, sig, lo)) - rn
        assert corr_2n <= corr_n + 1e-12


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 1000), rn=st.floats(0, 10), sig=st.floats(0, 10), a=st.floats(1e-6, 0.5))
def test_covariance_radius_below_general(n, rn, sig, a):
    p = RadiusParams(n, rn, sig, a)
    assert confidence_radius_covariance(p) <= confidence_radius_general(p) + 1e-12
    q = RadiusParams(n, 0.0, sig, a)
    assert confidence_radius_covariance(q) == pytest.approx(confidence_radius_general(q), rel=1e-12)


def test_membership_trivial(rng):
    g = Grid.uniform(3)
    a = rng.standard_normal((3, 3))
    S = CovOperator(g, a @ a.T)
    assert membership(S, S, 2, 0.0)
    assert not membership(S, S * 1.01, 2, 0.0)


def test_coverage_monte_carlo():
    g = Grid.uniform(6)
    S = random_covariance(DecaySpec(6, 2.0), g, seed=123)
    reps, hits = 2000, 0
    for r in range(reps):
        s = sample_gaussian(S, 200, seed=50_000 + r)
        hits += covariance_confidence_set(s, 2, 0.05, seed=r).contains(S)
    assert hits / reps >= 0.95


def test_confidence_set_fields(rng):
    s = sample_gaussian(random_covariance(DecaySpec(4, 1.0), Grid.uniform(4), 1), 30, 2)
    cs = covariance_confidence_set(s, "inf", 0.1, n_draws=4, seed=0, sigma_rule="empirical")
    assert cs.radius >= cs.rademacher_norm >= 0
    assert cs.contains(cs.center)
    with pytest.raises(ValueError):
        covariance_confidence_set(s, 2, 0.1, sigma_rule="nope")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.special import logsumexp
from scipy.stats import norm

from dropout_mi.estimators import (
    DegenerateInputError,
    GaussianMixture,
    build_mixture,
    component_indices,
    conditional_entropy_gaussian_dropout,
    marginal_entropy_mc,
    mi_gaussian_dropout,
    mixture_log_density,
    noisy_samples,
)
from dropout_mi.numerics import LOG_2PIE, Rng


def test_conditional_entropy_unit_activation():
    ce = conditional_entropy_gaussian_dropout(np.ones((1, 1)), 0.1)
    assert ce.nats == pytest.approx(math.log(0.1) + 0.5 * LOG_2PIE, abs=1e-9)
    assert ce.excluded == 0


def test_conditional_entropy_excludes_zero_floor():
    f = np.array([[1.0, 0.0], [2.0, 1e-9]])
    ce = conditional_entropy_gaussian_dropout(f, 0.5)
    per = math.log(0.5) + 0.5 * LOG_2PIE
    assert ce.excluded == 2
    assert ce.nats == pytest.approx(0.5 * (per + per + math.log(2.0)), abs=1e-12)


def test_conditional_entropy_all_zero_raises():
    with pytest.raises(DegenerateInputError):
        conditional_entropy_gaussian_dropout(np.zeros((3, 2)), 0.1)


def test_conditional_entropy_bad_sigma():
    with pytest.raises(ValueError):
        conditional_entropy_gaussian_dropout(np.ones((2, 2)), 0.0)


@given(hnp.arrays(float, (5, 3), elements=st.floats(0.01, 100)), st.floats(0.01, 2.0), st.floats(0.1, 10))
def test_conditional_entropy_scaling(f, sigma, c):
    # scaling every activation by c shifts h(Z|X) by dim * log c
    a = conditional_entropy_gaussian_dropout(f, sigma).nats
    b = conditional_entropy_gaussian_dropout(c * f, sigma).nats
    assert b - a == pytest.approx(3 * math.log(c), abs=1e-9)


def test_mixture_log_density_matches_scipy():
    gen = np.random.default_rng(0)
    means, stds = gen.normal(size=(7, 3)), gen.uniform(0.2, 2.0, size=(7, 3))
    gmm = GaussianMixture(means, stds)
    z = gen.normal(size=3)
    ref = logsumexp(norm.logpdf(z, means, stds).sum(axis=1)) - math.log(7)
    assert mixture_log_density(gmm, z) == pytest.approx(ref, abs=1e-10)


def test_mixture_log_density_far_point_finite():
    gmm = GaussianMixture(np.zeros((2, 2)), np.full((2, 2), 1e-3))
    assert math.isfinite(mixture_log_density(gmm, np.array([50.0, -50.0])))


def test_mixture_dimension_mismatch():
    gmm = GaussianMixture(np.zeros((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        gmm.log_density(np.zeros(3))


def test_mixture_single_component_is_gaussian():
    gmm = build_mixture(np.array([[2.0, -1.0]]), 0.3)
    z = np.array([2.2, -0.8])
    ref = norm.logpdf(z, [2.0, -1.0], [0.6, 0.3]).sum()
    assert mixture_log_density(gmm, z) == pytest.approx(ref, abs=1e-12)


def test_component_indices_cap_and_seed():
    idx = component_indices(100, 10, Rng(3))
    assert idx.size == 10 and np.all(np.diff(idx) > 0)
    np.testing.assert_array_equal(idx, component_indices(100, 10, Rng(3)))
    np.testing.assert_array_equal(component_indices(5, 10), np.arange(5))


def test_noisy_samples_layout():
    f = np.array([[1.0, 2.0], [3.0, 4.0]])
    z = noisy_samples(f, 1e-9, 3, Rng(0))
    assert z.shape == (6, 2)
    np.testing.assert_allclose(z, np.repeat(f, 3, axis=0), rtol=1e-7)


def test_marginal_entropy_single_gaussian():
    # one component: h(Z) of N(m, s^2) is known exactly
    gmm = GaussianMixture(np.zeros((1, 1)), np.ones((1, 1)))
    z = Rng(4).generator().standard_normal((200_000, 1))
    est = marginal_entropy_mc(gmm, z)
    assert abs(est.nats - 0.5 * LOG_2PIE) < 3 * est.stderr + 1e-3


def test_mi_estimate_deterministic_given_seed():
    f = np.random.default_rng(1).normal(size=(50, 4))
    a = mi_gaussian_dropout(f, 0.2, rng=Rng(9))
    b = mi_gaussian_dropout(f, 0.2, rng=Rng(9))
    assert a.value == b.value and a.upper_bound == b.upper_bound


def test_mi_estimate_fields():
    f = np.random.default_rng(1).normal(size=(50, 4))
    est = mi_gaussian_dropout(f, 0.2, masks_per_input=4, max_components=20, rng=Rng(1))
    assert est.sample_count == 50 and est.noise_masks_per_input == 4
    assert est.metadata["components"] == 20 and est.metadata["eval_samples"] == 80
    assert est.value == pytest.approx(est.h_z - est.h_z_given_x)
    assert est.upper_bound_mi == pytest.approx(est.upper_bound - est.h_z_given_x)


def test_mi_estimate_rejects_nan():
    with pytest.raises(ValueError):
        mi_gaussian_dropout(np.array([[np.nan]]), 0.1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_mi_nonnegative_within_3se(seed, dim):
    f = Rng(seed).generator().normal(1.0, 1.0, size=(200, dim))
    est = mi_gaussian_dropout(f, 0.3, rng=Rng(seed))
    assert est.value >= -3 * est.stderr


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mc_entropy_below_gaussian_bound(seed):
    f = 2 * Rng(seed).generator().standard_normal((500, 2)) + 0.5
    est = mi_gaussian_dropout(f, 0.2, rng=Rng(seed))
    assert est.h_z <= est.upper_bound + 3 * est.stderr


def test_more_noise_less_information():
    f = 2 * Rng(0).generator().standard_normal((2000, 1)) + 0.5
    lo = mi_gaussian_dropout(f, 0.1, rng=Rng(1))
    hi = mi_gaussian_dropout(f, 0.4, rng=Rng(1))
    assert lo.value - hi.value > 3 * (lo.stderr + hi.stderr)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dropout_mi.estimators import BinningConfig, discretize, mi_binning, mi_labels_binning, plugin_entropy


def test_plugin_entropy_uniform():
    assert plugin_entropy([0, 1, 2, 3]) == pytest.approx(math.log(4))
    assert plugin_entropy([7, 7, 7]) == 0.0
    with pytest.raises(ValueError):
        plugin_entropy([])


def test_discretize_edges():
    cells = discretize(np.array([0.0, 0.5, 1.0]), BinningConfig(bins=2))
    np.testing.assert_array_equal(cells.ravel(), [0, 1, 1])


def test_discretize_width_mode():
    cells = discretize(np.array([0.0, 0.25, 0.6]), BinningConfig.by_width(0.5))
    np.testing.assert_array_equal(cells.ravel(), [0, 0, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        BinningConfig(bins=0)
    with pytest.raises(ValueError):
        BinningConfig(mode="width")
    with pytest.raises(ValueError):
        BinningConfig(mode="quantile")


def test_deterministic_high_dim_saturates():
    f = np.random.default_rng(0).normal(size=(1000, 50))
    assert mi_binning(f, f, BinningConfig(bins=30)) == pytest.approx(math.log(1000), abs=1e-9)


def test_single_bin_gives_zero():
    f = np.random.default_rng(0).normal(size=(100, 3))
    assert mi_binning(f, f, BinningConfig(bins=1)) == 0.0


def test_mask_count_must_divide():
    with pytest.raises(ValueError):
        mi_binning(np.zeros((3, 1)), np.zeros((7, 1)))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(2, 60), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)),
       st.integers(1, 5))
def test_binning_bounded_by_log_samples(f, k):
    v = mi_binning(f, f, BinningConfig(bins=k))
    assert -1e-12 <= v <= math.log(f.shape[0]) + 1e-9


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(2, 80), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)),
       st.integers(1, 16))
def test_binning_monotone_under_refinement(f, k):
    # doubling the bin count refines every cell, so the plug-in H(Zhat) cannot drop
    coarse = mi_binning(f, f, BinningConfig(bins=k))
    fine = mi_binning(f, f, BinningConfig(bins=2 * k))
    assert fine >= coarse - 1e-12


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(2, 80), st.just(2)), elements=st.floats(-10, 10)),
       st.lists(st.integers(0, 3), min_size=80, max_size=80), st.integers(1, 20))
def test_label_binning_capped(z, labels, k):
    y = np.array(labels[: z.shape[0]])
    v = mi_labels_binning(z, y, BinningConfig(bins=k))
    n_classes = len(set(y.tolist()))
    assert 0.0 <= v <= math.log(max(n_classes, 1)) + 1e-9


def test_label_binning_perfect_separation():
    z = np.array([[0.0], [0.1], [5.0], [5.1]])
    assert mi_labels_binning(z, np.array([0, 0, 1, 1]), BinningConfig(bins=2)) == pytest.approx(math.log(2))

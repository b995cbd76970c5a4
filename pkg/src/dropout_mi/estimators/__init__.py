from typing import Protocol

import numpy as np

from .binning import BinningConfig, discretize, mi_binning, mi_labels_binning, plugin_entropy
from .mixture import (
    DEFAULT_MASKS,
    DEFAULT_MAX_COMPONENTS,
    ZERO_FLOOR,
    ConditionalEntropy,
    DegenerateInputError,
    GaussianMixture,
    MarginalEntropy,
    MiEstimate,
    build_mixture,
    component_indices,
    conditional_entropy_gaussian_dropout,
    marginal_entropy_mc,
    mi_gaussian_dropout,
    mixture_log_density,
    noisy_samples,
)
from .variational import (
    InfoDropoutKl,
    empirical_label_distribution,
    info_dropout_kl_relu,
    info_dropout_kl_softplus,
    label_entropy,
    mi_labels_variational,
)


class ExternalEstimator(Protocol):
    """Hook for third-party baselines (EDGE, DoE, MINE, ...); none ship here.

    Harness comparison tables reserve a column per registered name and mark it
    unavailable when nothing is registered.
    """

    name: str

    def __call__(self, pre_noise: np.ndarray, noisy_samples: np.ndarray) -> float: ...


__all__ = [name for name in dir() if not name.startswith("_")]

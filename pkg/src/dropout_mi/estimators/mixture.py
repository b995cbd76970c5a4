"""Gaussian-mixture Monte-Carlo estimate of I(X;Z) under Gaussian dropout.

``Z = f(X) * D`` with ``D ~ N(1, sigma^2)`` elementwise. Given ``f(x)`` the
components of ``Z`` are independent Gaussians with std ``sigma * |f(x)_i|``,
so ``h(Z|X)`` has a closed form, while ``h(Z)`` is estimated by evaluating a
uniform mixture of those conditionals on noisy samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..numerics import (
    LOG_2PI,
    LOG_2PIE,
    Rng,
    fsum_mean,
    gaussian_entropy,
    log_sum_exp_rows,
    sample_covariance,
)

ZERO_FLOOR = 1e-8
DEFAULT_MASKS = 10
DEFAULT_MAX_COMPONENTS = 2000
# rows of noisy samples evaluated per block; keeps the K x block matrix small
_BLOCK = 2048


class DegenerateInputError(ValueError):
    """Every (sample, unit) pair was excluded by the zero floor."""


def _as_matrix(a, name: str) -> np.ndarray:
    x = np.asarray(a, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


class ConditionalEntropy(NamedTuple):
    nats: float
    excluded: int


def conditional_entropy_gaussian_dropout(pre_noise, sigma: float,
                                         zero_floor: float = ZERO_FLOOR) -> ConditionalEntropy:
    """Closed-form ``h(Z|X)`` averaged over the rows of ``pre_noise``.

    Pairs with ``|f(x)_i| < zero_floor`` carry no noise (``Z_i = 0`` exactly)
    and are left out of the sum; their count is returned.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    f = _as_matrix(pre_noise, "pre_noise")
    if f.shape[0] == 0:
        raise ValueError("empty batch")
    mag = np.abs(f)
    keep = mag >= zero_floor
    excluded = int(keep.size - np.count_nonzero(keep))
    if excluded == keep.size:
        raise DegenerateInputError("all representation components are below the zero floor")
    logs = np.where(keep, np.log(np.where(keep, mag, 1.0)), 0.0)
    per_row = logs.sum(axis=1) + keep.sum(axis=1) * (math.log(sigma) + 0.5 * LOG_2PIE)
    return ConditionalEntropy(fsum_mean(per_row), excluded)


@dataclass(frozen=True)
class GaussianMixture:
    """Uniform mixture of diagonal Gaussians; one row of ``means``/``stds`` per component."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = _as_matrix(self.means, "means")
        stds = _as_matrix(self.stds, "stds")
        if means.shape != stds.shape:
            raise ValueError("means and stds must have the same shape")
        if means.shape[0] < 1:
            raise ValueError("a mixture needs at least one component")
        if np.any(stds <= 0):
            raise ValueError("component stds must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_density(self, z) -> np.ndarray:
        """Log-density at each row of ``z`` (a vector is treated as one point)."""
        pts = np.asarray(z, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise ValueError(f"point dimension {pts.shape[1]} does not match mixture dimension {self.dim}")
        prec = 0.5 / self.stds**2                      # K x N
        lin = 2.0 * self.means * prec                  # K x N
        const = (-np.sum(self.means**2 * prec, axis=1)
                 - np.sum(np.log(self.stds), axis=1)
                 - 0.5 * self.dim * LOG_2PI
                 - math.log(self.n_components))        # K
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], _BLOCK):
            block = pts[start:start + _BLOCK]
            # -(z - m)^2 / (2 s^2) expanded so the K x M work is two matrix products
            logp = const - (block**2) @ prec.T + block @ lin.T
            out[start:start + _BLOCK] = log_sum_exp_rows(logp)
        return out[0] if single else out


def component_indices(n_inputs: int, max_components: int, rng: Rng | None = None) -> np.ndarray:
    """Sorted indices of the inputs that become mixture components."""
    if max_components < 1:
        raise ValueError("max_components must be >= 1")
    if n_inputs <= max_components:
        return np.arange(n_inputs)
    order = (rng or Rng()).generator().permutation(n_inputs)
    return np.sort(order[:max_components])


def build_mixture(pre_noise, sigma: float, max_components: int = DEFAULT_MAX_COMPONENTS,
                  rng: Rng | None = None, zero_floor: float = ZERO_FLOOR) -> GaussianMixture:
    """Mixture centred on (a seeded random subset of) the pre-noise representations."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    f = _as_matrix(pre_noise, "pre_noise")
    if f.shape[0] == 0:
        raise ValueError("empty batch")
    means = f[component_indices(f.shape[0], max_components, rng)]
    stds = sigma * np.maximum(np.abs(means), zero_floor)
    return GaussianMixture(means.copy(), stds)


def mixture_log_density(gmm: GaussianMixture, z) -> float:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be a single point")
    return float(gmm.log_density(z))


class MarginalEntropy(NamedTuple):
    nats: float
    stderr: float


def marginal_entropy_mc(gmm: GaussianMixture, noisy_samples) -> MarginalEntropy:
    """``-mean(log p(z))`` over the noisy samples, with its standard error."""
    z = _as_matrix(noisy_samples, "noisy_samples")
    if z.shape[0] < 1:
        raise ValueError("need at least one noisy sample")
    lp = gmm.log_density(z)
    se = float(np.std(lp, ddof=1) / math.sqrt(lp.size)) if lp.size > 1 else 0.0
    return MarginalEntropy(-fsum_mean(lp), se)


def gaussian_dropout_noise(rng: Rng, shape, sigma: float) -> np.ndarray:
    return 1.0 + sigma * rng.generator().standard_normal(shape)


def noisy_samples(pre_noise, sigma: float, masks_per_input: int, rng: Rng) -> np.ndarray:
    """``masks_per_input`` noisy copies of each row, input-major ordering."""
    f = _as_matrix(pre_noise, "pre_noise")
    reps = np.repeat(f, masks_per_input, axis=0)
    return reps * gaussian_dropout_noise(rng, reps.shape, sigma)


@dataclass
class MiEstimate:
    value: float
    h_z: float
    h_z_given_x: float
    stderr: float
    upper_bound: float | None
    sample_count: int
    noise_masks_per_input: int
    metadata: dict = field(default_factory=dict)

    @property
    def upper_bound_mi(self) -> float | None:
        if self.upper_bound is None:
            return None
        return self.upper_bound - self.h_z_given_x

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "h_z": self.h_z,
            "h_z_given_x": self.h_z_given_x,
            "stderr": self.stderr,
            "upper_bound": self.upper_bound,
            "sample_count": self.sample_count,
            "noise_masks_per_input": self.noise_masks_per_input,
            "metadata": dict(self.metadata),
        }


def mi_gaussian_dropout(pre_noise, sigma: float, masks_per_input: int = DEFAULT_MASKS,
                        max_components: int = DEFAULT_MAX_COMPONENTS, rng: Rng | None = None,
                        zero_floor: float = ZERO_FLOOR, upper_bound: bool = True,
                        return_samples: bool = False):
    """Estimate ``I(X;Z)`` for ``Z = f(X) * D``, ``D ~ N(1, sigma^2)``.

    ``h(Z|X)`` uses every input. ``h(Z)`` is the Monte-Carlo entropy of the
    mixture built on at most ``max_components`` inputs, evaluated on the noisy
    samples of those same inputs: points from inputs outside the mixture would
    be scored by a density they were not drawn from, which biases ``h(Z)``
    upwards (severely so in high dimension). The Gaussian upper bound uses all
    noisy samples.

    With ``return_samples`` the noisy samples are returned as well, as
    ``(estimate, samples)``.
    """
    if masks_per_input < 1:
        raise ValueError("masks_per_input must be >= 1")
    rng = rng or Rng()
    f = _as_matrix(pre_noise, "pre_noise")
    cond = conditional_entropy_gaussian_dropout(f, sigma, zero_floor)
    z = noisy_samples(f, sigma, masks_per_input, rng.derive(1))
    idx = component_indices(f.shape[0], max_components, rng.derive(2))
    means = f[idx]
    gmm = GaussianMixture(means, sigma * np.maximum(np.abs(means), zero_floor))
    z_eval = z.reshape(f.shape[0], masks_per_input, f.shape[1])[idx].reshape(-1, f.shape[1])
    marg = marginal_entropy_mc(gmm, z_eval)
    ub = None
    singular = None
    if upper_bound and z.shape[0] >= 2:
        ge = gaussian_entropy(sample_covariance(z))
        ub, singular = ge.nats, ge.singular
    est = MiEstimate(
        value=marg.nats - cond.nats,
        h_z=marg.nats,
        h_z_given_x=cond.nats,
        stderr=marg.stderr,
        upper_bound=ub,
        sample_count=f.shape[0],
        noise_masks_per_input=masks_per_input,
        metadata={
            "estimator": "gmm_mc",
            "sigma": sigma,
            "components": gmm.n_components,
            "eval_samples": int(z_eval.shape[0]),
            "zero_floor": zero_floor,
            "excluded_pairs": cond.excluded,
            "upper_bound_singular": singular,
            "seed": rng.seed,
            "stream": rng.stream,
        },
    )
    return (est, z) if return_samples else est

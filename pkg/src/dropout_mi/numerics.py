"""Seedable random streams, stable reductions and closed-form Gaussian entropies.

All entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack

RNG_ALGORITHM = "numpy.Philox4x64-10/SeedSequence"

_MASK64 = (1 << 64) - 1
# pivots below this fraction of the largest pivot count as zero
SINGULAR_PIVOT_RATIO = 1e-12
LOG_2PI = math.log(2.0 * math.pi)
LOG_2PIE = LOG_2PI + 1.0


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class Rng:
    """Immutable key for a counter-based random stream.

    The same ``(seed, stream)`` pair always produces the same numbers, so an
    ``Rng`` can be passed around freely and shared between threads. Use
    :meth:`derive` to obtain independent sub-streams.
    """

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not (0 <= int(value) <= _MASK64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def derive(self, *keys: int) -> "Rng":
        stream = self.stream
        for key in keys:
            stream = _splitmix64(stream ^ _splitmix64(int(key) & _MASK64))
        return Rng(self.seed, stream)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))


def as_rng(rng: Rng | int | None) -> Rng:
    if rng is None:
        return Rng()
    if isinstance(rng, Rng):
        return rng
    return Rng(int(rng))


def log_sum_exp(values) -> float:
    """Stable ``log(sum(exp(values)))``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("log_sum_exp of an empty vector")
    if v.size == 1:
        return float(v[0])
    m = float(np.max(v))
    if not math.isfinite(m):
        return m
    return m + math.log(math.fsum(np.exp(v - m)))


def log_sum_exp_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2-D array."""
    m = np.max(values, axis=1, keepdims=True)
    return m[:, 0] + np.log(np.sum(np.exp(values - m), axis=1))


def sample_gaussian(rng: Rng, mean: float, std: float, count: int) -> np.ndarray:
    if not std > 0:
        raise ValueError(f"std must be positive, got {std}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return mean + std * rng.generator().standard_normal(count)


def sample_lognormal(rng: Rng, log_std: float, count: int) -> np.ndarray:
    if not log_std > 0:
        raise ValueError(f"log_std must be positive, got {log_std}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return np.exp(log_std * rng.generator().standard_normal(count))


def sample_covariance(samples) -> np.ndarray:
    """Unbiased covariance of the rows of ``samples`` (divisor ``n - 1``)."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("sample covariance needs at least two samples")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    return 0.5 * (cov + cov.T)


class GaussianEntropy(NamedTuple):
    nats: float
    singular: bool


def _check_symmetric(cov: np.ndarray) -> None:
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    scale = max(float(np.max(np.abs(cov))), np.finfo(float).tiny)
    if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
        raise ValueError("covariance matrix is not symmetric")
    if np.any(np.diag(cov) < 0):
        raise ValueError("covariance matrix has negative diagonal entries")


def gaussian_entropy(cov) -> GaussianEntropy:
    """Entropy of a Gaussian with covariance ``cov``.

    The log-determinant comes from a pivoted Cholesky factorization. When the
    smallest pivot falls below ``SINGULAR_PIVOT_RATIO`` times the largest, the
    matrix is treated as singular and the Hadamard bound
    ``det(cov) <= prod(diag(cov))`` is used instead; the result is then still an
    upper bound on the entropy of any distribution with these marginal
    variances, and ``singular`` is set.
    """
    c = np.atleast_2d(np.asarray(cov, dtype=float))
    _check_symmetric(c)
    n = c.shape[0]
    diag = np.diag(c)
    largest = float(np.max(diag))
    if largest > 0:
        factor, _piv, rank, info = lapack.dpstrf(c, lower=1, tol=SINGULAR_PIVOT_RATIO * largest)
        if info < 0:
            raise ValueError("pivoted Cholesky rejected its input")
        if rank == n:
            logdet = 2.0 * float(np.sum(np.log(np.diag(factor))))
            return GaussianEntropy(0.5 * n * LOG_2PIE + 0.5 * logdet, False)
    with np.errstate(divide="ignore"):
        log_diag = np.log(diag)
    return GaussianEntropy(0.5 * n * LOG_2PIE + 0.5 * float(np.sum(log_diag)), True)


def diag_gaussian_entropy(std) -> float:
    s = np.asarray(std, dtype=float)
    if np.any(s <= 0):
        raise ValueError("standard deviations must be positive")
    return float(np.sum(0.5 * LOG_2PIE + np.log(s)))


@dataclass(frozen=True)
class DiagGaussian:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        if mean.shape != std.shape:
            raise ValueError("mean and std must have the same shape")
        if np.any(std <= 0):
            raise ValueError("std must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def entropy(self) -> float:
        return diag_gaussian_entropy(self.std)

    def log_density(self, z) -> float:
        z = np.asarray(z, dtype=float)
        r = (z - self.mean) / self.std
        return float(-0.5 * np.sum(r * r) - np.sum(np.log(self.std)) - 0.5 * self.mean.size * LOG_2PI)


def fsum_mean(values) -> float:
    """Order-independent, compensated mean."""
    v = np.asarray(values, dtype=float).ravel()
    return math.fsum(v) / v.size

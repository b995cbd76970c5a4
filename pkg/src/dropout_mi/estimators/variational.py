"""Closed-form quantities read off training objectives.

``mi_labels_variational`` is the cross-entropy lower bound on ``I(Z;Y)``; the
``info_dropout_kl_*`` functions give the per-sample KL terms whose expectation
over inputs is ``I(X;Z)`` for information-dropout layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import LOG_2PIE


def label_entropy(label_distribution) -> float:
    p = np.asarray(label_distribution, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError("label_distribution must be a probability vector")
    nz = p[p > 0]
    return -math.fsum(nz * np.log(nz))


def empirical_label_distribution(labels, n_classes: int | None = None) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64).ravel()
    counts = np.bincount(y, minlength=n_classes or 0)
    return counts / counts.sum()


def mi_labels_variational(cross_entropy_loss: float, label_distribution) -> float:
    """``max(0, H(Y) - cross_entropy)`` in nats."""
    if cross_entropy_loss < 0 or not math.isfinite(cross_entropy_loss):
        raise ValueError(f"cross-entropy must be finite and non-negative, got {cross_entropy_loss}")
    return max(0.0, label_entropy(label_distribution) - cross_entropy_loss)


@dataclass(frozen=True)
class InfoDropoutKl:
    values: np.ndarray
    prior: str
    params: dict

    @property
    def batch_size(self) -> int:
        return int(self.values.shape[0]) if self.values.ndim else 1

    def per_sample(self) -> np.ndarray:
        """KL per input: summed over units when ``values`` is a batch x units matrix."""
        v = self.values
        return v.sum(axis=1) if v.ndim == 2 else v

    def mean(self) -> float:
        """Batch mean of the per-sample KL, the reported ``I(X;Z)`` estimate."""
        return float(np.mean(self.per_sample()))

    def total(self) -> float:
        return float(np.sum(self.per_sample()))


def info_dropout_kl_softplus(alpha, prior_mu: float = 0.0, prior_sigma: float = 1.0) -> InfoDropoutKl:
    """KL between the log-noise ``N(0, alpha^2)`` and the log-normal prior ``N(mu, sigma^2)``.

    Elementwise ``log(sigma/alpha) + (alpha^2 + mu^2) / (2 sigma^2) - 1/2``.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(~(a > 0)):
        raise ValueError("alpha must be strictly positive")
    if not prior_sigma > 0:
        raise ValueError("prior_sigma must be positive")
    kl = (math.log(prior_sigma) - np.log(a)
          + (a * a + prior_mu * prior_mu) / (2.0 * prior_sigma * prior_sigma) - 0.5)
    return InfoDropoutKl(np.maximum(kl, 0.0), "softplus-lognormal",
                         {"mu": prior_mu, "sigma": prior_sigma})


def info_dropout_kl_relu(alpha, log_c: float, q: float, zero_mask=None) -> InfoDropoutKl:
    """KL against the ReLU prior: a point mass ``q`` at zero plus a log-uniform part
    with log-density ``log_c``.

    Zero activations cost ``-log q``; the others ``-(log alpha + log(2 pi e)/2) - log_c``.
    The prior constants are not fixed by the method and must be supplied.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    a = np.asarray(alpha, dtype=float)
    zero = np.zeros(a.shape, dtype=bool) if zero_mask is None else np.asarray(zero_mask, dtype=bool)
    if zero.shape != a.shape:
        raise ValueError("zero_mask must match alpha in shape")
    active = ~zero
    if np.any(~(a[active] > 0)):
        raise ValueError("alpha must be strictly positive on non-zero activations")
    safe = np.where(active, a, 1.0)
    kl = np.where(active, -(np.log(safe) + 0.5 * LOG_2PIE) - log_c, -math.log(q))
    return InfoDropoutKl(kl, "relu-loguniform", {"log_c": log_c, "q": q})

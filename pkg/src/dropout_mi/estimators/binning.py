"""Plug-in (histogram) mutual information after per-dimension discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BinningConfig:
    """``mode='count'`` splits each dimension's observed range into ``bins``
    equal cells; ``mode='width'`` uses cells of fixed ``width`` anchored at the
    observed minimum."""

    mode: str = "count"
    bins: int = 30
    width: float | None = None

    def __post_init__(self):
        if self.mode not in ("count", "width"):
            raise ValueError(f"unknown binning mode {self.mode!r}")
        if self.mode == "count" and self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.mode == "width" and not (self.width is not None and self.width > 0):
            raise ValueError("bin width must be positive")

    @classmethod
    def by_width(cls, width: float) -> "BinningConfig":
        return cls(mode="width", width=width)

    def label(self) -> str:
        return f"bins={self.bins}" if self.mode == "count" else f"width={self.width:g}"


def discretize(samples, config: BinningConfig) -> np.ndarray:
    """Integer cell index per sample and dimension."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("cannot discretize an empty sample")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    if config.mode == "count":
        span = np.where(hi > lo, hi - lo, 1.0)
        idx = np.floor((x - lo) / span * config.bins).astype(np.int64)
        return np.clip(idx, 0, config.bins - 1)
    return np.floor((x - lo) / config.width).astype(np.int64)


def _symbols(cells: np.ndarray) -> np.ndarray:
    """Map each row of cell indices to one integer symbol."""
    _, inverse = np.unique(cells, axis=0, return_inverse=True)
    return inverse.ravel()


def plugin_entropy(symbols) -> float:
    """Plug-in entropy (nats) of a sequence of hashable symbols."""
    s = np.asarray(symbols)
    if s.size == 0:
        raise ValueError("entropy of an empty sample")
    _, counts = np.unique(s, return_counts=True)
    p = counts / s.size
    return max(0.0, -math.fsum(p * np.log(p)))


def mi_binning(pre_noise, noisy_samples, config: BinningConfig = BinningConfig()) -> float:
    """Plug-in ``I(X; Zhat)`` with ``X`` uniform over the rows of ``pre_noise``.

    ``noisy_samples`` holds ``masks`` consecutive rows per input. The
    conditional term is estimated from each input's own masks, so with one mask
    per input it vanishes and the result is the entropy of the binned
    representation.
    """
    f = np.asarray(pre_noise, dtype=float)
    z = np.asarray(noisy_samples, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n_inputs = f.shape[0] if f.ndim else 0
    if n_inputs == 0 or z.shape[0] == 0:
        raise ValueError("mi_binning needs at least one sample")
    if z.shape[0] % n_inputs:
        raise ValueError(f"{z.shape[0]} noisy rows is not a multiple of {n_inputs} inputs")
    masks = z.shape[0] // n_inputs
    sym = _symbols(discretize(z, config))
    h_z = plugin_entropy(sym)
    if masks == 1:
        return h_z
    per_input = sym.reshape(n_inputs, masks)
    h_cond = math.fsum(plugin_entropy(row) for row in per_input) / n_inputs
    return max(0.0, h_z - h_cond)


def mi_labels_binning(noisy_samples, labels, config: BinningConfig = BinningConfig()) -> float:
    """Plug-in ``I(Zhat; Y) = H(Zhat) + H(Y) - H(Zhat, Y)``."""
    z = np.asarray(noisy_samples, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    y = np.asarray(labels).ravel()
    if z.shape[0] != y.size:
        raise ValueError(f"{z.shape[0]} samples but {y.size} labels")
    if y.size == 0:
        raise ValueError("mi_labels_binning needs at least one sample")
    sym = _symbols(discretize(z, config))
    _, y_sym = np.unique(y, return_inverse=True)
    joint = sym.astype(np.int64) * (int(y_sym.max()) + 1) + y_sym.ravel()
    h_z, h_y, h_zy = plugin_entropy(sym), plugin_entropy(y_sym), plugin_entropy(joint)
    return min(max(0.0, h_z + h_y - h_zy), h_z, h_y)

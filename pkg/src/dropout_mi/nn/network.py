"""Small fully connected networks with multiplicative-noise layers.

Layers keep everything needed for the backward pass in a per-call cache, so a
``Network`` holds only parameters and is safe to read from probe hooks while
training is paused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..numerics import Rng

MODES = ("train", "mc_inference", "deterministic")
# lower clip on the information-dropout noise scale keeps log(alpha) finite
ALPHA_MIN = 1e-3


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    fan_in: int | None = None
    fan_out: int | None = None
    activation: str | None = None
    variance: float | None = None
    alpha_max_sq: float | None = None

    def __post_init__(self):
        if self.kind == "dense":
            if not (self.fan_in and self.fan_out and self.fan_in > 0 and self.fan_out > 0):
                raise ValueError("dense layers need positive fan_in and fan_out")
        elif self.kind == "activation":
            if self.activation not in ("relu", "softplus"):
                raise ValueError(f"unsupported activation {self.activation!r}")
        elif self.kind == "gaussian_dropout":
            if not (self.variance is not None and self.variance > 0):
                raise ValueError("gaussian_dropout needs a positive variance")
        elif self.kind == "info_dropout":
            if not (self.alpha_max_sq is not None and 0 < self.alpha_max_sq < 1):
                raise ValueError("info_dropout needs alpha_max_sq in (0, 1)")
        else:
            raise ValueError(f"unknown layer kind {self.kind!r}")

    @staticmethod
    def dense(fan_in: int, fan_out: int) -> "LayerSpec":
        return LayerSpec("dense", fan_in=fan_in, fan_out=fan_out)

    @staticmethod
    def act(name: str) -> "LayerSpec":
        return LayerSpec("activation", activation=name)

    @staticmethod
    def gaussian_dropout(variance: float) -> "LayerSpec":
        return LayerSpec("gaussian_dropout", variance=variance)

    @staticmethod
    def info_dropout(alpha_max_sq: float = 0.7) -> "LayerSpec":
        return LayerSpec("info_dropout", alpha_max_sq=alpha_max_sq)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @property
    def is_noise(self) -> bool:
        return self.kind in ("gaussian_dropout", "info_dropout")


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def glorot_uniform(gen: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class ForwardResult:
    logits: np.ndarray
    pre_noise: np.ndarray | None
    post_noise: np.ndarray | None
    alpha: np.ndarray | None
    noise: list
    caches: list = field(repr=False, default_factory=list)


class Network:
    """Sequential stack of ``LayerSpec`` layers with numpy parameters.

    ``params[i]`` is a dict of arrays for layer ``i`` (empty for parameter-free
    layers). Information-dropout layers own an alpha head ``Wa, ba`` that maps
    the layer input to ``log alpha``.
    """

    def __init__(self, specs, params=None, seed: int = 0):
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec(**s) for s in specs]
        self.seed = seed
        width = None
        for spec in self.specs:
            if spec.kind == "dense":
                if width is not None and spec.fan_in != width:
                    raise ValueError(f"dense fan_in {spec.fan_in} does not follow width {width}")
                width = spec.fan_out
        if self.specs[-1].kind != "dense":
            raise ValueError("the last layer must be dense (logits)")
        noise_layers = [i for i, s in enumerate(self.specs) if s.is_noise]
        self.probe_index = noise_layers[0] if noise_layers else None
        self.params = params if params is not None else self._init_params(Rng(seed).derive(0xC0FFEE))

    def _init_params(self, rng: Rng) -> list[dict]:
        gen = rng.generator()
        params: list[dict] = []
        width = None
        for spec in self.specs:
            p: dict = {}
            if spec.kind == "dense":
                p["W"] = glorot_uniform(gen, spec.fan_in, spec.fan_out)
                p["b"] = np.zeros(spec.fan_out)
                width = spec.fan_out
            elif spec.kind == "info_dropout":
                p["Wa"] = glorot_uniform(gen, width, width) * 0.1
                # start at half the maximal noise scale
                p["ba"] = np.full(width, 0.5 * math.log(spec.alpha_max_sq) - math.log(2.0))
            params.append(p)
        return params

    @property
    def input_dim(self) -> int:
        return next(s.fan_in for s in self.specs if s.kind == "dense")

    @property
    def n_classes(self) -> int:
        return self.specs[-1].fan_out

    def copy(self) -> "Network":
        return Network(self.specs, [{k: v.copy() for k, v in p.items()} for p in self.params], self.seed)

    def parameter_count(self) -> int:
        return sum(v.size for p in self.params for v in p.values())

    # -- forward / backward ------------------------------------------------

    def forward(self, x, mode: str = "deterministic", rng: Rng | None = None,
                noise: list | None = None) -> ForwardResult:
        """Run the network.

        In ``train`` and ``mc_inference`` modes fresh noise is drawn from
        ``rng`` (one derived stream per noise layer) unless ``noise`` supplies
        a frozen standard-normal realization per noise layer. ``deterministic``
        sets every multiplicative noise factor to one.
        """
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        h = np.asarray(x, dtype=float)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ValueError(f"expected input of shape (batch, {self.input_dim}), got {h.shape}")
        if mode != "deterministic" and noise is None and rng is None:
            raise ValueError(f"mode {mode!r} needs an rng or a frozen noise realization")
        caches: list = []
        used_noise: list = []
        pre = post = alpha_out = None
        noise_slot = 0
        for i, (spec, p) in enumerate(zip(self.specs, self.params)):
            if spec.kind == "dense":
                caches.append(h)
                h = h @ p["W"] + p["b"]
            elif spec.kind == "activation":
                caches.append(h)
                h = np.maximum(h, 0.0) if spec.activation == "relu" else _softplus(h)
            else:
                if noise is not None:
                    eps = noise[noise_slot]
                elif mode == "deterministic":
                    eps = None
                else:
                    eps = rng.derive(i).generator().standard_normal(h.shape)
                noise_slot += 1
                used_noise.append(eps)
                f_in = h
                if spec.kind == "gaussian_dropout":
                    factor = np.ones_like(h) if eps is None else 1.0 + math.sqrt(spec.variance) * eps
                    caches.append((f_in, factor))
                    h = f_in * factor
                    alpha = None
                else:
                    log_a = f_in @ p["Wa"] + p["ba"]
                    hi = 0.5 * math.log(spec.alpha_max_sq)
                    lo = math.log(ALPHA_MIN)
                    clipped = np.clip(log_a, lo, hi)
                    alpha = np.exp(clipped)
                    factor = np.ones_like(h) if eps is None else np.exp(alpha * eps)
                    active = (log_a > lo) & (log_a < hi)
                    caches.append((f_in, factor, alpha, eps, active))
                    h = f_in * factor
                if i == self.probe_index:
                    pre, post, alpha_out = f_in, h, alpha
        return ForwardResult(h, pre, post, alpha_out, used_noise, caches)

    def backward(self, result: ForwardResult, grad_logits: np.ndarray,
                 grad_alpha: np.ndarray | None = None) -> list[dict]:
        """Gradients of a scalar loss given ``dL/dlogits`` and optionally
        ``dL/dalpha`` at the probe information-dropout layer."""
        grads: list[dict] = [dict() for _ in self.specs]
        g = grad_logits
        for i in range(len(self.specs) - 1, -1, -1):
            spec, p, cache = self.specs[i], self.params[i], result.caches[i]
            if spec.kind == "dense":
                grads[i]["W"] = cache.T @ g
                grads[i]["b"] = g.sum(axis=0)
                g = g @ p["W"].T
            elif spec.kind == "activation":
                g = g * ((cache > 0).astype(float) if spec.activation == "relu" else _sigmoid(cache))
            elif spec.kind == "gaussian_dropout":
                f_in, factor = cache
                g = g * factor
            else:
                f_in, factor, alpha, eps, active = cache
                g_alpha = np.zeros_like(alpha)
                if eps is not None:
                    # z = f * exp(alpha * eps)
                    g_alpha = g_alpha + g * f_in * factor * eps
                if grad_alpha is not None and i == self.probe_index:
                    g_alpha = g_alpha + grad_alpha
                g_log_a = g_alpha * alpha * active
                grads[i]["Wa"] = f_in.T @ g_log_a
                grads[i]["ba"] = g_log_a.sum(axis=0)
                g = g * factor + g_log_a @ p["Wa"].T
        return grads


def fc_network(sizes, activation: str = "softplus", noise: LayerSpec | None = None,
               noise_after: int | None = None, seed: int = 0) -> Network:
    """Dense stack ``sizes[0] -> ... -> sizes[-1]`` with ``activation`` between
    layers and an optional noise layer after hidden layer ``noise_after``
    (1-based; defaults to the penultimate layer)."""
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    hidden = len(sizes) - 2
    if noise is not None and noise_after is None:
        noise_after = hidden
    specs: list[LayerSpec] = []
    for k in range(len(sizes) - 1):
        specs.append(LayerSpec.dense(sizes[k], sizes[k + 1]))
        if k < len(sizes) - 2:
            specs.append(LayerSpec.act(activation))
            if noise is not None and k + 1 == noise_after:
                specs.append(noise)
    return Network(specs, seed=seed)

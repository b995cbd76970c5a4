"""Cross-entropy training with SGD + momentum and probe hooks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..numerics import Rng
from .network import ForwardResult, Network


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 100
    learning_rate: float = 0.05
    momentum: float = 0.9
    # (epoch, multiplier): multiplier applies to every epoch after ``epoch``
    lr_schedule: list = field(default_factory=list)
    seed: int = 0
    beta: float = 0.0
    probe_epochs: list = field(default_factory=list)
    weight_decay: float = 0.0
    # per-sample KL (summed over units) is multiplied by beta / kl_normalizer;
    # None means the training-set size
    kl_normalizer: float | None = None

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        self.lr_schedule = [tuple(e) for e in self.lr_schedule]
        self.probe_epochs = sorted(set(int(e) for e in self.probe_epochs))

    def lr_at(self, epoch: int) -> float:
        lr = self.learning_rate
        for after, mult in self.lr_schedule:
            if epoch > after:
                lr *= mult
        return lr


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, trace: list | None = None):
        super().__init__(f"non-finite loss in epoch {epoch}")
        self.epoch = epoch
        self.trace = trace or []


@dataclass
class Batch:
    x: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape[0] != self.x.shape[0]:
                raise ValueError("inputs and labels differ in length")

    def __len__(self) -> int:
        return self.x.shape[0]

    def take(self, idx) -> "Batch":
        return Batch(self.x[idx], None if self.y is None else self.y[idx])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    lp = log_softmax(logits)
    return float(-lp[np.arange(labels.size), labels].mean())


def softplus_kl(alpha: np.ndarray) -> np.ndarray:
    """Elementwise KL of ``N(0, alpha^2)`` from the standard normal prior."""
    return 0.5 * alpha * alpha - np.log(alpha) - 0.5


@dataclass
class LossResult:
    loss: float
    cross_entropy: float
    kl: float
    grads: list
    forward: ForwardResult


def loss_and_gradients(net: Network, batch: Batch, config: TrainConfig, rng: Rng | None = None,
                       noise: list | None = None, mode: str = "train") -> LossResult:
    """Total loss ``CE + beta / kl_normalizer * KL`` and its gradients.

    ``KL`` is the information-dropout regularizer: per-sample KL summed over
    units, averaged over the batch. It is zero without an information-dropout
    layer.
    """
    if batch.y is None:
        raise ValueError("loss_and_gradients needs labels")
    res = net.forward(batch.x, mode=mode, rng=rng, noise=noise)
    n = len(batch)
    lp = log_softmax(res.logits)
    ce = float(-lp[np.arange(n), batch.y].mean())
    g_logits = np.exp(lp)
    g_logits[np.arange(n), batch.y] -= 1.0
    g_logits /= n
    kl = 0.0
    weight = 0.0
    g_alpha = None
    if res.alpha is not None:
        kl = float(softplus_kl(res.alpha).sum(axis=1).mean())
        weight = config.beta / (config.kl_normalizer or 1.0)
        if weight > 0:
            g_alpha = weight * (res.alpha - 1.0 / res.alpha) / n
    grads = net.backward(res, g_logits, g_alpha)
    if config.weight_decay:
        for g, p in zip(grads, net.params):
            if "W" in p:
                g["W"] = g["W"] + config.weight_decay * p["W"]
    return LossResult(ce + weight * kl, ce, kl, grads, res)


@dataclass
class ProbeContext:
    epoch: int
    net: Network
    pre_noise: np.ndarray
    labels: np.ndarray | None
    train_loss: float
    train_accuracy: float


def predict_proba(net: Network, x, mode: str = "mc_inference", rng: Rng | None = None,
                  mc_samples: int = 1, batch_size: int = 2000) -> np.ndarray:
    """Class probabilities, averaged over ``mc_samples`` noise draws."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.shape[0], net.n_classes))
    draws = 1 if mode == "deterministic" else mc_samples
    for t in range(draws):
        for start in range(0, x.shape[0], batch_size):
            sub_rng = None if rng is None else rng.derive(t, start)
            res = net.forward(x[start:start + batch_size], mode=mode, rng=sub_rng)
            out[start:start + batch_size] += np.exp(log_softmax(res.logits))
    return out / draws


def evaluate(net: Network, data: Batch, rng: Rng, mc_samples: int = 1) -> tuple[float, float]:
    """(cross-entropy of the averaged prediction, accuracy) under MC dropout."""
    proba = predict_proba(net, data.x, "mc_inference", rng, mc_samples)
    ce = float(-np.log(np.maximum(proba[np.arange(len(data)), data.y], 1e-300)).mean())
    acc = float(np.mean(proba.argmax(axis=1) == data.y))
    return ce, acc


def probe_activations(net: Network, x, batch_size: int = 2000) -> np.ndarray:
    """Pre-noise activations feeding the first noise layer (deterministic)."""
    if net.probe_index is None:
        raise ValueError("network has no noise layer to probe")
    x = np.asarray(x, dtype=float)
    parts = [net.forward(x[s:s + batch_size], mode="deterministic").pre_noise
             for s in range(0, x.shape[0], batch_size)]
    return np.concatenate(parts, axis=0)


def train(net: Network, data: Batch, config: TrainConfig,
          probe_hook: Callable[[ProbeContext], object] | None = None,
          probe_data: Batch | None = None) -> tuple[Network, list]:
    """Train in place and return ``(net, trace)``.

    After every epoch listed in ``config.probe_epochs`` the hook receives a
    :class:`ProbeContext` for ``probe_data`` (default: the training data);
    non-``None`` hook results are collected into the returned trace.
    """
    if data.y is None:
        raise ValueError("training data needs labels")
    if config.batch_size > len(data):
        raise ValueError("batch size exceeds dataset size")
    probe_data = probe_data or data
    if config.kl_normalizer is None:
        config = replace(config, kl_normalizer=float(len(data)))
    root = Rng(config.seed)
    velocity = [{k: np.zeros_like(v) for k, v in p.items()} for p in net.params]
    trace: list = []
    n_batches = len(data) // config.batch_size
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at(epoch)
        order = root.derive(1, epoch).generator().permutation(len(data))
        ce_sum = 0.0
        correct = 0
        for step in range(n_batches):
            idx = order[step * config.batch_size:(step + 1) * config.batch_size]
            batch = data.take(idx)
            out = loss_and_gradients(net, batch, config, root.derive(2, epoch, step))
            if not math.isfinite(out.loss):
                raise TrainingDiverged(epoch, trace)
            ce_sum += out.cross_entropy * len(idx)
            correct += int(np.sum(out.forward.logits.argmax(axis=1) == batch.y))
            for p, g, v in zip(net.params, out.grads, velocity):
                for k in p:
                    v[k] *= config.momentum
                    v[k] -= lr * g[k]
                    p[k] += v[k]
        seen = n_batches * config.batch_size
        train_loss = ce_sum / seen
        if epoch in config.probe_epochs and probe_hook is not None:
            ctx = ProbeContext(epoch, net, probe_activations(net, probe_data.x), probe_data.y,
                               train_loss, correct / seen)
            row = probe_hook(ctx)
            if row is not None:
                trace.append(row)
    return net, trace

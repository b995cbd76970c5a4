"""Information-plane traces for small dropout networks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..estimators import (
    DEFAULT_MASKS,
    DEFAULT_MAX_COMPONENTS,
    BinningConfig,
    DegenerateInputError,
    MiEstimate,
    empirical_label_distribution,
    info_dropout_kl_softplus,
    mi_binning,
    mi_gaussian_dropout,
    mi_labels_binning,
    mi_labels_variational,
)
from ..nn import Batch, LayerSpec, Network, ProbeContext, TrainConfig, TrainingDiverged, evaluate, fc_network, train
from ..numerics import Rng

PROBE_STREAM = 0x1F0
EVAL_STREAM = 0xE7A1


@dataclass
class NetSpec:
    sizes: list = field(default_factory=lambda: [784, 512, 128, 32, 10])
    activation: str = "softplus"
    noise: str = "gaussian"              # gaussian | info
    variance: float = 0.2                # gaussian dropout variance
    alpha_max_sq: float = 0.7            # information dropout cap
    noise_after: int | None = None       # 1-based hidden layer, default penultimate

    def layer(self) -> LayerSpec:
        if self.noise == "gaussian":
            return LayerSpec.gaussian_dropout(self.variance)
        if self.noise == "info":
            return LayerSpec.info_dropout(self.alpha_max_sq)
        raise ValueError(f"unknown noise kind {self.noise!r}")

    def build(self, seed: int) -> Network:
        return fc_network(self.sizes, self.activation, self.layer(), self.noise_after, seed)


@dataclass
class EstimatorConfig:
    masks: int = DEFAULT_MASKS
    max_components: int = DEFAULT_MAX_COMPONENTS
    bins: list = field(default_factory=lambda: [3, 8, 15, 30])
    probe_size: int = 4000
    probe_split: str = "test"            # test | train
    eval_mc_samples: int = 1

    def __post_init__(self):
        if self.probe_split not in ("test", "train"):
            raise ValueError("probe_split must be 'test' or 'train'")
        self.bins = [int(b) for b in self.bins]


@dataclass
class IpRow:
    epoch: int
    mi_xz: MiEstimate | None
    mi_xz_kl: float | None
    mi_yz_variational: float
    mi_xz_binning: dict
    mi_yz_binning: dict
    train_loss: float
    train_accuracy: float
    test_loss: float
    test_accuracy: float

    def mi_values(self) -> list[float]:
        vals = [self.mi_yz_variational, *self.mi_xz_binning.values(), *self.mi_yz_binning.values()]
        if self.mi_xz is not None:
            vals += [self.mi_xz.value, self.mi_xz.h_z, self.mi_xz.h_z_given_x]
        if self.mi_xz_kl is not None:
            vals.append(self.mi_xz_kl)
        return vals

    @property
    def mi_xz_primary(self) -> float:
        return self.mi_xz.value if self.mi_xz is not None else self.mi_xz_kl


@dataclass
class IpTrace:
    rows: list = field(default_factory=list)
    n_classes: int = 10
    bins: list = field(default_factory=list)
    error: str | None = None
    final_test_accuracy: float | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def check(self) -> None:
        epochs = [r.epoch for r in self.rows]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("trace epochs are not strictly increasing")
        cap = math.log(self.n_classes) + 1e-9
        for r in self.rows:
            if not all(math.isfinite(v) for v in r.mi_values()):
                raise ValueError(f"non-finite MI value at epoch {r.epoch}")
            if r.mi_yz_variational > cap or any(v > cap for v in r.mi_yz_binning.values()):
                raise ValueError(f"I(Y;Z) above log(#classes) at epoch {r.epoch}")

    def to_rows(self) -> list[dict]:
        out = []
        for r in self.rows:
            d = {
                "epoch": r.epoch,
                "mi_xz": r.mi_xz_primary,
                "mi_xz_estimator": "gmm_mc" if r.mi_xz is not None else "info_dropout_kl",
                "mi_xz_stderr": r.mi_xz.stderr if r.mi_xz is not None else None,
                "h_z": r.mi_xz.h_z if r.mi_xz is not None else None,
                "h_z_given_x": r.mi_xz.h_z_given_x if r.mi_xz is not None else None,
                "h_z_upper_bound": r.mi_xz.upper_bound if r.mi_xz is not None else None,
                "mi_yz": r.mi_yz_variational,
            }
            for b in self.bins:
                d[f"mi_xz_binning_b{b}"] = r.mi_xz_binning[b]
                d[f"mi_yz_binning_b{b}"] = r.mi_yz_binning[b]
            d.update(train_loss=r.train_loss, train_accuracy=r.train_accuracy,
                     test_loss=r.test_loss, test_accuracy=r.test_accuracy)
            out.append(d)
        return out


class IpExperimentError(RuntimeError):
    """Training failed; ``trace`` holds the rows recorded before the failure."""

    def __init__(self, message: str, trace: IpTrace):
        super().__init__(message)
        self.trace = trace


def probe_rng(seed: int, epoch: int) -> Rng:
    return Rng(seed).derive(PROBE_STREAM, epoch)


def info_dropout_noisy(net: Network, x: np.ndarray, masks: int, rng: Rng) -> np.ndarray:
    """Noisy probe-layer samples, ``masks`` consecutive rows per input."""
    reps = np.repeat(x, masks, axis=0)
    return net.forward(reps, mode="mc_inference", rng=rng).post_noise


def make_probe_hook(net_spec: NetSpec, est: EstimatorConfig, probe: Batch, test: Batch,
                    seed: int, n_classes: int, dump_dir=None):
    label_dist = empirical_label_distribution(probe.y, n_classes)
    sigma = math.sqrt(net_spec.variance)
    bin_cfgs = {b: BinningConfig(bins=b) for b in est.bins}

    def hook(ctx: ProbeContext) -> IpRow:
        rng = probe_rng(seed, ctx.epoch)
        f = ctx.pre_noise
        labels_rep = np.repeat(probe.y, est.masks)
        mi_xz = kl = None
        if net_spec.noise == "gaussian":
            mi_xz, z = mi_gaussian_dropout(f, sigma, est.masks, est.max_components, rng,
                                           return_samples=True)
            if dump_dir is not None:
                dump_representations(Path(dump_dir) / f"repr_epoch{ctx.epoch:04d}.npz", f, probe.y,
                                     sigma, rng, est)
        else:
            alpha = ctx.net.forward(probe.x, mode="deterministic").alpha
            kl = info_dropout_kl_softplus(alpha).mean()
            z = info_dropout_noisy(ctx.net, probe.x, est.masks, rng.derive(7))
        probe_ce, _ = evaluate(ctx.net, probe, rng.derive(8), mc_samples=1)
        test_ce, test_acc = evaluate(ctx.net, test, Rng(seed).derive(EVAL_STREAM, ctx.epoch),
                                     est.eval_mc_samples)
        return IpRow(
            epoch=ctx.epoch,
            mi_xz=mi_xz,
            mi_xz_kl=kl,
            mi_yz_variational=mi_labels_variational(probe_ce, label_dist),
            mi_xz_binning={b: mi_binning(f, z, c) for b, c in bin_cfgs.items()},
            mi_yz_binning={b: mi_labels_binning(z, labels_rep, c) for b, c in bin_cfgs.items()},
            train_loss=ctx.train_loss,
            train_accuracy=ctx.train_accuracy,
            test_loss=test_ce,
            test_accuracy=test_acc,
        )

    return hook


def dump_representations(path: Path, pre_noise, labels, sigma: float, rng: Rng, est: EstimatorConfig) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, pre_noise=pre_noise, labels=labels, sigma=sigma, seed=np.uint64(rng.seed),
             stream=np.uint64(rng.stream), masks=est.masks, max_components=est.max_components)
    return path


def run_ip_experiment(net_spec: NetSpec, train_data: Batch, test_data: Batch, config: TrainConfig,
                      est: EstimatorConfig = EstimatorConfig(), dump_dir=None) -> tuple[IpTrace, Network]:
    """Train ``net_spec`` and record one information-plane row per probe epoch.

    The probe set is the first ``est.probe_size`` samples of the test or
    training split. On divergence, or when every probe activation falls under
    the zero floor, an :class:`IpExperimentError` carries the partial trace.
    """
    net = net_spec.build(config.seed)
    source = test_data if est.probe_split == "test" else train_data
    probe = source.take(slice(0, min(est.probe_size, len(source))))
    trace = IpTrace(n_classes=net.n_classes, bins=list(est.bins))
    hook = make_probe_hook(net_spec, est, probe, test_data, config.seed, net.n_classes, dump_dir)
    rows: list = []

    def record(ctx):
        rows.append(hook(ctx))

    try:
        train(net, train_data, config, record, probe)
    except (TrainingDiverged, DegenerateInputError) as exc:
        # a dead probe layer (every activation under the zero floor) ends the run too
        trace.rows = rows
        trace.error = str(exc)
        raise IpExperimentError(str(exc), trace) from exc
    trace.rows = rows
    if rows:
        trace.final_test_accuracy = rows[-1].test_accuracy
    else:
        _, trace.final_test_accuracy = evaluate(net, test_data, Rng(config.seed).derive(EVAL_STREAM, 0),
                                                est.eval_mc_samples)
    return trace, net


def late_mean(trace: IpTrace, last: int = 5) -> float:
    """Mean primary ``I(X;Z)`` over the last ``last`` probe rows."""
    vals = [r.mi_xz_primary for r in trace.rows[-last:]]
    return float(np.mean(vals))


def net_spec_dict(spec: NetSpec) -> dict:
    return asdict(spec)

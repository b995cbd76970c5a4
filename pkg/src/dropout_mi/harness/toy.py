"""Toy problem: ``X ~ N(0, I_n)``, ``f(X) = a X + b``, Gaussian dropout on ``f(X)``."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..estimators import (
    DEFAULT_MASKS,
    DEFAULT_MAX_COMPONENTS,
    BinningConfig,
    conditional_entropy_gaussian_dropout,
    mi_binning,
    mi_gaussian_dropout,
)
from ..numerics import Rng
from ..oracle import ToyOracle, cached_oracle

DEFAULT_GRID = (100, 1_000, 10_000, 100_000)
DEFAULT_BINS = (3, 8, 15, 30)
EXTERNAL_ESTIMATORS = ("edge", "doe", "doe_l")


@dataclass
class ToySpec:
    n: int = 1
    sigma: float = 0.1
    a: float = 2.0
    b: float = 0.5
    masks: int = DEFAULT_MASKS
    max_components: int = DEFAULT_MAX_COMPONENTS
    seed: int = 0
    bins: tuple = DEFAULT_BINS

    def __post_init__(self):
        if self.n < 1 or self.masks < 1:
            raise ValueError("n and masks must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        self.bins = tuple(int(b) for b in self.bins)

    def inputs(self, rng: Rng, count: int) -> np.ndarray:
        return rng.generator().standard_normal((count, self.n))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return self.a * x + self.b


@dataclass
class ToyRecord:
    sample_count: int
    rep: int
    h_z_given_x: float
    h_z: float | None = None
    h_z_stderr: float | None = None
    upper_bound: float | None = None
    mi: float | None = None
    mi_stderr: float | None = None
    binning: dict = field(default_factory=dict)
    binning_deterministic: dict = field(default_factory=dict)


@dataclass
class ConvergenceStudy:
    spec: ToySpec
    sample_grid: list
    reps: int
    records: list = field(default_factory=list)
    oracle: dict | None = None

    def at(self, sample_count: int) -> list:
        return [r for r in self.records if r.sample_count == sample_count]

    def values(self, attr: str, sample_count: int) -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.at(sample_count)], dtype=float)

    def spread(self, attr: str, sample_count: int) -> float:
        v = self.values(attr, sample_count)
        return float(v.max() - v.min())

    def mean(self, attr: str, sample_count: int) -> float:
        return float(np.mean(self.values(attr, sample_count)))


def run_toy_convergence(spec: ToySpec, sample_grid=DEFAULT_GRID, reps: int = 5,
                        estimate_marginal: bool = True, with_oracle: bool = True,
                        oracle_cache=None) -> ConvergenceStudy:
    """Estimates of ``h(Z|X)``, ``h(Z)``, the Gaussian bound, ``I(X;Z)`` and
    binned ``I(X;Z)`` at each sample count, repeated with independent seeds.

    Each (grid index, rep) pair owns the stream ``Rng(seed).derive(i, rep)``, so
    the result does not depend on evaluation order.
    """
    grid = [int(s) for s in sample_grid]
    if grid != sorted(grid) or len(set(grid)) != len(grid):
        raise ValueError("sample grid must be strictly ascending")
    if reps < 3:
        raise ValueError("a convergence study needs at least 3 repetitions per grid point")
    study = ConvergenceStudy(spec, grid, reps)
    root = Rng(spec.seed)
    for gi, count in enumerate(grid):
        for rep in range(reps):
            rng = root.derive(gi, rep)
            f = spec.transform(spec.inputs(rng.derive(0), count))
            if not estimate_marginal:
                cond = conditional_entropy_gaussian_dropout(f, spec.sigma)
                study.records.append(ToyRecord(count, rep, cond.nats))
                continue
            est, z = mi_gaussian_dropout(f, spec.sigma, spec.masks, spec.max_components,
                                         rng.derive(1), return_samples=True)
            rec = ToyRecord(count, rep, est.h_z_given_x, est.h_z, est.stderr, est.upper_bound,
                            est.value, est.stderr)
            for bins in spec.bins:
                cfg = BinningConfig(bins=bins)
                rec.binning[bins] = mi_binning(f, z, cfg)
                rec.binning_deterministic[bins] = mi_binning(f, f, cfg)
            study.records.append(rec)
    if with_oracle and spec.n == 1:
        study.oracle = cached_oracle(ToyOracle(spec.a, spec.b, spec.sigma), oracle_cache)
    return study


def compare_estimators(study: ConvergenceStudy) -> list[dict]:
    """One row per (sample count, estimator, configuration) with mean and spread
    over repetitions. Oracle values appear only for ``n == 1``; external
    baseline slots are listed and marked unavailable."""
    rows: list[dict] = []
    oracle_mi = study.oracle["mi"] if study.oracle else None
    oracle_h = study.oracle["h_z"] if study.oracle else None

    def row(count, estimator, config, values, stderr=None, oracle=None, available=True):
        v = np.asarray(values, dtype=float)
        rows.append({
            "sample_count": count,
            "estimator": estimator,
            "config": config,
            "available": available,
            "mean": float(v.mean()) if available else None,
            "spread": float(v.max() - v.min()) if available else None,
            "stderr": stderr,
            "oracle": oracle,
            "oracle_available": oracle is not None,
        })

    for count in study.sample_grid:
        recs = study.at(count)
        row(count, "h_z_given_x", "", [r.h_z_given_x for r in recs],
            oracle=study.oracle["h_z_given_x"] if study.oracle else None)
        if recs and recs[0].h_z is not None:
            se = float(np.mean([r.h_z_stderr for r in recs]))
            row(count, "h_z_mc", "", [r.h_z for r in recs], se, oracle_h)
            row(count, "h_z_gaussian_bound", "", [r.upper_bound for r in recs], oracle=oracle_h)
            row(count, "mi_gmm", f"masks={study.spec.masks};K<={study.spec.max_components}",
                [r.mi for r in recs], float(np.mean([r.mi_stderr for r in recs])), oracle_mi)
            for bins in study.spec.bins:
                row(count, "mi_binning", f"bins={bins}", [r.binning[bins] for r in recs], oracle=oracle_mi)
                row(count, "mi_binning_deterministic", f"bins={bins}",
                    [r.binning_deterministic[bins] for r in recs], oracle=oracle_mi)
            for name in EXTERNAL_ESTIMATORS:
                row(count, name, "", [], oracle=oracle_mi, available=False)
    return rows


def toy_rows(study: ConvergenceStudy) -> list[dict]:
    """Flat per-(sample count, rep) rows for CSV output."""
    out = []
    for r in study.records:
        d = {
            "n": study.spec.n,
            "sigma": study.spec.sigma,
            "sample_count": r.sample_count,
            "rep": r.rep,
            "h_z_given_x": r.h_z_given_x,
            "h_z": r.h_z,
            "h_z_stderr": r.h_z_stderr,
            "upper_bound": r.upper_bound,
            "mi_gmm": r.mi,
            "mi_gmm_stderr": r.mi_stderr,
        }
        for bins in study.spec.bins:
            d[f"mi_binning_b{bins}"] = r.binning.get(bins)
            d[f"mi_binning_det_b{bins}"] = r.binning_deterministic.get(bins)
        d["oracle_mi"] = study.oracle["mi"] if study.oracle else None
        out.append(d)
    return out


def toy_spec_dict(spec: ToySpec) -> dict:
    d = asdict(spec)
    d["bins"] = list(spec.bins)
    return d


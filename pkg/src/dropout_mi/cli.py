"""Command-line entry point: ``dropout-mi {toy-convergence,ip-train,estimate,plot}``.

Settings come from an optional YAML ``--config`` file; command-line flags
override it, and the effective configuration is echoed into ``manifest.json``.
On failure a one-line JSON error (``{"error": <category>, "message": ...}``)
goes to stderr and the exit code identifies the category.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .data import IdxFormatError, find_idx_pair, load_idx
from .estimators import mi_gaussian_dropout
from .harness import (
    EstimatorConfig,
    IpExperimentError,
    NetSpec,
    ToySpec,
    compare_estimators,
    run_ip_experiment,
    run_toy_convergence,
    toy_rows,
    write_csv,
    write_manifest,
)
from .harness.toy import DEFAULT_GRID
from .nn import Batch, TrainConfig, save_checkpoint
from .numerics import Rng
from .plot import AxesConfig, TraceParseError, plot_ip

COMMANDS = ("toy-convergence", "ip-train", "estimate", "plot")
EXIT_CODES = {"internal": 1, "config": 2, "data": 3, "io": 4, "numerical": 5}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


@dataclass
class ToyRun:
    spec: dict = field(default_factory=lambda: asdict(ToySpec()) | {"bins": [3, 8, 15, 30]})
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    reps: int = 5
    estimate_marginal: bool = True


@dataclass
class DataConfig:
    dir: str | None = None
    limit: int | None = None
    test_fraction: float = 0.2     # held-out tail when no t10k files are present


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    out: str = "runs"
    data: DataConfig = field(default_factory=DataConfig)
    toy: ToyRun = field(default_factory=ToyRun)
    net: NetSpec = field(default_factory=NetSpec)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=20, lr_schedule=[(10, 0.1)],
                                                                   probe_epochs=list(range(1, 21))))
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    input: str | None = None       # estimate: representation dump; plot: trace CSV
    dump_representations: bool = False
    sigma: float | None = None     # estimate: override the dump's noise std

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"]["lr_schedule"] = [list(e) for e in self.train.lr_schedule]
        d["toy"]["spec"]["bins"] = list(self.toy.spec.get("bins", []))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise CliError("config", f"unknown config keys {sorted(unknown)}")
        sub = {"data": DataConfig, "toy": ToyRun, "net": NetSpec, "train": TrainConfig,
               "estimator": EstimatorConfig}
        kwargs = {}
        for key, value in d.items():
            if key in sub and isinstance(value, dict):
                allowed = {f.name for f in fields(sub[key])}
                bad = set(value) - allowed
                if bad:
                    raise CliError("config", f"unknown keys in [{key}]: {sorted(bad)}")
                if key == "toy":
                    value = dict(value)
                    value["spec"] = asdict(ToySpec()) | {"bins": [3, 8, 15, 30]} | value.get("spec", {})
                kwargs[key] = sub[key](**value)
            else:
                kwargs[key] = value
        try:
            cfg = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise CliError("config", str(exc)) from None
        if cfg.command not in COMMANDS:
            raise CliError("config", f"unknown command {cfg.command!r}")
        return cfg


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig(command=args.command).to_dict()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise CliError("io", f"config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise CliError("config", f"{path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError("config", f"{path}: top level must be a mapping")
        loaded.pop("command", None)
        base = _merge(base, loaded)
    over: dict = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if getattr(args, "input", None):
        over["input"] = args.input
    if args.limit is not None:
        over.setdefault("data", {})["limit"] = args.limit
    if getattr(args, "data", None):
        over.setdefault("data", {})["dir"] = args.data
    if args.sigma is not None:
        if args.command == "toy-convergence":
            over.setdefault("toy", {}).setdefault("spec", {})["sigma"] = args.sigma
        elif args.command == "ip-train":
            over.setdefault("net", {})["variance"] = args.sigma ** 2
        else:
            over["sigma"] = args.sigma
    if args.bins is not None:
        over.setdefault("estimator", {})["bins"] = args.bins
        over.setdefault("toy", {}).setdefault("spec", {})["bins"] = args.bins
    if args.masks is not None:
        over.setdefault("estimator", {})["masks"] = args.masks
        over.setdefault("toy", {}).setdefault("spec", {})["masks"] = args.masks
    if args.max_components is not None:
        over.setdefault("estimator", {})["max_components"] = args.max_components
        over.setdefault("toy", {}).setdefault("spec", {})["max_components"] = args.max_components
    if args.beta is not None:
        over.setdefault("train", {})["beta"] = args.beta
    if getattr(args, "epochs", None) is not None:
        over.setdefault("train", {})["epochs"] = args.epochs
        over["train"]["probe_epochs"] = list(range(1, args.epochs + 1))
    if getattr(args, "noise", None):
        over.setdefault("net", {})["noise"] = args.noise
    if getattr(args, "grid", None):
        over.setdefault("toy", {})["grid"] = args.grid
    if getattr(args, "reps", None) is not None:
        over.setdefault("toy", {})["reps"] = args.reps
    if getattr(args, "n", None) is not None:
        over.setdefault("toy", {}).setdefault("spec", {})["n"] = args.n
    if getattr(args, "dump_representations", False):
        over["dump_representations"] = True
    merged = _merge(base, over)
    merged["command"] = args.command
    cfg = RunConfig.from_dict(merged)
    cfg.toy.spec["seed"] = cfg.seed
    cfg.train.seed = cfg.seed
    return cfg


def validate_paths(cfg: RunConfig) -> None:
    out = Path(cfg.out)
    if out.exists() and not out.is_dir():
        raise CliError("io", f"output path exists and is not a directory: {out}")
    if cfg.command == "ip-train":
        if not cfg.data.dir:
            raise CliError("config", "ip-train needs a dataset directory (--data)")
        try:
            find_idx_pair(cfg.data.dir, "train")
        except FileNotFoundError as exc:
            raise CliError("io", str(exc)) from None
    if cfg.command in ("estimate", "plot"):
        if not cfg.input:
            raise CliError("config", f"{cfg.command} needs --input")
        if not Path(cfg.input).is_file():
            raise CliError("io", f"input file not found: {cfg.input}")


# -- commands -----------------------------------------------------------------

def cmd_toy(cfg: RunConfig) -> list[Path]:
    spec = ToySpec(**cfg.toy.spec)
    out = Path(cfg.out)
    study = run_toy_convergence(spec, cfg.toy.grid, cfg.toy.reps, cfg.toy.estimate_marginal,
                                oracle_cache=out / "oracle_cache")
    rows = toy_rows(study)
    files = [write_csv(rows, out / "toy_records.csv"),
             write_csv(compare_estimators(study), out / "toy_comparison.csv")]
    files.append(write_manifest(cfg.to_dict(), out / "manifest.json", {"oracle": study.oracle}))
    return files


def load_splits(cfg: RunConfig) -> tuple[Batch, Batch]:
    img, lab = find_idx_pair(cfg.data.dir, "train")
    data = load_idx(img, lab, cfg.data.limit)
    try:
        t_img, t_lab = find_idx_pair(cfg.data.dir, "test")
        test = load_idx(t_img, t_lab)
        train = data
    except FileNotFoundError:
        n_test = int(round(len(data) * cfg.data.test_fraction))
        if n_test < 1 or n_test >= len(data):
            raise CliError("data", f"cannot hold out {cfg.data.test_fraction} of {len(data)} samples") from None
        train, test = data.split(len(data) - n_test)
    return Batch(train.images, train.labels), Batch(test.images, test.labels)


def cmd_ip(cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out)
    train_data, test_data = load_splits(cfg)
    dump = out / "representations" if cfg.dump_representations else None
    try:
        trace, net = run_ip_experiment(cfg.net, train_data, test_data, cfg.train, cfg.estimator, dump)
    except IpExperimentError as exc:
        write_csv(exc.trace.to_rows(), out / "ip_trace.csv", _trace_header(cfg))
        raise CliError("numerical", str(exc)) from None
    files = [write_csv(trace.to_rows(), out / "ip_trace.csv", _trace_header(cfg))]
    files.append(save_checkpoint(net, out / "model.npz", {"seed": cfg.seed}))
    if trace.rows:
        files.append(plot_ip(files[0], out / "ip_plane.svg",
                             AxesConfig(title=f"{cfg.net.noise} dropout, beta={cfg.train.beta:g}")))
    files.append(write_manifest(cfg.to_dict(), out / "manifest.json",
                                {"final_test_accuracy": trace.final_test_accuracy,
                                 "train_size": len(train_data), "test_size": len(test_data)}))
    return files


def _trace_header(cfg: RunConfig) -> list[str]:
    head = ["epoch", "mi_xz", "mi_xz_estimator", "mi_xz_stderr", "h_z", "h_z_given_x",
            "h_z_upper_bound", "mi_yz"]
    for b in cfg.estimator.bins:
        head += [f"mi_xz_binning_b{b}", f"mi_yz_binning_b{b}"]
    return head + ["train_loss", "train_accuracy", "test_loss", "test_accuracy"]


def cmd_estimate(cfg: RunConfig, overrides: argparse.Namespace) -> list[Path]:
    """Re-run the GMM estimator on a representation dump written by ``ip-train``.

    The dump's seed, stream, mask count and component cap are used unless the
    corresponding flag is given explicitly.
    """
    try:
        with np.load(cfg.input) as dump:
            pre_noise = dump["pre_noise"]
            sigma = float(dump["sigma"])
            rng = Rng(int(dump["seed"]), int(dump["stream"]))
            masks = int(dump["masks"])
            max_components = int(dump["max_components"])
    except (OSError, KeyError, ValueError) as exc:
        raise CliError("data", f"{cfg.input}: not a representation dump ({exc})") from None
    if cfg.sigma is not None:
        sigma = cfg.sigma
    if overrides.masks is not None:
        masks = overrides.masks
    if overrides.max_components is not None:
        max_components = overrides.max_components
    if overrides.seed is not None:
        rng = Rng(overrides.seed)
    est = mi_gaussian_dropout(pre_noise, sigma, masks, max_components, rng)
    row = {k: v for k, v in est.as_dict().items() if k != "metadata"}
    row.update(components=est.metadata["components"], sigma=sigma, seed=rng.seed, stream=rng.stream)
    out = Path(cfg.out)
    return [write_csv([row], out / "estimate.csv"),
            write_manifest(cfg.to_dict(), out / "manifest.json", {"estimate": est.as_dict()})]


def cmd_plot(cfg: RunConfig, svg: str | None) -> list[Path]:
    target = Path(svg) if svg else Path(cfg.out) / (Path(cfg.input).stem + ".svg")
    return [plot_ip(cfg.input, target)]


# -- argument parsing -----------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--limit", type=int, help="use only the first N dataset samples")
    common.add_argument("--sigma", type=float, help="Gaussian dropout noise std")
    common.add_argument("--bins", type=_int_list, help="bins per dimension, e.g. 3,8,15,30")
    common.add_argument("--beta", type=float, help="information-dropout KL weight")
    common.add_argument("--masks", type=int, help="noise masks per input")
    common.add_argument("--max-components", type=int, dest="max_components", help="mixture component cap")

    ap = argparse.ArgumentParser(prog="dropout-mi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("toy-convergence", parents=[common], help="estimator study on the Gaussian toy problem")
    p.add_argument("--n", type=int, help="input dimension")
    p.add_argument("--grid", type=_int_list, help="sample counts, e.g. 100,1000,10000")
    p.add_argument("--reps", type=int)
    p = sub.add_parser("ip-train", parents=[common], help="train a dropout net and trace its information plane")
    p.add_argument("--data", help="directory with IDX files")
    p.add_argument("--epochs", type=int)
    p.add_argument("--noise", choices=["gaussian", "info"])
    p.add_argument("--dump-representations", action="store_true", dest="dump_representations")
    p = sub.add_parser("estimate", parents=[common], help="estimate I(X;Z) from a representation dump")
    p.add_argument("--input", required=True)
    p = sub.add_parser("plot", parents=[common], help="render an information plane from a trace CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--svg", help="output SVG path (default: <out>/<input stem>.svg)")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        validate_paths(cfg)
        if cfg.command == "toy-convergence":
            files = cmd_toy(cfg)
        elif cfg.command == "ip-train":
            files = cmd_ip(cfg)
        elif cfg.command == "estimate":
            files = cmd_estimate(cfg, args)
        else:
            files = cmd_plot(cfg, args.svg)
    except CliError as exc:
        return _fail(exc.category, str(exc))
    except (IdxFormatError, TraceParseError) as exc:
        return _fail("data", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    except (ValueError, ArithmeticError) as exc:
        return _fail("numerical" if isinstance(exc, ArithmeticError) else "config", str(exc))
    except Exception as exc:  # noqa: BLE001 - last resort, still machine-readable
        return _fail("internal", f"{type(exc).__name__}: {exc}")
    for f in files:
        print(f)
    return 0


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES[category]


if __name__ == "__main__":
    sys.exit(main())

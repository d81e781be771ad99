"""Command-line entry point: ``tmforecast <command> [flags]``.

Commands: synth, train, predict, evaluate, sweep, compare, replay.

Every command writes a ``<out>.manifest.json`` sidecar next to its main
output holding the resolved configuration, the seed, SHA-256 digests of the
inputs and the toolkit version. ``tmforecast replay <manifest>`` reruns it.

Exit codes:
    0  success
    1  every sweep/compare point failed, or an unexpected toolkit error
    2  usage or configuration error
    3  input file could not be parsed (CSV, model, manifest) or changed since a manifest was written
    4  dimension mismatch between model and data
    5  training diverged
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import TrafficSeries, build_windows, evaluation_windows, fit_normalizer, split_chronological
from .dataio import SyntheticConfig, format_csv, generate_synthetic, load_csv, read_config_file, save_csv
from .errors import (
    ConfigurationError,
    DataError,
    DimensionError,
    InsufficientDataError,
    InvalidModelError,
    ParseError,
    TmForecastError,
    TrainingDivergedError,
)
from .evaluation import (
    METHODS,
    ExperimentConfig,
    SweepPoint,
    SweepResult,
    compare_methods,
    evaluate,
    naive_last_value,
    sweep_depth,
    sweep_hidden_size,
)
from .neural import Network, TrainConfig, load_model, save_model, train

log = logging.getLogger("tmforecast")

EXIT_OK, EXIT_ALL_FAILED, EXIT_USAGE, EXIT_PARSE, EXIT_DIMENSION, EXIT_DIVERGED = 0, 1, 2, 3, 4, 5

# flags whose values name input files; their digests go into the manifest
INPUT_FLAGS = ("data", "model", "config")


class UsageError(Exception):
    pass


# ---- argument types ------------------------------------------------------------------------

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def int_list(text: str) -> list[int]:
    values = [positive_int(v.strip()) for v in text.split(",") if v.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected a comma-separated list of positive integers")
    if len(set(values)) != len(values):
        raise argparse.ArgumentTypeError(f"duplicate values in {text!r}")
    return values


def arma_order(text: str) -> tuple[int, int]:
    try:
        p, q = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected p,q, got {text!r}") from None
    if p < 0 or q < 0:
        raise argparse.ArgumentTypeError("ARMA orders must be nonnegative")
    return p, q


def method_list(text: str) -> list[str]:
    values = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [v for v in values if v not in METHODS]
    if not values or unknown:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    if len(set(values)) != len(values):
        raise argparse.ArgumentTypeError(f"duplicate methods in {text!r}")
    return values


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="tmforecast", description="Traffic-matrix forecasting toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("synth", help="generate a synthetic traffic-matrix CSV")
    p.add_argument("--nodes", type=positive_int, default=23)
    p.add_argument("--slots", type=positive_int, default=309)
    p.add_argument("--interval", type=positive_int, default=15, help="minutes per slot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="key=value file with further generator settings")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one generator setting (repeatable)")
    p.add_argument("--out", required=True)

    def data_flags(p, window=True):
        p.add_argument("--data", required=True, help="traffic-matrix CSV")
        if window:
            p.add_argument("--window", type=positive_int, default=10)
        p.add_argument("--train-len", type=positive_int, default=None,
                       help="slots in the training range (default: 263/309 of the series)")

    def train_flags(p, hidden=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epochs", type=positive_int, default=50)
        p.add_argument("--lr", type=positive_float, default=0.01)
        p.add_argument("--clip", type=positive_float, default=5.0, help="global gradient-norm cap")
        p.add_argument("--no-clip", action="store_true")
        p.add_argument("--init-scale", type=positive_float, default=0.1)
        p.add_argument("--output-peephole", choices=("current", "previous"), default="current")
        if hidden:
            p.add_argument("--hidden", type=positive_int, default=100, help="cells per hidden layer")
            p.add_argument("--depth", type=positive_int, default=1, help="hidden layers")

    p = sub.add_parser("train", help="train an LSTM on the training range")
    data_flags(p)
    train_flags(p)
    p.add_argument("--out", "--model-out", dest="out", required=True, help="model file (.npz)")
    p.add_argument("--loss-out", help="loss-curve CSV (default: <out>.loss.csv)")

    p = sub.add_parser("predict", help="forecast the slots after the end of a series")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=positive_int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score a trained model on the held-out range")
    p.add_argument("--model", required=True)
    data_flags(p, window=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="test MSE over hidden size or depth")
    data_flags(p)
    train_flags(p, hidden=False)
    p.add_argument("--axis", choices=("hidden", "depth"), required=True)
    p.add_argument("--values", type=int_list, required=True)
    p.add_argument("--width", type=positive_int, default=100, help="cells per layer for --axis depth")
    p.add_argument("--no-timing", action="store_true", help="write nan seconds so reruns are byte-identical")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="LSTM against the naive, linear and MLP baselines")
    data_flags(p)
    train_flags(p)
    p.add_argument("--methods", type=method_list, default=list(METHODS))
    p.add_argument("--mlp-hidden", type=positive_int, default=100)
    p.add_argument("--arma-order", type=arma_order, default=(1, 0), help="p,q")
    p.add_argument("--hw-grid-step", type=positive_float, default=0.05)
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    return parser


# ---- helpers -----------------------------------------------------------------------------------

def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(out) -> Path:
    return Path(str(out) + ".manifest.json")


def write_manifest(args: argparse.Namespace, outputs: list[str]) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    inputs = {flag: {"path": str(config[flag]), "sha256": sha256(config[flag])}
              for flag in INPUT_FLAGS if config.get(flag)}
    manifest = {
        "tool": "tmforecast",
        "version": __version__,
        "command": args.command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": inputs,
        "outputs": outputs,
    }
    manifest_path(args.out).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                       gradient_clip=None if args.no_clip else args.clip, init_scale=args.init_scale)


def experiment_config(args, series: TrafficSeries) -> ExperimentConfig:
    kwargs = {}
    if getattr(args, "hidden", None):
        kwargs["hidden_sizes"] = (args.hidden,) * args.depth
    if getattr(args, "mlp_hidden", None):
        kwargs["mlp_hidden"] = args.mlp_hidden
    if getattr(args, "arma_order", None):
        kwargs["arma_order"] = tuple(args.arma_order)
    if getattr(args, "hw_grid_step", None):
        kwargs["hw_grid_step"] = args.hw_grid_step
    cfg = ExperimentConfig(window=args.window, train_len=args.train_len, train=train_config(args),
                           output_peephole=args.output_peephole, **kwargs)
    check_split(series, cfg.resolved_train_len(len(series)), args.window)
    return cfg


def check_split(series: TrafficSeries, train_len: int, window: int) -> None:
    if not 0 < train_len < len(series):
        raise ConfigurationError(f"--train-len must lie in [1, {len(series) - 1}] for a {len(series)}-slot series")
    if train_len <= window:
        raise ConfigurationError(f"--train-len {train_len} leaves no training window of width {window}")


def write_sweep(result: SweepResult, args) -> int:
    Path(args.out).write_text(result.to_csv(timing=not args.no_timing), encoding="utf-8")
    for p in result.points:
        status = f"FAILED ({p.error})" if p.failed else f"mse={p.mse_normalized:.6g}"
        print(f"{result.axis_name}={p.value}: {status}")
    return EXIT_ALL_FAILED if result.all_failed else EXIT_OK


# ---- commands --------------------------------------------------------------------------------

def cmd_synth(args) -> int:
    settings = read_config_file(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        settings[key] = value
    settings.update(n_nodes=args.nodes, n_slots=args.slots, interval_minutes=args.interval, seed=args.seed)
    series = generate_synthetic(SyntheticConfig.from_mapping(settings))
    save_csv(series, args.out)
    print(f"wrote {len(series)} slots x {series.n_nodes**2} flows to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    series = load_csv(args.data)
    cfg = experiment_config(args, series)
    train_len = cfg.resolved_train_len(len(series))
    train_series, _ = split_chronological(series, train_len)
    normalizer = fit_normalizer(series, range(train_len))
    data = build_windows(train_series, args.window).map_values(normalizer.normalize)
    width = series.n_nodes**2
    net = Network.initialize(width, cfg.hidden_sizes, width, cfg.train.init_scale, cfg.train.seed,
                             cfg.output_peephole)

    def progress(epoch, loss):
        log.info("epoch %d/%d: training MSE %.6g", epoch, cfg.train.epochs, loss)

    net, curve = train(net, data, cfg.train, progress)
    save_model(args.out, net, normalizer, series.n_nodes, args.window)
    loss_out = args.loss_out or str(args.out) + ".loss.csv"
    lines = ["epoch,train_mse"] + [f"{k},{v!r}" for k, v in enumerate(curve, 1)]
    Path(loss_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    args.loss_out = loss_out
    print(f"final training MSE {curve[-1]:.6g} after {len(curve)} epochs "
          f"({train_len} training slots, {len(series) - train_len} held out)")
    return EXIT_OK


def _check_model_fits(saved, series: TrafficSeries) -> None:
    if saved.n_nodes != series.n_nodes:
        raise DimensionError(f"model expects N={saved.n_nodes} nodes, data has N={series.n_nodes}")


def cmd_predict(args) -> int:
    saved = load_model(args.model)
    series = load_csv(args.data)
    _check_model_fits(saved, series)
    if len(series) < saved.window:
        raise InsufficientDataError(f"need at least {saved.window} slots of history, data has {len(series)}")
    # continuous prediction: each forecast joins the window for the next step.
    # Negative outputs are not valid volumes, so they are clamped before reuse.
    window = saved.normalizer.normalize(series.values[-saved.window:])
    rows = []
    for _ in range(args.steps):
        yhat = np.maximum(saved.network.predict(window), 0.0)
        rows.append(yhat)
        window = np.vstack([window[1:], yhat])
    predicted = saved.normalizer.denormalize(np.array(rows))
    start = series.start + len(series)
    Path(args.out).write_text(format_csv(TrafficSeries(series.n_nodes, predicted, start, series.interval_minutes)),
                              encoding="utf-8")
    print(f"wrote {args.steps} predicted slot(s) starting at t={start} to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    saved = load_model(args.model)
    series = load_csv(args.data)
    _check_model_fits(saved, series)
    train_len = ExperimentConfig(train_len=args.train_len).resolved_train_len(len(series))
    check_split(series, train_len, saved.window)
    test = evaluation_windows(series, train_len, saved.window)
    points = []
    for name, predictor in (("lstm", saved.network), ("naive", naive_last_value)):
        report = evaluate(predictor, test, saved.normalizer, name)
        points.append(SweepPoint(name, report.overall_mse, report.overall_mse_raw, float("nan"),
                                 n_predictions=report.n_predictions))
        print(f"{name}: mse={report.overall_mse:.6g} over {report.n_predictions} predictions")
    Path(args.out).write_text(SweepResult("method", points).to_csv(timing=False), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    series = load_csv(args.data)
    cfg = experiment_config(args, series)
    if args.axis == "hidden":
        result = sweep_hidden_size(series, args.window, args.values, cfg)
    else:
        result = sweep_depth(series, args.window, args.values, args.width, cfg)
    return write_sweep(result, args)


def cmd_compare(args) -> int:
    series = load_csv(args.data)
    cfg = experiment_config(args, series)
    result, _ = compare_methods(series, args.window, cfg, args.methods)
    return write_sweep(result, args)


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        command, config = manifest["command"], dict(manifest["config"])
        inputs = manifest.get("inputs", {})
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read manifest {args.manifest}: {exc}") from None
    if command not in COMMANDS or command == "replay":
        raise ParseError(f"manifest names unknown command {command!r}")
    for flag, entry in inputs.items():
        if sha256(entry["path"]) != entry["sha256"]:
            raise DataError(f"input {entry['path']} changed since the manifest was written")
    if args.out:
        config["out"] = args.out
        if "loss_out" in config:
            config["loss_out"] = None
    replayed = argparse.Namespace(verbose=args.verbose, **config)
    return run_command(replayed)


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "replay": cmd_replay,
}


def run_command(args) -> int:
    code = COMMANDS[args.command](args)
    if args.command != "replay":
        outputs = [str(args.out)] + ([args.loss_out] if getattr(args, "loss_out", None) else [])
        write_manifest(args, outputs)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"tmforecast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return run_command(args)
    except TrainingDivergedError as exc:
        print(f"tmforecast: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DimensionError as exc:
        print(f"tmforecast: dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (ParseError, InvalidModelError, DataError) as exc:
        print(f"tmforecast: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigurationError, InsufficientDataError) as exc:
        print(f"tmforecast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TmForecastError as exc:
        print(f"tmforecast: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    except OSError as exc:
        print(f"tmforecast: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, FileNotFoundError) else EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())

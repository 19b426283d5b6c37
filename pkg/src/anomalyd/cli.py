"""``anomalyd`` command line.

Exit codes: 0 success, 1 pipeline error, 2 usage or IO error.

Settings come from, in increasing priority: built-in defaults, the
``ANOMALYD_SEED`` environment variable (seed only), a flat ``key=value``
file given with ``--config``, and command-line flags.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from anomalyd.ingest import parse_detections, parse_labels, parse_metric_csv, write_detections
from anomalyd.likelihood import LikelihoodConfig
from anomalyd.nn import AutoencoderConfig, Checkpoint, load_checkpoint, save_checkpoint
from anomalyd.pipeline import SPLIT_NOTE, RunConfig, detect, fit, load_corpus, prepare, run_corpus, train_count
from anomalyd.plot import render_svg
from anomalyd.scoring import PROFILES, SCORING_NOTE, build_windows, score_corpus, write_report

logger = logging.getLogger("anomalyd")

EXIT_OK, EXIT_PIPELINE, EXIT_USAGE = 0, 1, 2

# key -> (type, where it lands)
SETTINGS = {
    "data": (str, "run"),
    "labels": (str, "run"),
    "model": (str, "run"),
    "out": (str, "run"),
    "detections": (str, "extra"),
    "hidden": (int, "ae"),
    "window": (int, "ae"),
    "epochs": (int, "ae"),
    "batch_size": (int, "ae"),
    "lr": (float, "ae"),
    "clip_norm": (float, "ae"),
    "seed": (int, "ae"),
    "long_window": (int, "lik"),
    "short_window": (int, "lik"),
    "epsilon": (float, "lik"),
    "sigma_floor": (float, "lik"),
    "interval": (int, "run"),
    "fill": (float, "run"),
    "train_fraction": (float, "run"),
    "window_fraction": (float, "run"),
    "profile": (str, "run"),
}

AE_FIELDS = {"hidden": "hidden_size", "window": "window_length", "epochs": "epochs", "batch_size": "batch_size",
             "lr": "learning_rate", "clip_norm": "clip_norm", "seed": "seed"}
LIK_FIELDS = {"long_window": "W", "short_window": "W_short", "epsilon": "epsilon", "sigma_floor": "sigma_floor"}


class UsageError(Exception):
    pass


def read_config_file(path: Path) -> dict[str, object]:
    out = {}
    for n, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _convert(key, value, f"{path}:{n}")
    return out


def _convert(key: str, value: str, where: str):
    typ = SETTINGS[key][0]
    try:
        return typ(value)
    except ValueError:
        raise UsageError(f"{where}: {key} expects {typ.__name__}, got {value!r}") from None


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"file not found: {path}") from None
    except IsADirectoryError:
        raise FileNotFoundError(f"file not found: {path} is a directory") from None


def resolve(args: argparse.Namespace, environ=os.environ) -> tuple[RunConfig, dict[str, object]]:
    """Merge defaults, env, config file and flags into a RunConfig."""
    merged: dict[str, object] = {}
    if environ.get("ANOMALYD_SEED"):
        merged["seed"] = _convert("seed", environ["ANOMALYD_SEED"], "ANOMALYD_SEED")
    if args.config:
        merged.update(read_config_file(Path(args.config)))
    for key in SETTINGS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v

    ae = {AE_FIELDS[k]: v for k, v in merged.items() if k in AE_FIELDS}
    lik = {LIK_FIELDS[k]: v for k, v in merged.items() if k in LIK_FIELDS}
    run = {k: v for k, v in merged.items() if SETTINGS[k][1] == "run"}
    for k in ("data", "labels", "model", "out"):
        if k in run:
            run[k] = Path(run[k])
    try:
        cfg = RunConfig(autoencoder=AutoencoderConfig(**ae), likelihood=LikelihoodConfig(**lik), **run)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    extra = {k: v for k, v in merged.items() if SETTINGS[k][1] == "extra"}
    return cfg, extra


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(path: Path):
    return parse_metric_csv(_read(path))


def cmd_train(cfg: RunConfig, extra) -> int:
    data = _need(cfg.data, "--data")
    model_path = _need(cfg.model, "--model")
    series = prepare(_load_series(data), cfg)
    model, params, losses = fit(series, cfg)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model_path, Checkpoint(model, params, series.dim_names))
    loss_path = (cfg.out / "loss.csv") if cfg.out else model_path.with_suffix(".loss.csv")
    loss_path.parent.mkdir(parents=True, exist_ok=True)
    loss_path.write_text("epoch,loss\n" + "".join(f"{i + 1},{v!r}\n" for i, v in enumerate(losses)), encoding="utf-8")
    final = f"{losses[-1]:.6g}" if losses else "n/a"
    print(f"trained on {train_count(len(series), cfg.train_fraction)} points, {len(losses)} epochs, final loss {final}")
    print(f"checkpoint: {model_path}")
    return EXIT_OK


def cmd_detect(cfg: RunConfig, extra) -> int:
    data = _need(cfg.data, "--data")
    ckpt = load_checkpoint(_need(cfg.model, "--model"))
    if ckpt.normalization is None:
        raise ValueError("checkpoint carries no normalization parameters")
    series = prepare(_load_series(data), cfg)
    det = detect(ckpt.model, ckpt.normalization, series, cfg.likelihood)
    path = Path(extra["detections"]) if "detections" in extra else _out_dir(cfg) / "detections.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_detections(det.records(), series.dim_names), encoding="utf-8")
    print(f"flagged {int(det.flags.sum())} of {len(det.errors)} scored points")
    print(f"detections: {path}")
    return EXIT_OK


def _label_key(labels, data: Path) -> str:
    parts = data.as_posix().split("/")
    for k in range(len(parts)):
        key = "/".join(parts[k:])
        if key in labels:
            return key
    raise ValueError(f"no labels for {data.name}")


def cmd_score(cfg: RunConfig, extra) -> int:
    """Score one detections CSV. Flags are aligned to the data file's
    timestamps; points the model never scored count as unflagged."""
    data = _need(cfg.data, "--data")
    labels = parse_labels(_read(_need(cfg.labels, "--labels")))
    det_path = Path(extra["detections"]) if "detections" in extra else (cfg.out or Path(".")) / "detections.csv"
    records, _ = parse_detections(_read(det_path))
    series = prepare(_load_series(data), cfg)
    key = _label_key(labels, data)
    pos = {int(t): i for i, t in enumerate(series.timestamps)}
    flags = np.zeros(len(series), dtype=bool)
    for r in records:
        if r.timestamp not in pos:
            raise ValueError(f"detection at {r.timestamp} is not a timestamp of {data.name}")
        flags[pos[r.timestamp]] = r.flagged
    win = build_windows(labels[key], series, cfg.window_fraction, cfg.train_fraction)
    reports = [score_corpus({key: (flags, win)}, p) for p in PROFILES]
    path = _out_dir(cfg) / "score.csv"
    path.write_text(write_report(reports, [SCORING_NOTE, f"file={key}"]), encoding="utf-8")
    for rep in reports:
        print(f"{rep.profile}: normalized {rep.normalized:.4f} (tp={rep.tp} fp={rep.fp} fn={rep.fn})")
    return EXIT_OK


def cmd_run_corpus(cfg: RunConfig, extra) -> int:
    root = _need(cfg.data, "--data")
    if not root.is_dir():
        raise FileNotFoundError(f"file not found: {root}")
    if cfg.labels is not None and not cfg.labels.is_file():
        raise FileNotFoundError(f"file not found: {cfg.labels}")
    try:
        corpus, labels, failures = load_corpus(root, cfg.labels)
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"file not found: {exc.filename or exc}") from None
    result = run_corpus(corpus, labels, cfg)
    failures = {**failures, **result.failures}
    out = _out_dir(cfg)
    ae, lik = cfg.autoencoder, cfg.likelihood
    header = [
        SPLIT_NOTE,
        SCORING_NOTE,
        f"train_fraction={cfg.train_fraction} window_fraction={cfg.window_fraction} interval={cfg.interval}",
        f"hidden={ae.hidden_size} window={ae.window_length} epochs={ae.epochs} lr={ae.learning_rate} "
        f"batch_size={ae.batch_size} seed={ae.seed}",
        f"long_window={lik.W} short_window={lik.W_short} epsilon={lik.epsilon} headline_profile={cfg.profile}",
        f"files scored={len(result.detections)} failed={len(failures)}",
    ] + [f"failed {name}: {msg}" for name, msg in sorted(failures.items())]
    (out / "report.csv").write_text(write_report(result.reports, header), encoding="utf-8")
    (out / "raw_error_report.csv").write_text(
        write_report(result.raw_error_reports, header + ["baseline: thresholded raw reconstruction error"]),
        encoding="utf-8",
    )
    det_dir = out / "detections"
    for name, det in sorted(result.detections.items()):
        path = det_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(write_detections(det.records(), det.series.dim_names), encoding="utf-8")
    for rep, raw in zip(result.reports, result.raw_error_reports):
        print(f"{rep.profile}: likelihood {rep.normalized:.4f}, raw error {raw.normalized:.4f}")
    print(f"headline ({cfg.profile}): {result.report(cfg.profile).normalized:.4f}")
    for name, msg in sorted(failures.items()):
        print(f"failed {name}: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_plot(cfg: RunConfig, extra) -> int:
    det_path = Path(_need(extra.get("detections"), "--detections"))
    records, dims = parse_detections(_read(det_path))
    svg = render_svg(records, dims, threshold=cfg.likelihood.threshold)
    if cfg.out is not None and cfg.out.suffix == ".svg":
        path = cfg.out
        path.parent.mkdir(parents=True, exist_ok=True)
    else:
        path = _out_dir(cfg) / (det_path.stem + ".svg")
    path.write_text(svg, encoding="utf-8")
    print(f"plot: {path}")
    return EXIT_OK


COMMANDS = {
    "train": (cmd_train, "train an autoencoder on a metric CSV and save a checkpoint"),
    "detect": (cmd_detect, "score a metric CSV with a checkpoint and write detections"),
    "score": (cmd_score, "score a detections CSV against labels"),
    "run-corpus": (cmd_run_corpus, "train, detect and score every file of a NAB-layout corpus"),
    "plot": (cmd_plot, "render a detections CSV as a multi-panel SVG"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run settings")
    g.add_argument("--config", help="flat key=value settings file; flags override it")
    g.add_argument("--data", help="metric CSV, or corpus root for run-corpus")
    g.add_argument("--labels", help="labels JSON (file name -> list of anomaly timestamps)")
    g.add_argument("--model", help="checkpoint path")
    g.add_argument("--out", help="output directory (plot also accepts a .svg path)")
    g.add_argument("--detections", help="detections CSV (detect writes it, score and plot read it)")
    g.add_argument("--interval", type=int, help="aggregation interval in seconds, 0 to keep native sampling")
    g.add_argument("--fill", type=float, help="value for empty aggregation buckets")
    g.add_argument("--train-fraction", dest="train_fraction", type=float, help="prefix fraction used for training")
    g.add_argument("--window-fraction", dest="window_fraction", type=float, help="label window fraction of the file")
    g.add_argument("--profile", choices=list(PROFILES), help="profile for the headline score")
    m = common.add_argument_group("model")
    m.add_argument("--hidden", type=int, help="GRU hidden size")
    m.add_argument("--window", type=int, help="window length L")
    m.add_argument("--epochs", type=int)
    m.add_argument("--batch-size", dest="batch_size", type=int)
    m.add_argument("--lr", type=float, help="Adam learning rate")
    m.add_argument("--clip-norm", dest="clip_norm", type=float)
    m.add_argument("--seed", type=int, help="RNG seed (falls back to ANOMALYD_SEED)")
    lk = common.add_argument_group("likelihood")
    lk.add_argument("--long-window", dest="long_window", type=int, help="long window W")
    lk.add_argument("--short-window", dest="short_window", type=int, help="short window W'")
    lk.add_argument("--epsilon", type=float, help="flag when likelihood >= 1 - epsilon")
    lk.add_argument("--sigma-floor", dest="sigma_floor", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="anomalyd", description="GRU autoencoder anomaly detection for metric streams.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg, extra = resolve(args)
        return func(cfg, extra)
    except UsageError as exc:
        print(f"anomalyd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        msg = str(exc)
        if not msg.startswith("file not found"):
            msg = f"file not found: {exc.filename or msg}"
        print(f"anomalyd {args.command}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"anomalyd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, KeyError) as exc:
        print(f"anomalyd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

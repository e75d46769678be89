"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import encoding as enc
from . import hypervector as hv
from . import model as mdl
from .experiment import (
    SWEEP_AXES,
    BackendMismatch,
    ConfigError,
    ExperimentConfig,
    load_dataset,
    run_bench,
    run_experiment,
    run_sweep,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MISMATCH = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--data", help="feature CSV with a header row")
    p.add_argument("--label-column")
    p.add_argument("--segment-column")
    p.add_argument("--dim", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--generation", help="random | scale_random | sandwich")
    p.add_argument("--binding", help="id_level | permutation | appending")
    p.add_argument("--metric", help="hamming | cosine")
    p.add_argument("--gamma", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--train-mode", help="classical | online | both")
    p.add_argument("--split", help="single | tscv | loso")
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--subsample-factor", type=int)
    p.add_argument("--minority-class", type=int)
    p.add_argument("--positive-class", type=int)
    p.add_argument("--smooth-window", type=int)
    p.add_argument("--seed", type=int, help="falls back to $HYPERVEC_SEED, then 0")
    p.add_argument("--backend", help="packed | naive")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")


_CONFIG_KEYS = (
    "data", "label_column", "segment_column", "dim", "bins", "generation", "binding",
    "metric", "gamma", "batch_size", "train_mode", "split", "test_fraction",
    "subsample_factor", "minority_class", "positive_class", "smooth_window", "seed",
    "backend", "threads", "out",
)


def _config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return ExperimentConfig.from_sources(args.config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdpack", description="Bit-packed hyperdimensional computing experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode a dataset into packed hypervectors")
    _add_config_flags(p)

    p = sub.add_parser("train", help="encode a dataset and train a model")
    _add_config_flags(p)

    p = sub.add_parser("predict", help="predict with a model directory written by 'train'")
    _add_config_flags(p)
    p.add_argument("--model-dir", required=True)

    p = sub.add_parser("experiment", help="full cross-validated experiment")
    _add_config_flags(p)

    p = sub.add_parser("sweep", help="repeat an experiment over D or batch size")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated list, e.g. 1024,10240")

    p = sub.add_parser("bench", help="time packed vs naive backends, checking equal outputs")
    _add_config_flags(p)

    p = sub.add_parser("synth", help="write a synthetic classification CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--features", type=int, default=30)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.25)
    p.add_argument("--segments", type=int)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _fit_and_encode(cfg: ExperimentConfig, d: data_mod.Dataset):
    disc = enc.fit_discretizer(d.X, cfg.bins)
    cb = enc.build_codebook(d.n_features, cfg.bins, cfg.dim, cfg.generation, cfg.binding, cfg.seed)
    return disc, cb, enc.encode_batch(enc.discretize(d.X, disc), cb)


def _write_artifacts(out: Path, disc, cb) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "discretizer.json").write_text(disc.to_json() + "\n")
    enc.save_codebook(cb, out / "codebook.hvcb")


def cmd_encode(args) -> int:
    cfg = _config(args)
    d = load_dataset(cfg)
    disc, cb, H = _fit_and_encode(cfg, d)
    out = Path(cfg.out)
    _write_artifacts(out, disc, cb)
    hv.save(H, out / "encoded.hvpb")
    np.savetxt(out / "labels.csv", d.y, fmt="%d")
    print(f"encoded {H.rows} rows at D={H.dim} ({H.nbytes} bytes) -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    d = load_dataset(cfg)
    disc, cb, H = _fit_and_encode(cfg, d)
    if cfg.train_mode == "classical":
        model = mdl.train_classical(H, d.y, d.n_classes, cb.tiebreak, cfg.gamma, cfg.metric, cfg.seed)
    else:
        model = mdl.train_online(
            H, d.y, cfg.batch_size, cfg.gamma, d.n_classes, cb.tiebreak, cfg.metric, cfg.seed
        )
    model.provenance = {"train_mode": cfg.train_mode, "batch_size": cfg.batch_size, **cb.header()}
    out = Path(cfg.out)
    _write_artifacts(out, disc, cb)
    mdl.save_model(model, out / "model.hdm")
    print(f"trained {model.n_classes}-class model at D={model.dim} -> {out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    model_dir = Path(args.model_dir)
    try:
        model = mdl.load_model(model_dir / "model.hdm")
        disc = enc.Discretizer.from_json((model_dir / "discretizer.json").read_text())
        cb = enc.load_codebook(model_dir / "codebook.hvcb")
    except (OSError, ValueError, KeyError) as exc:
        raise data_mod.DataError(f"cannot load model from {model_dir}: {exc}") from None
    d = load_dataset(cfg)
    H = enc.encode_batch(enc.discretize(d.X, disc), cb)
    pred = mdl.predict(model, H)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "predictions.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "truth", "pred"] + [f"score_{c}" for c in range(model.n_classes)])
        for i, (t, p) in enumerate(zip(d.y, pred.labels)):
            w.writerow([i, int(t), int(p)] + [repr(float(s)) for s in pred.scores[i]])
    acc = float(np.mean(pred.labels == d.y))
    print(f"accuracy {acc:.4f} on {len(d)} rows -> {out / 'predictions.csv'}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg)
    for mode, r in result.reports.items():
        f1 = "n/a" if r.f1 is None else f"{r.f1:.4f}"
        print(f"{mode:9s} accuracy {r.accuracy:.4f} F1 {f1} ({result.n_folds} folds)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated integers, got {args.values!r}") from None
    rows = run_sweep(cfg, args.axis, values)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    report = run_bench(cfg)
    for stage, s in report["stages"].items():
        print(f"{stage:16s} packed {s['packed_s']:.4f}s naive {s['naive_s']:.4f}s x{s['speedup']:.1f}")
    print(f"memory ratio x{report['memory']['ratio']:.1f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    d = data_mod.make_synthetic(
        args.samples, args.features, args.classes, args.noise, args.segments, args.seed
    )
    data_mod.write_csv(d, args.out)
    print(f"wrote {len(d)} rows -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "train": cmd_train,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"hdpack: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except data_mod.DataError as exc:
        print(f"hdpack: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendMismatch as exc:
        print(f"hdpack: backend mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except ValueError as exc:
        print(f"hdpack: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: probe, stats, oracle, verify, synth, train, predict, evaluate,
ablate.  Exit codes: 0 success, 1 usage error, 2 input error, 3 verification
failure.  All outputs are deterministic given the flags (seeds included); no
timestamps are written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import bias, classifier, colorstats, synthetics
from .image import load_png
from .probe import (ProbeConfig, probe_statistics, run_probe, save_delta_png,
                    write_dmap)

USAGE_ERROR, INPUT_ERROR, VERIFY_ERROR = 1, 2, 3

DEFAULT_SIGMA = 0.10
DEFAULT_UNITS = "normalized"
DEFAULT_REPLICAS = 50


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def sigma_in_levels(sigma: float, units: str) -> float:
    """Normalized sigma is a fraction of the 256-level range."""
    if units == "levels":
        return sigma
    if units == "normalized":
        return sigma * 256.0
    raise ValueError(f"unknown sigma units {units!r}")


def _add_probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA,
                   help="noise standard deviation (default 0.10)")
    p.add_argument("--sigma-units", choices=("levels", "normalized"),
                   default=DEFAULT_UNITS,
                   help="levels: one quantization step; normalized: fraction of 256")
    p.add_argument("--replicas", type=int, default=DEFAULT_REPLICAS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-clip", action="store_true",
                   help="do not clamp quantized values to [0, 255]")
    p.add_argument("--threads", type=int, default=None,
                   help="probe worker threads (default: all cores)")


def _probe_config(args) -> ProbeConfig:
    return ProbeConfig(
        sigma_levels=sigma_in_levels(args.sigma, args.sigma_units),
        replicas=args.replicas,
        master_seed=args.seed,
        clip=not args.no_clip,
    )


def _require_paths(*paths) -> None:
    for p in paths:
        if not os.path.exists(p):
            raise FileNotFoundError(f"no such file or directory: {p}")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _image_paths(path) -> list[str]:
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path)
                       if n.lower().endswith((".png", ".ppm", ".bmp", ".jpg", ".jpeg")))
        if not names:
            raise FileNotFoundError(f"no image files in directory: {path}")
        return [os.path.join(path, n) for n in names]
    return [path]


# --- subcommands -------------------------------------------------------------


def _cmd_probe(args) -> int:
    _require_paths(args.input)
    os.makedirs(args.out, exist_ok=True)
    config = _probe_config(args)
    for path in _image_paths(args.input):
        stem = os.path.splitext(os.path.basename(path))[0]
        image = load_png(path)
        _, delta = run_probe(image, config, threads=args.threads)
        write_dmap(os.path.join(args.out, stem + ".dmap"), delta)
        save_delta_png(os.path.join(args.out, stem + "_delta.png"), delta, args.gain)
        _write_json(os.path.join(args.out, stem + "_stats.json"), {
            "input": os.path.basename(path),
            "config": config.to_dict(),
            "stats": probe_statistics(delta).to_dict(),
        })
    return 0


def _cmd_stats(args) -> int:
    _require_paths(args.input)
    paths = _image_paths(args.input)
    summary = colorstats.corpus_summary([load_png(p) for p in paths])
    if args.format == "json":
        doc = summary.to_dict()
        doc["inputs"] = [os.path.basename(p) for p in paths]
        _write_json(args.out, doc)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("bin,red,green,blue,hue\n")
            hue = np.concatenate([summary.pooled.hue,
                                  np.full(256 - colorstats.HUE_BINS, np.nan)])
            for i in range(256):
                hv = "" if np.isnan(hue[i]) else f"{hue[i]:.10g}"
                fh.write(f"{i},{summary.pooled.rgb[0][i]:.10g},"
                         f"{summary.pooled.rgb[1][i]:.10g},"
                         f"{summary.pooled.rgb[2][i]:.10g},{hv}\n")
    return 0


def _cmd_oracle(args) -> int:
    sigma = sigma_in_levels(args.sigma, args.sigma_units)
    profile = bias.bias_profile(sigma, grid=args.grid, order=args.order,
                                mc_samples=args.mc_samples, seed=args.seed)
    text = profile.to_csv() if args.format == "csv" else profile.to_json() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args) -> int:
    checks = bias.run_verification(mc_samples=args.mc_samples, seed=args.seed)
    failed = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: {c.detail}")
        failed += 0 if c.passed else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else VERIFY_ERROR


def _cmd_synth(args) -> int:
    smooth = synthetics.SynthSpec(kind="smooth", width=args.size, height=args.size)
    peaked = synthetics.SynthSpec(kind="peaked", width=args.size, height=args.size,
                                  palette_size=args.palette_size)
    dataset = synthetics.gen_dataset(args.count, smooth, peaked, seed=args.seed)
    manifest = classifier.save_dataset(args.out, dataset)
    print(f"wrote {len(dataset)} images and {manifest}")
    return 0


def _cmd_train(args) -> int:
    _require_paths(args.data)
    dataset = classifier.load_dataset(args.data)
    config = _probe_config(args)
    hyper = classifier.TrainConfig(
        learning_rate=args.learning_rate, epochs=args.epochs,
        batch_size=args.batch_size, hidden_width=args.hidden_width,
        l2_penalty=args.l2_penalty, seed=args.train_seed)
    model = classifier.train(dataset, config, hyper, branches=args.branches,
                             threads=args.threads)
    classifier.save_model(args.out, model)
    print(f"trained on {len(dataset)} items; "
          f"loss {model.loss_trajectory[0]:.4f} -> {model.loss_trajectory[-1]:.4f}; "
          f"wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    _require_paths(args.model, *args.images)
    model = classifier.load_model(args.model)
    lines = []
    for path in args.images:
        score = classifier.predict(model, load_png(path), threads=args.threads)
        lines.append({"path": path, "score": score,
                      "label": "fake" if score >= 0.5 else "real"})
    out = "\n".join(json.dumps(line) for line in lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def _cmd_evaluate(args) -> int:
    _require_paths(args.model, args.data)
    model = classifier.load_model(args.model)
    dataset = classifier.load_dataset(args.data)
    metrics = classifier.evaluate(model, dataset, threads=args.threads)
    doc = metrics.to_dict()
    if args.out:
        _write_json(args.out, doc)
    else:
        print(json.dumps(doc, indent=2))
    return 0


def _cmd_ablate(args) -> int:
    train_set = synthetics.gen_dataset(
        args.train_count,
        synthetics.SynthSpec(kind="smooth", width=args.size, height=args.size),
        synthetics.SynthSpec(kind="peaked", width=args.size, height=args.size),
        seed=args.seed)
    eval_set = synthetics.gen_dataset(
        args.eval_count,
        synthetics.SynthSpec(kind="smooth", width=args.size, height=args.size),
        synthetics.SynthSpec(kind="peaked", width=args.size, height=args.size),
        seed=args.seed + 1)
    hyper = classifier.TrainConfig(epochs=args.epochs, seed=args.train_seed)

    def run(config: ProbeConfig, branches: str) -> float:
        model = classifier.train(train_set, config, hyper, branches=branches,
                                 threads=args.threads)
        return classifier.evaluate(model, eval_set, threads=args.threads).accuracy

    base = ProbeConfig(sigma_levels=sigma_in_levels(0.10, "normalized"),
                       replicas=50, master_seed=args.seed, clip=True)
    rows = []
    for branches in ("visual", "color", "full"):
        rows.append({"setting": f"branches={branches}", "sigma": 0.10,
                     "replicas": 50, "accuracy": run(base, branches)})
    for r in (20, 30, 50):
        cfg = replace(base, replicas=r)
        rows.append({"setting": f"replicas={r}", "sigma": 0.10,
                     "replicas": r, "accuracy": run(cfg, "full")})
    for s in (0.05, 0.10, 0.20):
        cfg = replace(base, sigma_levels=sigma_in_levels(s, "normalized"))
        rows.append({"setting": f"sigma={s}", "sigma": s,
                     "replicas": 50, "accuracy": run(cfg, "full")})

    header = f"{'setting':<20}{'sigma':>8}{'R':>5}{'accuracy':>10}"
    print(header)
    for row in rows:
        print(f"{row['setting']:<20}{row['sigma']:>8.2f}{row['replicas']:>5d}"
              f"{row['accuracy']:>10.4f}")
    if args.out:
        _write_json(args.out, {"rows": rows})
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="nqprobe",
                     description="Noise-quantization probing of color distributions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("probe", help="difference map, visualization and stats")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--out", default="probe_out", help="output directory")
    p.add_argument("--gain", type=float, default=20.0,
                   help="visualization gain (default 20)")
    _add_probe_flags(p)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("stats", help="color-distribution statistics")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--out", default="stats.json")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("oracle", help="tabulate the quantization bias")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--sigma-units", choices=("levels", "normalized"),
                   default="levels")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--order", type=int, default=None,
                   help="Fourier truncation (default: adaptive, >= 50 terms)")
    p.add_argument("--mc-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("verify", help="run the oracle agreement suite")
    p.add_argument("--mc-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    p.add_argument("--count", type=int, default=100, help="images per class")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--palette-size", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synth_data")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a detector on a manifest")
    p.add_argument("--data", required=True, help="manifest.jsonl path")
    p.add_argument("--out", default="model.json")
    p.add_argument("--branches", choices=classifier.BRANCHES, default="full")
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--hidden-width", type=int, default=0)
    p.add_argument("--l2-penalty", type=float, default=1e-4)
    p.add_argument("--train-seed", type=int, default=0)
    _add_probe_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score images with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("images", nargs="+")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="accuracy / AP / AUC on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="branch / replicas / sigma sweeps")
    p.add_argument("--train-count", type=int, default=200, help="images per class")
    p.add_argument("--eval-count", type=int, default=100)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=120)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ablate)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, OSError) as exc:
        print(f"nqprobe: {exc}", file=sys.stderr)
        return INPUT_ERROR


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

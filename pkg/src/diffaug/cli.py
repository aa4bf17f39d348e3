"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 filter quota not reachable, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import diffusion
from .data import DataError, load_dataset, save_dataset
from .downstream import Regime, run_regime
from .experiment import (ConfigError, RunConfig, derive_seed, make_quota, run_experiment,
                         train_generative, write_report)
from .features import FeatureExtractor, IdentityExtractor, embed, train_feature_extractor
from .latent import Compressor
from .metrics import quality_report
from .selection import MaxAttemptsExceeded, diffusion_generator, filter_generate

EXIT_CONFIG, EXIT_DATA, EXIT_ATTEMPTS, EXIT_NUMERIC = 2, 3, 4, 5

logger = logging.getLogger("diffaug")


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _input(path: str | None, what: str) -> str:
    if path is None:
        raise ConfigError(f"no {what} given")
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def cmd_train_ddpm(cfg: RunConfig, args) -> None:
    train = load_dataset(cfg.require("train")["train"])
    comp, net = train_generative(train, cfg, cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    _dump(comp.to_dict(), os.path.join(cfg.out, "compressor.json"))
    diffusion.save_denoiser(net, os.path.join(cfg.out, "denoiser.json"), {"seed": cfg.seed})
    with open(os.path.join(cfg.out, "loss_trace.csv"), "w") as fh:
        fh.write("epoch,loss\n")
        for i, v in enumerate(net.loss_trace):
            fh.write(f"{i},{v!r}\n")
    print(f"denoiser written to {os.path.join(cfg.out, 'denoiser.json')}")


def cmd_train_extractor(cfg: RunConfig, args) -> None:
    train = load_dataset(cfg.require("train")["train"])
    ext = train_feature_extractor(train, cfg.extractor.replace(seed=cfg.seed),
                                  hidden=cfg.extractor.hidden)
    os.makedirs(cfg.out, exist_ok=True)
    ext.save(os.path.join(cfg.out, "extractor.json"))
    print(f"extractor written to {os.path.join(cfg.out, 'extractor.json')}")


def _load_extractor(cfg, args) -> FeatureExtractor:
    path = args.extractor or os.path.join(cfg.out, "extractor.json")
    return FeatureExtractor.load(_input(path, "extractor"))


def cmd_sample(cfg: RunConfig, args) -> None:
    model = _input(args.model or os.path.join(cfg.out, "denoiser.json"), "model")
    comp_path = args.compressor or os.path.join(os.path.dirname(model), "compressor.json")
    with open(_input(comp_path, "compressor")) as fh:
        comp = Compressor.from_dict(json.load(fh))
    net = diffusion.load_denoiser(model)
    ext = _load_extractor(cfg, args)
    real = load_dataset(cfg.require("train")["train"])
    quota_rule = cfg.quota if args.quota is None else (
        args.quota if args.quota == "match" else int(args.quota))
    quota = make_quota(real, quota_rule)
    policy = cfg.filter_policy(args.policy)
    synth = filter_generate(diffusion_generator(net), comp, ext, policy, quota,
                            derive_seed(cfg.seed, 3), real_features=embed(ext, real))
    os.makedirs(cfg.out, exist_ok=True)
    save_dataset(synth.dataset, os.path.join(cfg.out, "synthetic.csv"))
    with open(os.path.join(cfg.out, "synthetic_scores.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "label", "realism_score", "draw_index", "attempts"])
        for i, (label, score, draw) in enumerate(zip(synth.dataset.y, synth.scores, synth.draw_index)):
            writer.writerow([i, int(label), repr(float(score)), int(draw), synth.attempts[int(label)]])
    print(f"{len(synth)} samples written; attempts per class {synth.attempts}")


def cmd_eval_quality(cfg: RunConfig, args) -> None:
    real_path = args.real or cfg.require("train")["train"]
    real = load_dataset(_input(real_path, "real CSV"))
    synth = load_dataset(_input(args.synth, "synthetic CSV"))
    if real.d != synth.d:
        raise DataError(f"dimension mismatch: real {real.d}, synthetic {synth.d}")
    ext = IdentityExtractor(real.d) if args.extractor == "identity" else _load_extractor(cfg, args)
    report = quality_report(embed(ext, real), embed(ext, synth), cfg.k).to_dict()
    os.makedirs(cfg.out, exist_ok=True)
    _dump(report, os.path.join(cfg.out, "quality.json"))
    print(json.dumps(report, sort_keys=True))


def cmd_run_downstream(cfg: RunConfig, args) -> None:
    paths = cfg.require("train", "valid", "test")
    train = load_dataset(paths["train"])
    valid = load_dataset(paths["valid"], train.n_classes)
    test = load_dataset(paths["test"], train.n_classes)
    synth = load_dataset(_input(args.synth, "synthetic CSV"), train.n_classes) if args.synth else None
    regimes = [Regime(kind, cfg.noise_scale, equal_amounts=not args.allow_unequal)
               for kind in args.regime or cfg.regimes]
    if synth is None and any(r.needs_synthetic for r in regimes):
        raise ConfigError("synthetic regimes need --synth")
    results = {}
    for regime in regimes:
        kind = regime.kind
        metrics = run_regime(regime, train, synth, valid, test, cfg.classifier.replace(seed=cfg.seed),
                             hidden=cfg.classifier.hidden)
        results[kind] = metrics.to_dict()
    os.makedirs(cfg.out, exist_ok=True)
    _dump({"seed": cfg.seed, "config_hash": cfg.config_hash(), "results": results},
          os.path.join(cfg.out, "downstream.json"))
    print(json.dumps(results, sort_keys=True))


def cmd_experiment(cfg: RunConfig, args) -> None:
    report = run_experiment(cfg)
    files = write_report(report, cfg.out)
    with open(files["summary"]) as fh:
        print(fh.read(), end="")


COMMANDS = {
    "train-ddpm": cmd_train_ddpm,
    "train-extractor": cmd_train_extractor,
    "sample": cmd_sample,
    "eval-quality": cmd_eval_quality,
    "run-downstream": cmd_run_downstream,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffaug", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("sample", "eval-quality"):
            p.add_argument("--extractor", help="feature extractor file"
                           + (" or 'identity' for precomputed features" if name == "eval-quality" else ""))
        if name == "sample":
            p.add_argument("--model", help="denoiser file (default <out>/denoiser.json)")
            p.add_argument("--compressor", help="compressor file (default next to the model)")
            p.add_argument("--policy", choices=("none", "rs", "class-rs"), default="none")
            p.add_argument("--quota", help="'match' or samples per class")
        if name == "eval-quality":
            p.add_argument("--real", help="real CSV (default paths.train)")
            p.add_argument("--synth", required=True, help="synthetic CSV")
        if name == "run-downstream":
            p.add_argument("--synth", help="synthetic CSV")
            p.add_argument("--regime", action="append",
                           choices=("baseline", "traditional_aug", "synthetic_aug", "transfer"))
            p.add_argument("--allow-unequal", action="store_true",
                           help="skip the equal real/synthetic size check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = os.path.abspath(args.out)
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MaxAttemptsExceeded as exc:
        print(f"filtering failed: {exc}", file=sys.stderr)
        return EXIT_ATTEMPTS
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, KeyError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration and the subset x policy x regime experiment matrix."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import diffusion
from .data import DataError, LabeledDataset, load_dataset
from .downstream import REGIMES, Regime, run_regime, split_subsets
from .features import embed, train_feature_extractor
from .latent import Compressor, encode, fit_linear_compressor
from .metrics import fid, gaussian_stats, quality_report
from .selection import POLICY_ALIASES, FilterPolicy, MaxAttemptsExceeded, diffusion_generator, filter_generate
from .training import TrainConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


DEFAULT_CLASSIFIER = {"epochs": 60, "batch_size": 32, "learning_rate": 0.05, "hidden": [64]}


@dataclass
class RunConfig:
    train_path: str | None = None
    valid_path: str | None = None
    test_path: str | None = None
    out_dir: str = "out"
    seed: int = 0
    k: int = 3
    n_subsets: int = 5
    subset_fraction: float = 0.1
    compressor: dict = field(default_factory=lambda: {"kind": "identity"})
    diffusion: TrainConfig = field(default_factory=TrainConfig)
    extractor: TrainConfig = field(default_factory=lambda: TrainConfig.from_dict(DEFAULT_CLASSIFIER))
    classifier: TrainConfig = field(default_factory=lambda: TrainConfig.from_dict(DEFAULT_CLASSIFIER))
    policies: tuple = ("none", "realism", "class_realism")
    filter_epsilon: float = 1e-12
    max_attempts_factor: int = 50
    prune_quantile: float | None = None
    regimes: tuple = REGIMES
    noise_scale: float = 0.05
    quota: str | int = "match"
    per_class_quality: bool = False
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "RunConfig":
        raw = dict(raw or {})
        paths = dict(raw.pop("paths", {}) or {})
        filt = dict(raw.pop("filter", {}) or {})
        try:
            cfg = cls(
                train_path=paths.pop("train", None),
                valid_path=paths.pop("valid", None),
                test_path=paths.pop("test", None),
                out_dir=paths.pop("out", "out"),
                seed=int(raw.pop("seed", 0)),
                k=int(raw.pop("k", 3)),
                n_subsets=int(raw.pop("n_subsets", 5)),
                subset_fraction=float(raw.pop("subset_fraction", 0.1)),
                compressor=dict(raw.pop("compressor", {"kind": "identity"})),
                diffusion=TrainConfig.from_dict(raw.pop("diffusion", {})),
                extractor=TrainConfig.from_dict({**DEFAULT_CLASSIFIER, **(raw.pop("extractor", {}) or {})}),
                classifier=TrainConfig.from_dict({**DEFAULT_CLASSIFIER, **(raw.pop("classifier", {}) or {})}),
                policies=tuple(POLICY_ALIASES[p] for p in filt.pop("policies", ["none", "rs", "class-rs"])),
                filter_epsilon=float(filt.pop("epsilon", 1e-12)),
                max_attempts_factor=int(filt.pop("max_attempts_factor", 50)),
                prune_quantile=filt.pop("prune_quantile", None),
                regimes=tuple(raw.pop("regimes", list(REGIMES))),
                noise_scale=float(raw.pop("noise_scale", 0.05)),
                quota=raw.pop("quota", "match"),
                per_class_quality=bool(raw.pop("per_class_quality", False)),
                base_dir=base_dir,
            )
        except KeyError as exc:
            raise ConfigError(f"unknown filter policy {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        leftovers = set(raw) | {f"paths.{k}" for k in paths} | {f"filter.{k}" for k in filt}
        if leftovers:
            raise ConfigError(f"unknown configuration keys: {sorted(leftovers)}")
        for r in cfg.regimes:
            if r not in REGIMES:
                raise ConfigError(f"unknown regime {r!r}")
        if cfg.compressor.get("kind") not in ("identity", "linear"):
            raise ConfigError(f"unknown compressor kind {cfg.compressor.get('kind')!r}")
        if cfg.quota != "match" and not (isinstance(cfg.quota, int) and cfg.quota > 0):
            raise ConfigError("quota must be 'match' or a positive integer per class")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(raw or {}, base_dir=os.path.dirname(os.path.abspath(path)))

    def resolve(self, path: str | None) -> str | None:
        if path is None:
            return None
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def require(self, *names: str) -> dict[str, str]:
        """Resolved paths for the named inputs; each must exist."""
        out = {}
        for name in names:
            path = self.resolve(getattr(self, f"{name}_path"))
            if path is None:
                raise ConfigError(f"paths.{name} is not set")
            if not os.path.exists(path):
                raise ConfigError(f"input file not found: {path}")
            out[name] = path
        return out

    @property
    def out(self) -> str:
        return self.resolve(self.out_dir)

    def filter_policy(self, kind: str) -> FilterPolicy:
        return FilterPolicy(kind, self.k, self.filter_epsilon, self.max_attempts_factor,
                            self.prune_quantile)

    def to_dict(self) -> dict:
        return {
            "paths": {"train": self.train_path, "valid": self.valid_path,
                      "test": self.test_path},
            "seed": self.seed, "k": self.k, "n_subsets": self.n_subsets,
            "subset_fraction": self.subset_fraction, "compressor": self.compressor,
            "diffusion": self.diffusion.to_dict(), "extractor": self.extractor.to_dict(),
            "classifier": self.classifier.to_dict(),
            "filter": {"policies": list(self.policies), "epsilon": self.filter_epsilon,
                       "max_attempts_factor": self.max_attempts_factor,
                       "prune_quantile": self.prune_quantile},
            "regimes": list(self.regimes), "noise_scale": self.noise_scale,
            "quota": self.quota, "per_class_quality": self.per_class_quality,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


STAGES = {"split": 0, "extractor": 1, "diffusion": 2, "sample": 3, "classifier": 4, "noise": 5}


def derive_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([master, *path]).generate_state(1, np.uint64)[0] >> 1)


def build_compressor(spec: dict, dataset: LabeledDataset) -> Compressor:
    if spec.get("kind", "identity") == "identity":
        return Compressor.identity(dataset.d)
    return fit_linear_compressor(dataset, int(spec["latent_dim"]))


def train_generative(real: LabeledDataset, cfg: RunConfig, seed: int):
    """Fit the compressor, then the denoiser on encoded data."""
    comp = build_compressor(cfg.compressor, real)
    latent = LabeledDataset(encode(comp, real.X), real.y, real.n_classes)
    net = diffusion.train(latent, cfg.diffusion.replace(seed=seed))
    return comp, net


def make_quota(real: LabeledDataset, rule) -> dict[int, int]:
    if rule == "match":
        return {c: int(n) for c, n in enumerate(real.class_counts) if n > 0}
    return {c: int(rule) for c in range(real.n_classes)}


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        return _clean(value.item())
    return value


def _mean_std(values):
    vals = np.array([v for v in values if v is not None and math.isfinite(v)], dtype=np.float64)
    if vals.size == 0:
        return None, None, 0
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return float(np.mean(vals)), std, int(vals.size)


def aggregate(cells: list[dict], keys: tuple, metrics: tuple) -> list[dict]:
    groups: dict = {}
    for cell in cells:
        groups.setdefault(tuple(cell[k] for k in keys), []).append(cell)
    out = []
    for key, members in groups.items():
        row = dict(zip(keys, key))
        for m in metrics:
            mean, std, n = _mean_std([c["metrics"].get(m) for c in members if c.get("metrics")])
            row[m] = {"mean": mean, "std": std, "n": n}
        out.append(row)
    return out


QUALITY_METRICS = ("fid", "improved_precision", "improved_recall", "improved_f1",
                   "label_agreement", "noise_fid", "attempts")
CLASSIFIER_METRICS = ("accuracy", "auc", "sensitivity", "specificity")


def run_experiment(cfg: RunConfig) -> dict:
    """Run every (subset, policy, regime) cell and return the report document."""
    paths = cfg.require("train", "valid", "test")
    train = load_dataset(paths["train"])
    valid = load_dataset(paths["valid"], train.n_classes)
    test = load_dataset(paths["test"], train.n_classes)
    if not valid.d == test.d == train.d:
        raise DataError("train/valid/test dimensions differ")
    chash = cfg.config_hash()
    subsets = split_subsets(train, cfg.n_subsets, cfg.subset_fraction,
                            derive_seed(cfg.seed, STAGES["split"]))
    quality_cells, classifier_cells, errors = [], [], []
    for i, real in enumerate(subsets):
        logger.info("subset %d: %d samples", i, len(real))
        base = {"subset": i, "seed": cfg.seed, "config_hash": chash}
        ext = train_feature_extractor(
            real, cfg.extractor.replace(seed=derive_seed(cfg.seed, STAGES["extractor"], i)),
            hidden=cfg.extractor.hidden)
        real_feats = embed(ext, real)
        comp, net = train_generative(real, cfg, derive_seed(cfg.seed, STAGES["diffusion"], i))
        noise = np.random.default_rng(derive_seed(cfg.seed, STAGES["noise"], i)).standard_normal(real.X.shape)
        noise_fid = fid(gaussian_stats(real_feats), gaussian_stats(ext(noise)))
        quota = make_quota(real, cfg.quota)
        generator = diffusion_generator(net)
        clf_cfg = cfg.classifier.replace(seed=derive_seed(cfg.seed, STAGES["classifier"], i))
        real_only: dict = {}
        for policy in cfg.policies:
            synth = None
            try:
                synth = filter_generate(generator, comp, ext, cfg.filter_policy(policy), quota,
                                        derive_seed(cfg.seed, STAGES["sample"], i),
                                        real_features=real_feats)
                gen_feats = embed(ext, synth.dataset)
                q = quality_report(real_feats, gen_feats, cfg.k).to_dict()
                q["label_agreement"] = float(np.mean(ext.net.predict(synth.dataset.X) == synth.dataset.y))
                q["noise_fid"] = noise_fid
                q["attempts"] = float(sum(synth.attempts.values()))
                if cfg.per_class_quality:
                    q["per_class"] = {
                        str(c): quality_report(real_feats.of_class(c), gen_feats.of_class(c), cfg.k).to_dict()
                        for c in quota}
                quality_cells.append({**base, "policy": policy, "metrics": q, "error": None})
            except (MaxAttemptsExceeded, ValueError, FloatingPointError) as exc:
                logger.warning("subset %d policy %s: %s", i, policy, exc)
                quality_cells.append({**base, "policy": policy, "metrics": None, "error": str(exc)})
                errors.append(f"subset {i} policy {policy}: {exc}")
            for kind in cfg.regimes:
                regime = Regime(kind, cfg.noise_scale, equal_amounts=cfg.quota == "match")
                try:
                    if regime.needs_synthetic:
                        if synth is None:
                            raise ValueError("no synthetic data for this cell")
                        m = run_regime(regime, real, synth, valid, test, clf_cfg,
                                       hidden=cfg.classifier.hidden).to_dict()
                    else:
                        if kind not in real_only:
                            real_only[kind] = run_regime(regime, real, None, valid, test, clf_cfg,
                                                         hidden=cfg.classifier.hidden).to_dict()
                        m = real_only[kind]
                    classifier_cells.append({**base, "policy": policy, "regime": kind,
                                             "metrics": dict(m), "error": None})
                except (ValueError, FloatingPointError) as exc:
                    classifier_cells.append({**base, "policy": policy, "regime": kind,
                                             "metrics": None, "error": str(exc)})
                    errors.append(f"subset {i} policy {policy} regime {kind}: {exc}")
    report = {
        "config": cfg.to_dict(),
        "config_hash": chash,
        "seed": cfg.seed,
        "quality_cells": quality_cells,
        "classifier_cells": classifier_cells,
        "quality_summary": aggregate(quality_cells, ("policy",), QUALITY_METRICS),
        "classifier_summary": aggregate(classifier_cells, ("policy", "regime"), CLASSIFIER_METRICS),
        "errors": errors,
    }
    return _clean(report)


def _fmt(stat, scale=1.0):
    if stat["mean"] is None:
        return "n/a"
    return f"{stat['mean'] * scale:.2f} ± {stat['std'] * scale:.2f}"


def summary_table(report: dict) -> str:
    lines = [f"config {report['config_hash']}  seed {report['seed']}", "",
             "Generative quality (mean ± std over subsets)",
             f"{'policy':<15}{'FID':>18}{'precision %':>18}{'recall %':>18}{'F1 %':>18}"]
    for row in report["quality_summary"]:
        lines.append(f"{row['policy']:<15}{_fmt(row['fid']):>18}"
                     f"{_fmt(row['improved_precision'], 100):>18}"
                     f"{_fmt(row['improved_recall'], 100):>18}{_fmt(row['improved_f1'], 100):>18}")
    lines += ["", "Downstream classification (mean ± std over subsets)",
              f"{'policy':<15}{'regime':<17}{'accuracy %':>18}{'AUC %':>18}"
              f"{'sensitivity %':>18}{'specificity %':>18}"]
    for row in report["classifier_summary"]:
        lines.append(f"{row['policy']:<15}{row['regime']:<17}{_fmt(row['accuracy'], 100):>18}"
                     f"{_fmt(row['auc'], 100):>18}{_fmt(row['sensitivity'], 100):>18}"
                     f"{_fmt(row['specificity'], 100):>18}")
    if report["errors"]:
        lines += ["", "Failed cells:"] + [f"  {e}" for e in report["errors"]]
    return "\n".join(lines) + "\n"


def cells_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "subset", "policy", "regime", "metric", "value", "seed", "config_hash"])
    for cell in report["quality_cells"]:
        for m, v in sorted((cell["metrics"] or {}).items()):
            if isinstance(v, dict):
                continue
            writer.writerow(["quality", cell["subset"], cell["policy"], "", m, repr(v),
                             cell["seed"], cell["config_hash"]])
    for cell in report["classifier_cells"]:
        for m, v in sorted((cell["metrics"] or {}).items()):
            writer.writerow(["classifier", cell["subset"], cell["policy"], cell["regime"], m,
                             repr(v), cell["seed"], cell["config_hash"]])
    return buf.getvalue()


def write_report(report: dict, out_dir: str) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    files = {"report": os.path.join(out_dir, "report.json"),
             "cells": os.path.join(out_dir, "cells.csv"),
             "summary": os.path.join(out_dir, "summary.txt")}
    with open(files["report"], "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(files["cells"], "w") as fh:
        fh.write(cells_csv(report))
    with open(files["summary"], "w") as fh:
        fh.write(summary_table(report))
    return files

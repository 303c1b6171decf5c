"""Sectioned key-value experiment configuration with ``section.key=value`` overrides."""
from __future__ import annotations

import configparser
import io
from pathlib import Path

from .augment import CATALOG, AugmenterSpec, AugmentParams, enumerate_chains
from .classifiers import ModelSpec
from .generation import GenerationConfig
from .harness import ExperimentConfig

SCHEMA = {
    "data": {
        "path": "", "label_column": "label", "group_column": "group",
        "synthetic_rows": "1709", "synthetic_features": "18",
        "synthetic_bayes_auc": "0.69", "synthetic_seed": "0",
    },
    "models": {
        "models": "LR, SVM, RF, MLP", "rf_trees": "100", "mlp_max_epochs": "200",
    },
    "augmentation": {
        "techniques": "", "k_neighbors": "5", "enn_neighbors": "3", "kmeans_clusters": "8",
        "nearmiss_version": "1", "noise_scale": "0.05", "latent_dim": "100", "epochs": "100",
        "batch_size": "64", "learning_rate": "0.0002", "batch_mode": "size",
    },
    "evaluation": {
        "n_seeds": "100", "bootstrap_B": "1000", "fdr_q": "0.05", "master_seed": "0",
        "use_ffs": "false", "mode": "augment", "bh_family": "global", "fold_dumps": "false",
    },
}


class ConfigError(ValueError):
    pass


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


def load_config(path=None, overrides=()) -> configparser.ConfigParser:
    """Defaults, then the file, then overrides; unknown sections or keys raise."""
    cp = _parser()
    cp.read_dict(SCHEMA)
    if path is not None:
        user = _parser()
        try:
            user.read_string(Path(path).read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for sec in user.sections():
            for key, val in user[sec].items():
                _set(cp, sec, key, val)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not section.key=value")
        lhs, val = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        _set(cp, sec, key.strip(), val.strip())
    return cp


def _set(cp, sec, key, val):
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section [{sec}]")
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {sec}.{key}")
    cp[sec][key] = val


def config_text(cp: configparser.ConfigParser) -> str:
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _list(text: str) -> list[str]:
    return [p.strip() for p in text.replace("\n", ",").split(",") if p.strip()]


def parse_techniques(text: str) -> list[AugmenterSpec]:
    out = []
    for item in _list(text):
        if item == "all":
            out += [AugmenterSpec((t,)) for t in CATALOG]
        elif item == "chains":
            out += enumerate_chains()
        else:
            out.append(AugmenterSpec.parse(item))
    return out


def experiment_config(cp: configparser.ConfigParser) -> ExperimentConfig:
    try:
        m, a, e = cp["models"], cp["augmentation"], cp["evaluation"]
        models = []
        for arch in _list(m["models"]):
            opts = {}
            if arch == "RF":
                opts["n_trees"] = m.getint("rf_trees")
            if arch == "MLP":
                opts["max_epochs"] = m.getint("mlp_max_epochs")
            models.append(ModelSpec(arch, opts))
        gen = GenerationConfig(latent_dim=a.getint("latent_dim"), epochs=a.getint("epochs"),
                               batch_size=a.getint("batch_size"),
                               learning_rate=a.getfloat("learning_rate"),
                               batch_mode=a["batch_mode"])
        params = AugmentParams(a.getint("k_neighbors"), a.getint("enn_neighbors"),
                               a.getint("kmeans_clusters"), a.getint("nearmiss_version"),
                               a.getfloat("noise_scale"), gen)
        return ExperimentConfig(
            models=tuple(models), techniques=tuple(parse_techniques(a["techniques"])),
            n_seeds=e.getint("n_seeds"), bootstrap_B=e.getint("bootstrap_B"),
            fdr_q=e.getfloat("fdr_q"), master_seed=e.getint("master_seed"),
            use_ffs=e.getboolean("use_ffs"), mode=e["mode"], bh_family=e["bh_family"],
            params=params,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

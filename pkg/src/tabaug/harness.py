"""Experiment grid: per-fold augmentation, seed repetition, aggregation."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import augment as _augment
from .augment import BASELINE, AugmenterSpec, AugmentParams
from .classifiers import ModelSpec, forward_feature_selection, score, train
from .data import TabularDataset, grouped_kfold
from .seeds import SeedStream
from .stats import (benjamini_hochberg, bootstrap_auc_distribution,
                    compare_distributions, auc)

log = logging.getLogger(__name__)

UNRELIABLE_FRACTION = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple = (ModelSpec("LR"), ModelSpec("SVM"), ModelSpec("RF"), ModelSpec("MLP"))
    techniques: tuple = ()
    n_seeds: int = 100
    bootstrap_B: int = 1000
    fdr_q: float = 0.05
    master_seed: int = 0
    use_ffs: bool = False
    mode: str = "augment"
    bh_family: str = "global"
    params: AugmentParams = field(default_factory=AugmentParams)

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if self.mode not in ("replicate", "augment"):
            raise ValueError("mode must be 'replicate' or 'augment'")
        if self.bh_family not in ("global", "per-model"):
            raise ValueError("bh_family must be 'global' or 'per-model'")
        techs = tuple(t if isinstance(t, AugmenterSpec) else AugmenterSpec.parse(t)
                      for t in self.techniques)
        object.__setattr__(self, "techniques", techs)
        names = [t.name for t in techs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate technique in config")

    def cells(self) -> list[AugmenterSpec]:
        """Techniques to evaluate; the baseline always comes first."""
        if self.mode == "replicate":
            return [BASELINE]
        return [BASELINE, *(t for t in self.techniques if not t.is_baseline)]


@dataclass(frozen=True)
class RunRecord:
    model: str
    technique: str
    seed: int
    fold_aucs: tuple
    mean_auc: float
    seconds: float
    failed: bool = False
    error: str = ""
    replicated: bool = False
    features: tuple = ()


class LeakageAudit:
    """Collects every augmentation-stage fit input and flags test rows in it."""

    def __init__(self):
        self.checks = 0
        self.violations: list[tuple] = []

    def observe(self, context, stage, fit_ids, test_ids):
        self.checks += 1
        bad = np.intersect1d(np.asarray(fit_ids), np.asarray(test_ids))
        bad = bad[bad >= 0]
        if bad.size:
            self.violations.append((*context, stage, bad.tolist()))


def _select(data: TabularDataset, cols) -> TabularDataset:
    cols = list(cols)
    return data.with_features(data.features[:, cols], [data.feature_names[c] for c in cols])


def run_seed(model: ModelSpec, aug: AugmenterSpec, data: TabularDataset, folds,
             cfg: ExperimentConfig, seed: int, audit: LeakageAudit | None = None,
             augmenter=None) -> RunRecord:
    augmenter = augmenter or _augment.augment
    root = SeedStream(cfg.master_seed).child("run", seed)
    t0 = time.perf_counter()
    cols = tuple(range(data.n_features))
    try:
        if cfg.use_ffs:
            cols = tuple(forward_feature_selection(model, data, folds,
                                                   root.child("ffs", model.architecture)))
        view = _select(data, cols) if cfg.use_ffs else data
        aucs = []
        for f, (tr, te) in enumerate(folds):
            context = (model.architecture, aug.name, seed, f)
            try:
                train_part, test_part = view.subset(tr), view.subset(te)
                hook = None
                if audit is not None:
                    test_ids = test_part.row_ids
                    hook = lambda stage, ids, c=context, t=test_ids: audit.observe(c, stage, ids, t)
                train_part, test_part = augmenter(aug, train_part, test_part,
                                                  root.child("aug", aug.name, f), cfg.params, hook)
                if audit is not None:
                    audit.observe(context, "model", train_part.row_ids, test_part.row_ids)
                fitted = train(model, train_part, root.child("model", model.architecture, f))
                aucs.append(auc(score(fitted, test_part), test_part.labels))
            except Exception as exc:
                msg = (f"model={model.architecture} technique={aug.name} seed={seed} fold={f}: "
                       f"{type(exc).__name__}: {exc}")
                log.warning(msg)
                return RunRecord(model.architecture, aug.name, seed, tuple(aucs), float("nan"),
                                 time.perf_counter() - t0, True, msg, features=cols)
    except Exception as exc:
        msg = (f"model={model.architecture} technique={aug.name} seed={seed} fold=-: "
               f"{type(exc).__name__}: {exc}")
        return RunRecord(model.architecture, aug.name, seed, (), float("nan"),
                         time.perf_counter() - t0, True, msg, features=cols)
    return RunRecord(model.architecture, aug.name, seed, tuple(aucs), float(np.mean(aucs)),
                     time.perf_counter() - t0, features=cols)


def run_cell(model: ModelSpec, aug: AugmenterSpec, data: TabularDataset,
             cfg: ExperimentConfig, audit: LeakageAudit | None = None,
             augmenter=None) -> list[RunRecord]:
    """All seeds of one (model, technique) cell.

    Deterministic models run seed 0 only and replicate that record.
    """
    folds = grouped_kfold(data)
    records = []
    for s in range(cfg.n_seeds):
        if model.deterministic and s > 0:
            records.append(replace(records[0], seed=s, replicated=True))
            continue
        records.append(run_seed(model, aug, data, folds, cfg, s, audit, augmenter))
    return records


def _cell_job(args):
    model, aug, data, cfg = args
    return run_cell(model, aug, data, cfg)


def run_grid(data: TabularDataset, cfg: ExperimentConfig, jobs: int = 1,
             audit: LeakageAudit | None = None, augmenter=None) -> list[RunRecord]:
    """Every (model, technique) cell, records ordered by (model, technique, seed)."""
    grouped_kfold(data)  # fail early when folds are impossible
    cells = [(m, a) for m in cfg.models for a in cfg.cells()]
    if jobs > 1 and audit is None and augmenter is None and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_job, [(m, a, data, cfg) for m, a in cells]))
    else:
        results = [run_cell(m, a, data, cfg, audit, augmenter) for m, a in cells]
    return [r for cell in results for r in cell]


@dataclass
class ReportRow:
    model: str
    technique: str
    category: str
    mean_auc: float
    sd_auc: float
    z: float
    p: float
    significant: bool
    degenerate: bool
    runtime_seconds: float
    failed_runs: int
    n_runs: int

    @property
    def unreliable(self) -> bool:
        return self.n_runs > 0 and self.failed_runs / self.n_runs > UNRELIABLE_FRACTION


@dataclass
class Report:
    rows: list
    models: list
    techniques: list

    def row(self, model, technique) -> ReportRow:
        for r in self.rows:
            if r.model == model and r.technique == technique:
                return r
        raise KeyError((model, technique))

    @property
    def unreliable_cells(self):
        return [(r.model, r.technique) for r in self.rows if r.unreliable]


def aggregate(records, cfg: ExperimentConfig) -> Report:
    by_cell: dict[tuple, list[RunRecord]] = {}
    for r in records:
        by_cell.setdefault((r.model, r.technique), []).append(r)
    models = list(dict.fromkeys(r.model for r in records))
    techniques = list(dict.fromkeys(r.technique for r in records))
    master = SeedStream(cfg.master_seed)
    boots = {}
    for key, recs in by_cell.items():
        ok = [r.mean_auc for r in sorted(recs, key=lambda r: r.seed) if not r.failed]
        if len(ok) >= 2:
            boots[key] = bootstrap_auc_distribution(ok, cfg.bootstrap_B,
                                                    master.child("bootstrap", *key))
    rows = []
    for m in models:
        if (m, BASELINE.name) not in by_cell:
            raise ValueError(f"missing baseline cell for model {m}")
        for t in techniques:
            recs = by_cell.get((m, t))
            if recs is None:
                continue
            ok = np.array([r.mean_auc for r in recs if not r.failed])
            mean = float(ok.mean()) if ok.size else float("nan")
            sd = float(ok.std(ddof=1)) if ok.size > 1 else (0.0 if ok.size else float("nan"))
            z, p, degenerate = float("nan"), float("nan"), False
            if t == BASELINE.name:
                z, p = 0.0, 1.0
            elif (m, t) in boots and (m, BASELINE.name) in boots:
                c = compare_distributions(boots[(m, BASELINE.name)], boots[(m, t)])
                z, p, degenerate = c.z, c.p_value, c.degenerate
            runtime = sum(r.seconds for r in recs if not r.replicated)
            cat = AugmenterSpec.parse(t).category
            rows.append(ReportRow(m, t, cat, mean, sd, z, p, False, degenerate, runtime,
                                  sum(r.failed for r in recs), len(recs)))
    families = ([rows] if cfg.bh_family == "global"
                else [[r for r in rows if r.model == m] for m in models])
    for fam in families:
        # zero-variance comparisons carry no sampling evidence; they stay flagged
        # as degenerate but never earn the significance mark
        tested = [r for r in fam
                  if r.technique != BASELINE.name and np.isfinite(r.p) and not r.degenerate]
        if tested:
            flags = benjamini_hochberg([r.p for r in tested], cfg.fdr_q)
            for r, f in zip(tested, flags):
                r.significant = bool(f)
    return Report(rows, models, techniques)

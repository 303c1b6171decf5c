"""Command-line front end: ``tabaug {run,chains,power,bkt-features,validate-data}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .augment import category_pair, enumerate_chains
from .bkt import (bkt_features, fit_bkt, load_bkt_params, load_responses,
                  write_bkt_params)
from .config import ConfigError, config_text, experiment_config, load_config
from .data import grouped_kfold, load_csv, make_synthetic
from .harness import aggregate, run_grid
from .report import render_table, write_fold_dumps, write_manifest, write_report_csv
from .seeds import SeedStream
from .stats import power_analysis

EXIT_OK, EXIT_FATAL, EXIT_UNRELIABLE = 0, 1, 2

log = logging.getLogger("tabaug")


def load_dataset(cp):
    d = cp["data"]
    if d["path"].strip() in ("", "synthetic"):
        return make_synthetic(n=d.getint("synthetic_rows"), n_features=d.getint("synthetic_features"),
                              bayes_auc=d.getfloat("synthetic_bayes_auc"),
                              rng=SeedStream(d.getint("synthetic_seed")).child("synthetic"))
    return load_csv(d["path"], d["label_column"], d["group_column"])


def _execute(cp, out: Path, jobs: int, techniques=None) -> int:
    cfg = experiment_config(cp)
    if techniques is not None:
        from dataclasses import replace
        cfg = replace(cfg, techniques=tuple(techniques))
    data = load_dataset(cp)
    out.mkdir(parents=True, exist_ok=True)
    records = run_grid(data, cfg, jobs=jobs)
    report = aggregate(records, cfg)
    write_report_csv(report, out / "report.csv")
    (out / "report.md").write_text(render_table(report), encoding="utf-8")
    write_manifest(out / "manifest.json", config_text(cp), cfg.master_seed, report, records)
    if cp["evaluation"].getboolean("fold_dumps"):
        write_fold_dumps(out / "folds", records)
    for m, t in report.unreliable_cells:
        log.warning("unreliable cell: model=%s technique=%s", m, t)
    return EXIT_UNRELIABLE if report.unreliable_cells else EXIT_OK


def cmd_run(args) -> int:
    cp = load_config(args.config, args.set)
    return _execute(cp, Path(args.out), args.jobs)


def cmd_chains(args) -> int:
    chains = enumerate_chains()
    if args.category:
        want = category_pair(args.category)
        chains = [c for c in chains if tuple(c.category.split("→")) == want]
    if args.dry_run:
        for c in chains:
            print(f"{c.category}\t{c.name}")
        return EXIT_OK
    cp = load_config(args.config, args.set)
    return _execute(cp, Path(args.out), args.jobs, techniques=chains)


def cmd_power(args) -> int:
    for n in args.n:
        p = power_analysis(args.delta, n, args.base_auc, args.reps,
                           SeedStream(args.seed).child("power", n),
                           score_correlation=args.correlation)
        print(f"n={n}\tdelta={args.delta}\tbase_auc={args.base_auc}\tpower={p:.4f}")
    return EXIT_OK


def cmd_bkt(args) -> int:
    responses = load_responses(args.responses)
    if args.params:
        params = load_bkt_params(args.params)
    else:
        by_topic: dict[str, list] = {}
        for topics in responses.values():
            for t, seq in topics.items():
                by_topic.setdefault(t, []).append(seq)
        params = {t: fit_bkt(seqs) for t, seqs in sorted(by_topic.items())}
        if args.params_out:
            write_bkt_params(params, args.params_out)
    students, topics, M = bkt_features(responses, params)
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["student", *topics])
        for s, row in zip(students, M):
            w.writerow([s, *(repr(float(v)) for v in row)])
    print(f"wrote {len(students)} students x {len(topics)} topics to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.data:
        data = load_csv(args.data, args.label_column, args.group_column)
    else:
        data = load_dataset(load_config(args.config, args.set))
    n0, n1 = data.class_counts()
    folds = grouped_kfold(data)
    print(f"rows={data.n_rows} features={data.n_features} class0={n0} class1={n1} "
          f"groups={len(folds)}")
    for gid, (tr, te) in zip(folds.group_ids, folds):
        print(f"fold {gid}: train={len(tr)} test={len(te)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tabaug", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="sectioned key-value config file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        if out:
            sp.add_argument("--out", default="results", help="output directory")
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    sp = sub.add_parser("run", help="run the configured experiment grid")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("chains", help="list or run the 99 technique chains")
    common(sp)
    sp.add_argument("--dry-run", action="store_true", help="print the chains only")
    sp.add_argument("--category", help="e.g. perturbation->sampling")
    sp.set_defaults(func=cmd_chains)

    sp = sub.add_parser("power", help="Monte-Carlo power of the DeLong test")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--n", type=int, nargs="+", default=[1709, 591])
    sp.add_argument("--base-auc", type=float, default=0.64)
    sp.add_argument("--reps", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--correlation", type=float, default=0.39,
                    help="within-class correlation of the two models' scores")
    sp.set_defaults(func=cmd_power)

    sp = sub.add_parser("bkt-features", help="BKT mastery features from a response log")
    sp.add_argument("--responses", required=True, help="CSV with student,topic,correct")
    sp.add_argument("--params", help="CSV with topic,p_init,p_learn,p_guess,p_slip")
    sp.add_argument("--params-out", help="write grid-fitted parameters here")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bkt)

    sp = sub.add_parser("validate-data", help="check a dataset and its grouped folds")
    common(sp, out=False)
    sp.add_argument("--data")
    sp.add_argument("--label-column", default="label")
    sp.add_argument("--group-column", default="group")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

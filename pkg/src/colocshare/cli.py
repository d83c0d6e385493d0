"""Command-line driver.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error,
3 I/O error.  Logs go to stderr; data goes to files under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytics, figures, ingest
from .errors import InvalidParameterError
from .experiments import (COMPARISON_COLUMNS, SweepSpec, run_replications, spec_hash, sweep,
                          update_manifest, write_csv)
from .metrics import CSV_COLUMNS, RadioParams
from .network import ScenarioConfig, parse_override
from .validation import run_validation

log = logging.getLogger("colocshare")

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read_json(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _split_override(item):
    if "=" not in item:
        raise UsageError(f"--set expects key=value, got {item!r}")
    return item.split("=", 1)


def load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_dict(_read_json(args.config)) if args.config else ScenarioConfig()
    for item in args.set or []:
        cfg = parse_override(cfg, *_split_override(item))
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_simulate(args):
    cfg = load_config(args)
    radio = RadioParams(args.k_db, "db", args.capacity_alpha)
    summary = run_replications(cfg, args.reps, radio=radio, workers=args.workers)
    out = Path(args.out)
    n_ops = cfg.n_operators
    cols = ["replication", "seed"] + CSV_COLUMNS + [f"strength_type_{k}" for k in range(1, n_ops + 1)]
    write_csv(out / "replications.csv", summary.replication_rows(), cols)
    write_csv(out / "summary.csv", summary.summary_rows(), ["metric", "mean", "stderr", "n"])
    (out / "config.json").write_text(cfg.to_json() + "\n")
    update_manifest(out, {"figure_id": "simulate", "path": "summary.csv", "seed": cfg.seed,
                          "spec_hash": spec_hash({"config": cfg.to_dict(), "reps": args.reps,
                                                 "k_db": args.k_db,
                                                 "capacity_alpha": args.capacity_alpha}),
                          "overrides": list(args.set or [])})
    log.info("radius %.2f m, mean strength %.4f +- %.4f", summary.radius,
             summary.mean["mean_strength"], summary.stderr["mean_strength"])
    return EXIT_OK


def cmd_analyze(args):
    cfg = load_config(args)
    report = analytics.analyze(analytics.AnalyticInputs.from_config(cfg), theta=args.theta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "analytic_report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    write_csv(out / "analytic_report.csv", [report.to_row()], analytics.REPORT_COLUMNS)
    update_manifest(out, {"figure_id": "analyze", "path": "analytic_report.csv", "seed": cfg.seed,
                          "spec_hash": spec_hash(cfg.to_dict()),
                          "overrides": list(args.set or [])})
    log.info("r_opt %.2f m, optimal strength %.4f", report.r_opt, report.s_opt)
    return EXIT_OK


def cmd_sweep(args):
    if not args.config:
        raise UsageError("sweep needs --config with a sweep specification")
    d = _read_json(args.config)
    if args.reps is not None:
        d["replications"] = args.reps
    spec = SweepSpec.from_dict(d)
    base = spec.base
    for item in args.set or []:
        base = parse_override(base, *_split_override(item))
    if args.seed is not None:
        base = base.replace(seed=args.seed)
    spec = SweepSpec(base, spec.axes, spec.replications, spec.outputs, spec.radio)
    rows = [r.to_row() for r in sweep(spec, workers=args.workers)]
    out = Path(args.out)
    names = [name for name, _ in spec.axes]
    extra = [c for c in dict.fromkeys(k for row in rows for k in row)
             if c not in names and c not in COMPARISON_COLUMNS]
    write_csv(out / "sweep.csv", rows, names + extra + COMPARISON_COLUMNS)
    update_manifest(out, {"figure_id": "sweep", "path": "sweep.csv", "seed": base.seed,
                          "spec_hash": spec.digest(), "overrides": list(args.set or [])})
    return EXIT_OK


def _load_inventory(args):
    if args.input:
        return ingest.parse_bs_csv(args.input), args.area
    log.info("no --input given; using the bundled synthetic inventory")
    inv = ingest.parse_bs_csv(ingest.fixture_path())
    return inv, args.area or inv.source.get("side_m", 39_510.0) ** 2


def cmd_ingest(args):
    if not args.input:
        raise UsageError("ingest needs --input PATH")
    inv = ingest.parse_bs_csv(args.input)
    clustering = ingest.cluster_colocated(inv, args.threshold)
    est = ingest.estimate_params(inv, clustering, args.area)
    out = Path(args.out)
    t = clustering.towers
    rows = [{"tower": j, "x_m": float(t.xy[j, 0]), "y_m": float(t.xy[j, 1]),
             "resource_count": int(t.count[j]),
             "operators": ";".join(str(est.operator_ids[k]) for k in range(t.owners.shape[1])
                                   if t.owners[j, k])}
            for j in range(len(t))]
    write_csv(out / "towers.csv", rows, ["tower", "x_m", "y_m", "resource_count", "operators"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "estimated_params.json").write_text(json.dumps(est.to_dict(), indent=2) + "\n")
    log.info("p_hat %.4f, beta_hat %s", est.p_hat, est.beta_hat)
    return EXIT_OK


def cmd_real_world(args):
    inv, area = _load_inventory(args)
    rows = []
    variants = [("observed", inv)]
    for p in args.force_p or []:
        variants.append((f"p={p}", ingest.force_colocation(inv, p, np.random.default_rng(args.seed or 0),
                                                           args.threshold)))
    for label, v in variants:
        rows += [r.to_row() for r in ingest.run_real_world(
            v, user_density=args.user_density, w=args.bandwidth, seed=args.seed or 0,
            reps=args.reps, threshold_m=args.threshold, area_m2=area,
            equal_user_density=args.equal_users, label=label)]
    out = Path(args.out)
    write_csv(out / "real_world.csv", rows)
    update_manifest(out, {"figure_id": "real_world", "path": "real_world.csv",
                          "seed": args.seed or 0,
                          "spec_hash": spec_hash({"input": args.input, "area": area,
                                                  "reps": args.reps, "force_p": args.force_p})})
    return EXIT_OK


def cmd_emit_figure(args):
    if not args.figure:
        raise UsageError("emit-figure needs --figure ID")
    options = {"reps": args.reps, "seed": args.seed or 0}
    if args.figure == "real_world":
        if args.input:
            options["inventory"] = ingest.parse_bs_csv(args.input)
        options["area_m2"] = args.area
        options["threshold_m"] = args.threshold
    path = figures.emit_figure(args.figure, args.out, **options)
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_validate(args):
    results = run_validation(args.out, fault=args.inject_fault)
    for r in results:
        print(f"{r['status'].upper():4s}  {r['check']}  ({r['detail']})")
    return EXIT_OK if all(r["status"] == "pass" for r in results) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colocshare", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, reps_default=100):
        p.add_argument("--config", help="scenario (or sweep) JSON file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--reps", type=int, default=reps_default)
        p.add_argument("--seed", type=int)
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (repeatable)")
        p.add_argument("--workers", type=int, default=1)
        return p

    sim = common(sub.add_parser("simulate", help="run seeded replications of one scenario"))
    sim.add_argument("--k-db", type=float, default=111.0, help="capacity SNR scale K in dB")
    sim.add_argument("--capacity-alpha", type=float, default=2.0,
                     help="path-loss exponent used for capacity")
    a = common(sub.add_parser("analyze", help="closed-form report, no simulation"))
    a.add_argument("--theta", type=float, default=0.9, help="coverage target")
    common(sub.add_parser("sweep", help="parameter sweep with analytic companions"),
           reps_default=None)

    for name, helptext in (("ingest", "cluster a BS inventory and estimate parameters"),
                           ("real-world", "simulate users on a BS inventory"),
                           ("emit-figure", "write one figure dataset")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", help="base-station CSV (operator_id,x_m,y_m or lat,lon)")
        p.add_argument("--out", default="out")
        p.add_argument("--area", type=float, help="region area in m^2")
        p.add_argument("--threshold", type=float, default=ingest.DEFAULT_THRESHOLD_M,
                       help="co-location distance in metres")
        p.add_argument("--reps", type=int, default=10 if name != "emit-figure" else 100)
        p.add_argument("--seed", type=int)
        if name == "real-world":
            p.add_argument("--force-p", type=float, action="append",
                           help="also run with co-location raised to this p (repeatable)")
            p.add_argument("--user-density", type=float, default=1e-5)
            p.add_argument("--bandwidth", type=float, default=1e7)
            p.add_argument("--equal-users", action="store_true",
                           help="same user density for every operator")
        if name == "emit-figure":
            p.add_argument("--figure", choices=sorted(figures.FIGURES))

    v = sub.add_parser("validate", help="run the self-check suite")
    v.add_argument("--out", default="out")
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


COMMANDS = {
    "simulate": cmd_simulate, "analyze": cmd_analyze, "sweep": cmd_sweep, "ingest": cmd_ingest,
    "real-world": cmd_real_world, "emit-figure": cmd_emit_figure, "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidParameterError, ingest.InventoryError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

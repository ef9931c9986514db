"""Command-line front end.

    expanse run <config.json> [--out DIR] [--seed N]
    expanse batch <configs.json> [--out DIR] [--summary PATH]
    expanse validate <config.json>

Exit codes: 0 pass or completed, 1 theorem-check failure, 2 configuration
error, 3 estimator precondition failure.
"""
import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .capacity import capacity_estimate
from .config import ConfigError
from .entropy import katok_entropy_estimate, block_entropy_report
from .errors import PreconditionError, StructuralError
from .exponents import (ExponentCertificate, FLOOR_FACTOR, map_expansion_profile,
                        measure_expansion_profile)
from .maps import Rotation
from .measures import convex_combine
from .report import fmt, write_json
from . import verify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3


def _floor(exp):
    return float(exp.params.get("floor_factor", FLOOR_FACTOR))


def _verdict_of(reports):
    verdicts = [r.verdict for r in reports]
    if "fail" in verdicts:
        return "fail"
    return "pass" if "pass" in verdicts else "not-applicable"


def execute(exp):
    """Run one validated experiment; returns (payload, csv writers, summary dict)."""
    op = exp.operation
    files = {}
    summary = {"estimate": math.nan, "margin": math.nan, "verdict": "completed"}
    if op in ("exponent-map", "exponent-measure"):
        if op == "exponent-map":
            prof = map_expansion_profile(exp.map, exp.cloud, exp.grid("eps"), _floor(exp))
        else:
            prof = measure_expansion_profile(exp.map, exp.cloud, exp.measure(), exp.grid("eps"), _floor(exp))
        payload = prof.to_dict()
        files["csv"] = prof.to_csv
        summary["estimate"] = prof.estimate()
    elif op == "capacity":
        rep = capacity_estimate(exp.cloud, exp.measure(), exp.grid("beta"), exp.grid("delta"))
        payload, files["csv"] = rep.to_dict(), rep.to_csv
        summary["estimate"] = rep.estimate
    elif op == "entropy":
        rep = katok_entropy_estimate(exp.map, exp.cloud, exp.measure(), exp.grid("n"), exp.grid("gamma"),
                                     delta=float(exp.params.get("delta", 0.02)))
        payload, files["csv"] = rep.to_dict(), rep.to_csv
        summary["estimate"] = rep.estimate
    elif op == "block-entropy":
        rep = block_entropy_report(exp.cloud, exp.measure(), exp.grid("n"))
        payload, files["csv"] = rep.to_dict(), rep.to_csv
        summary["estimate"] = rep.limit
    else:
        reports = _verify(exp)
        payload = reports[0].to_dict() if len(reports) == 1 else {"reports": [r.to_dict() for r in reports]}
        summary["verdict"] = _verdict_of(reports)
        applicable = [r.margin for r in reports if r.verdict != "not-applicable"]
        summary["margin"] = min(applicable) if applicable else math.nan
        summary["estimate"] = _headline(reports[0])
    return payload, files, summary


def _headline(report):
    q = report.quantities
    for key in ("entropy", "min_E_mu", "E_map", "E_mix"):
        if key in q:
            return q[key]
    if q.get("decay_rates"):
        return min(q["decay_rates"])
    return math.nan


def _verify(exp):
    op, m, cloud, ff = exp.operation, exp.map, exp.cloud, _floor(exp)
    tol = exp.tolerances
    if op == "verify-A":
        return [verify.check_theorem_A(m, cloud, exp.family(), exp.grid("eps"),
                                       tolerance=float(tol.get("attainment", verify.ATTAINMENT_TOL)),
                                       floor_factor=ff)]
    if op == "verify-B":
        p = exp.params
        return [verify.check_theorem_B(m, cloud, exp.measure(), exp.grid("eps"), int(p.get("n_max", 18)),
                                       int(p.get("x_sample_count", 32)), seed=exp.seed, floor_factor=ff,
                                       rate_tol=float(tol.get("rate", verify.RATE_TOL)))]
    if op == "verify-C":
        return [verify.check_theorem_C(m, cloud, exp.measure(), exp.grid("eps"), exp.grid("beta"),
                                       exp.grid("delta"), exp.grid("n"), exp.grid("gamma"),
                                       delta=float(exp.params.get("delta", 0.02)),
                                       tolerance=float(tol.get("entropy", verify.ENTROPY_TOL)), floor_factor=ff)]
    if op == "verify-laws":
        mu, nu = exp.measure("mu"), exp.measure("nu", default="mu")
        t = float(exp.params.get("t", 0.5))
        out = [verify.check_convex_law(m, cloud, mu, nu, t, exp.grid("eps"), ff),
               verify.check_monotone_law(m, cloud, mu, convex_combine([(t, mu), (1 - t, nu)]),
                                         exp.grid("eps"), ff)]
        if isinstance(m, Rotation):
            out.append(verify.check_isometry_law(m, cloud, exp.grid("eps"), ff))
        return out
    if op == "contraction-chain":
        p = exp.params
        cert = ExponentCertificate(float(p["k"]), float(p["eps"]))
        return [verify.check_contraction_chain(m, cloud, cert, n, float(p["gamma"])) for n in exp.grid("n")]
    raise ConfigError("operation", f"unhandled operation {op!r}")


def run_experiment(exp):
    """Execute and write ``<out>/<name>.json`` (and ``.csv``); returns (exit code, summary)."""
    payload, files, summary = execute(exp)
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"name": exp.name, "operation": exp.operation, "seed": exp.seed, "result": payload}
    write_json(exp.out_dir / f"{exp.name}.json", doc)
    if "csv" in files:
        files["csv"](exp.out_dir / f"{exp.name}.csv")
    code = EXIT_FAIL if summary["verdict"] == "fail" else EXIT_OK
    return code, summary


def _classify(exc):
    if isinstance(exc, (ConfigError, StructuralError)):
        return EXIT_CONFIG
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    raise exc


def _load(path, seed=None, out=None):
    raw = cfgmod.load(path)
    return cfgmod.build(raw, seed=seed, out=out, base=Path(path).parent)


def cmd_run(args):
    try:
        exp = _load(args.config, args.seed, args.out)
        code, summary = run_experiment(exp)
    except (ConfigError, StructuralError, PreconditionError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return _classify(exc)
    print(f"{exp.name}: {exp.operation} {summary['verdict']} estimate={fmt(float(summary['estimate']))} "
          f"margin={fmt(float(summary['margin']))}")
    return code


def cmd_validate(args):
    try:
        exp = _load(args.config)
    except (ConfigError, StructuralError, PreconditionError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return _classify(exc)
    print(f"{args.config}: ok ({exp.operation}, {len(exp.cloud)} points)")
    return EXIT_OK


def _batch_one(job):
    raw, base, out, index = job
    start = time.perf_counter()
    name = str(raw.get("name", f"config{index}")) if isinstance(raw, dict) else f"config{index}"
    row = {"name": name, "operation": raw.get("operation", "") if isinstance(raw, dict) else "",
           "estimate": math.nan, "margin": math.nan, "verdict": "error", "exit_code": EXIT_CONFIG, "error": ""}
    try:
        if isinstance(raw, dict) and "name" not in raw:
            raw = dict(raw, name=name)
        exp = cfgmod.build(raw, out=out, base=base)
        code, summary = run_experiment(exp)
        row.update(summary, exit_code=code)
    except (ConfigError, StructuralError, PreconditionError) as exc:
        row.update(exit_code=_classify(exc), error=str(exc))
    row["wall_time"] = time.perf_counter() - start
    return row


def threads():
    n = int(os.environ.get("EXPANSE_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


SUMMARY_FIELDS = ["name", "operation", "estimate", "margin", "verdict", "exit_code", "wall_time", "error"]


def cmd_batch(args):
    path = Path(args.configs)
    try:
        raw = cfgmod.load(path)
        configs = cfgmod.expand_batch(raw, path.parent)
    except ConfigError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out
    if out is None and isinstance(raw, dict) and "out" in raw:
        out = path.parent / raw["out"]
    jobs = [(c, path.parent, out, i) for i, c in enumerate(configs)]
    workers = min(threads(), len(jobs)) or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_one, jobs))
    else:
        rows = [_batch_one(j) for j in jobs]
    summary = Path(args.summary) if args.summary else (Path(out) if out else path.parent / "out") / "summary.csv"
    summary.parent.mkdir(parents=True, exist_ok=True)
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([fmt(r[k]) if isinstance(r[k], float) else r[k] for k in SUMMARY_FIELDS])
    failed = sum(r["exit_code"] != EXIT_OK for r in rows)
    print(f"{len(rows)} configs, {failed} nonzero exits; summary at {summary}")
    return max((r["exit_code"] for r in rows), default=EXIT_OK)


def build_parser():
    ap = argparse.ArgumentParser(prog="expanse", description="Expansion exponents, capacity and entropy of measures.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("batch", help="run a list of configs and write a summary CSV")
    p.add_argument("configs")
    p.add_argument("--out", default=None)
    p.add_argument("--summary", default=None, help="summary CSV path (default <out>/summary.csv)")
    p.set_defaults(func=cmd_batch)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``crt-armor reconstruct | simulate | selftest``.

Exit codes: 0 success, 1 input error, 2 reconstruction failure (ambiguity,
no admissible cut, ...), 3 selftest failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from importlib import resources
from pathlib import Path

from .arbitrary import reconstruct_arbitrary
from .bounded import reconstruct_bounded
from .errors import InputError, ReconstructionError
from .mle import NoiseModel
from .modular import ResidueTable, validate_system

EXIT_OK, EXIT_INPUT, EXIT_RECONSTRUCT, EXIT_SELFTEST = 0, 1, 2, 3

PROBLEM_KEYS = {"N", "delta", "M", "K", "residue_sets", "variances", "q_range"}


def load_problem(path: str | Path):
    """Parse a problem file into ``(system, table, variances)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("problem file must hold a JSON object")
    unknown = set(doc) - PROBLEM_KEYS
    if unknown:
        warnings.warn(f"ignoring unknown problem keys: {sorted(unknown)}")
    missing = {"N", "delta", "M", "K", "residue_sets"} - set(doc)
    if missing:
        raise InputError(f"problem file lacks {sorted(missing)}")
    system = validate_system(doc["N"], doc["delta"], doc["M"], doc["K"], doc.get("q_range"))
    table = ResidueTable.build(doc["residue_sets"], system)
    variances = None
    if doc.get("variances") is not None:
        if len(doc["variances"]) != system.L:
            raise InputError(f"expected {system.L} variances, got {len(doc['variances'])}")
        variances = NoiseModel(tuple(float(v) for v in doc["variances"]))
    return system, table, variances


def _table_report(recs) -> str:
    lines = [f"{'i':>2} {'X':>10} {'q':>8} {'estimate':>12} {'cut':>4}  correspondence"]
    for i, r in enumerate(recs):
        corr = ",".join("-" if s is None else str(s) for s in r.slots)
        cut = "-" if r.cut is None else str(r.cut)
        lines.append(f"{i:>2} {r.X:>10} {r.q:>8} {r.estimate:>12.6f} {cut:>4}  {corr}")
    return "\n".join(lines)


def cmd_reconstruct(args) -> int:
    system, table, variances = load_problem(args.input)
    if args.bounded:
        recs = reconstruct_bounded(table, system)
    else:
        recs = reconstruct_arbitrary(table, system, use_pruning=not args.no_pruning,
                                     use_mle=args.mle, variances=variances)
    if args.json:
        doc = {"mode": "bounded" if args.bounded else "arbitrary",
               "integers": [r.to_dict() for r in recs]}
        print(json.dumps(doc))
    else:
        print(_table_report(recs))
    return EXIT_OK


def resolve_config(name: str) -> Path:
    """A config path, or the name of a bundled config (with or without ``.json``)."""
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("crt_armor") / "configs" / (name if name.endswith(".json") else name + ".json")
    if bundled.is_file():
        return Path(str(bundled))
    raise InputError(f"no config file or bundled config named {name!r}")


def cmd_simulate(args) -> int:
    from .plotting import plot_sweep
    from .sim import SimConfig, snr_sweep

    config = SimConfig.from_json(resolve_config(args.config))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["n_trials"] = args.trials
    if changes:
        config = config.with_(**changes)
    out = Path(args.out) if args.out else Path(Path(args.config).stem + ".csv")
    if not out.parent.is_dir():
        raise InputError(f"output directory {out.parent} does not exist")

    report = snr_sweep(config, workers=args.workers)
    report.write_csv(out)
    reports = {config.estimator: report}
    if args.compare:
        other = "plain_mean" if config.estimator == "mle" else "mle"
        reports[other] = snr_sweep(config.with_(estimator=other), workers=args.workers)
        reports[other].write_csv(out.with_name(f"{out.stem}_{other}.csv"))
    if not args.no_plot:
        plot_sweep(reports, out.with_suffix(".png"),
                   title=f"N={config.system.N}, K={config.system.K}, L={config.system.L}")

    print(f"{'snr_db':>8} {'sigma':>10} " + " ".join(f"{k:>11}" for k in reports))
    for rows in zip(*(r.rows for r in reports.values())):
        print(f"{rows[0].snr_db:>8.1f} {rows[0].sigma:>10.4f} "
              + " ".join(f"{r.success_rate:>11.4f}" for r in rows))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_selftest(args, decoder=None) -> int:
    from .selftest import run_selftest

    kwargs = {} if decoder is None else {"decoder": decoder}
    results = run_selftest(args.scale, seed=args.seed, **kwargs)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.passed}/{r.total}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crt-armor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct the integers of a problem file")
    p.add_argument("input", help="JSON problem file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--bounded", action="store_true", help="all errors below delta")
    mode.add_argument("--arbitrary", action="store_true",
                      help="tolerate arbitrarily corrupted residue sets (default)")
    p.add_argument("--mle", action="store_true", help="trim outliers and use the weighted MLE")
    p.add_argument("--no-pruning", action="store_true", help="try every admissible cut")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="machine-readable output")
    fmt.add_argument("--table", action="store_true", help="text table (default)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simulate", help="run an SNR sweep and write CSV plus a PNG figure")
    p.add_argument("config", help="config JSON path or bundled name (e.g. n2k4l6)")
    p.add_argument("--out", help="CSV path (default: <config>.csv)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=int, help="override trials per SNR point")
    p.add_argument("--workers", type=int, help="worker processes (default: $CRT_ARMOR_THREADS or 1)")
    p.add_argument("--compare", action="store_true", help="also run the other estimator")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", help="oracle-equivalence and invariant suites")
    p.add_argument("--scale", choices=("small", "full"), default="small")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ReconstructionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RECONSTRUCT


if __name__ == "__main__":
    sys.exit(main())

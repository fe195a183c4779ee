"""Command-line runner: ``sinai <experiment> [options]``.

Exit status is 0 when every check passes or is inconclusive, 2 when a
statistical check fails and 1 on a usage or configuration error.

CSV output (``--format csv``) has one row per estimate with columns
``experiment, params, point, ci_lo, ci_hi, level, n, discarded, master_seed,
version``; ``params`` is a compact JSON object.  ``--dump-samples PATH``
writes one CSV row per trial (columns are the union of the per-trial fields,
sorted by name).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .errors import AllDiscarded, SinaiError
from .experiments import EXPERIMENTS, LAWS, ExperimentConfig, run

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2
AGING_ETA = 0.5
ESTIMATE_COLUMNS = ("experiment", "params", "point", "ci_lo", "ci_hi", "level", "n", "discarded",
                    "master_seed", "version")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        v = float(text)
        if not v.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        return int(v)


def _list(conv):
    def parse(text):
        try:
            return [conv(x) for x in text.split(",") if x.strip()]
        except (ValueError, argparse.ArgumentTypeError):
            raise argparse.ArgumentTypeError(f"bad comma list: {text!r}")
    return parse


def _output_options(p):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--dump-samples", metavar="PATH", help="per-trial samples as CSV")
    p.add_argument("--workers", type=int, default=None, help="worker processes (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--trials", type=_int)
    common.add_argument("--seed", type=_int, help="64-bit master seed")
    common.add_argument("--level", type=float, help="confidence level of the intervals")
    _output_options(common)

    walk = _Parser(add_help=False)
    walk.add_argument("--n", type=_list(_int), help="comma list of walk lengths")
    walk.add_argument("--eta", type=float)
    walk.add_argument("--law", choices=("uniform-symmetric", "three-point"))
    walk.add_argument("--epsilon", type=float)
    walk.add_argument("--p", type=float)
    walk.add_argument("--lazy-weight", type=float)
    walk.add_argument("--mode", choices=("annealed", "quenched"))
    walk.add_argument("--walks-per-env", type=_int, help="walks sharing one environment in quenched mode")
    walk.add_argument("--sigma-scaling", action="store_true", default=None,
                      help="divide the potential by sigma_P before locating the valley bottom")

    brown = _Parser(add_help=False)
    brown.add_argument("--dt", type=float)

    parser = _Parser(prog="sinai", description="Monte Carlo experiments for Sinai's walk and its Brownian limit")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    sub.add_parser("localize", parents=[common, walk], help="localization near the valley bottom")
    p = sub.add_parser("aging-rwre", parents=[common, walk], help="two-time aging of the walk")
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p = sub.add_parser("aging-brownian", parents=[common, brown], help="two-time aging of the Brownian limit")
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--cross-check", type=_int, help="trials that also run the valley refinement")
    p = sub.add_parser("laws-check", parents=[common, brown], help="closed-form laws of the functionals")
    p.add_argument("--laws", type=_list(str), help=f"comma list from all, {', '.join(LAWS)}")
    p.add_argument("--gamma-h", type=_list(float))
    p = sub.add_parser("env-diagnose", parents=[common, brown], help="good-event frequencies over (J, delta)")
    p.add_argument("--J", type=_list(float), help="comma list, zipped with --delta")
    p.add_argument("--delta", type=_list(float))

    p = sub.add_parser("replay", help="re-run the configuration embedded in a report")
    p.add_argument("report")
    p.add_argument("--verify", action="store_true", help="exit 2 unless the new report equals the old one")
    _output_options(p)
    return parser


_NOT_CONFIG = {"experiment", "dump_samples", "report", "verify"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.experiment == "replay":
        with open(args.report) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh)["config"])
        for k in ("out", "format", "workers"):
            v = getattr(args, k)
            if v is not None:
                setattr(cfg, "out_path" if k == "out" else k, v)
        return cfg
    given = {k: v for k, v in vars(args).items() if v is not None and k not in _NOT_CONFIG}
    if args.experiment == "aging-rwre":
        given.setdefault("eta", AGING_ETA)
    if "out" in given:
        given["out_path"] = given.pop("out")
    return ExperimentConfig(experiment=args.experiment, **given)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def report_json(report: dict) -> str:
    public = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(public, sort_keys=True, indent=2, default=_default) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ESTIMATE_COLUMNS)
    for e in report["estimates"]:
        w.writerow([e["experiment"], json.dumps(e["params"], sort_keys=True, separators=(",", ":")),
                    repr(e["point"]), repr(e["ci"][0]), repr(e["ci"][1]), e["level"], e["n"],
                    e["discarded"], e["master_seed"], e["version"]])
    return buf.getvalue()


def samples_csv(rows: list) -> str:
    cols = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        report = run(config)
    except AllDiscarded as exc:
        print(f"sinai: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (SinaiError, ValueError, TypeError, OSError, KeyError) as exc:
        print(f"sinai: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = report_csv(report) if config.format == "csv" else report_json(report)
    try:
        _write(config.out_path, text)
        if args.dump_samples:
            _write(args.dump_samples, samples_csv(report.get("_samples", [])))
    except OSError as exc:
        print(f"sinai: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.experiment == "replay" and args.verify:
        with open(args.report) as fh:
            if fh.read() != report_json(report):
                print("sinai: replayed report differs from the original", file=sys.stderr)
                return EXIT_FAILED
    return EXIT_OK if report["passed"] else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    modelgrowth run --config study.toml --out results/
    modelgrowth forecast --config study.toml --jobs 4
    modelgrowth print-config --format json

Exit codes: 0 success, 1 some forecast exceeds the error threshold,
2 fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import ConfigError, default_document, dump_document, load_config, load_document, merged_document
from .pipeline import EXIT_FATAL, STAGES, run_stages

POLICY_FLAGS = {"max_error_pct": float, "horizon_days": int, "alpha": float, "short_steps": int}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--repo", help="repository or snapshot directory (overrides repo.root)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker threads")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--index", choices=("daily", "commits"), help="series index")
    p.add_argument("--min-revisions", type=int, dest="min_revisions",
                   help="drop models with fewer revisions")
    p.add_argument("--approaches", help="comma separated subset, e.g. HOLT,ARIMA")
    p.add_argument("--runs", type=int, help="networks averaged per ANN/LSTM forecast")
    p.add_argument("--pairwise", action="store_true", default=None,
                   help="add pairwise two-group tests to comparison.json")
    for name, typ in POLICY_FLAGS.items():
        p.add_argument(f"--policy.{name}", type=typ, dest=f"policy_{name}", metavar="X")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelgrowth", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"modelgrowth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("run", "all stages"),
                            ("mine", "list model revisions -> history.csv"),
                            ("measure", "LOC and block counts -> revisions.csv"),
                            ("forecast", "fit approaches -> forecasts.csv, fitted_models.json"),
                            ("evaluate", "score forecasts -> evaluation.csv"),
                            ("compare", "Kruskal-Wallis tests -> comparison.json")]:
        _common(sub.add_parser(name, help=help_text))
    pc = sub.add_parser("print-config", help="print the effective configuration")
    pc.add_argument("--config")
    pc.add_argument("--format", choices=("toml", "json"), default="toml")
    return parser


def overrides_from_args(args) -> dict:
    out = {}
    for key in ("out", "jobs", "seed", "index", "min_revisions"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "repo", None):
        out["repo.root"] = args.repo
    if getattr(args, "approaches", None):
        out["forecast.approaches"] = [a.strip() for a in args.approaches.split(",") if a.strip()]
    if getattr(args, "runs", None) is not None:
        out["forecast.runs"] = args.runs
    if getattr(args, "pairwise", None):
        out["compare.pairwise"] = True
    for name in POLICY_FLAGS:
        value = getattr(args, f"policy_{name}", None)
        if value is not None:
            out[f"policy.{name}"] = value
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "print-config":
        try:
            doc = merged_document(load_document(args.config)) if args.config else default_document()
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FATAL
        sys.stdout.write(dump_document(doc, args.format))
        return 0
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, overrides_from_args(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    stages = STAGES if args.command == "run" else (args.command,)
    manifest = run_stages(cfg, stages)
    if manifest.failed_stage:
        print(f"error: {manifest.failed_stage}: {manifest.reason}", file=sys.stderr)
    else:
        print(json.dumps({"stages": manifest.stages, "exit_code": manifest.exit_code,
                          "exclusions": len(manifest.exclusions), "out": str(cfg.out)}))
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())

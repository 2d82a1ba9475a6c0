"""Command-line entry point.

    smellwarn ingest REPORTS... --out WORK
    smellwarn analyze --out WORK
    smellwarn rank --out WORK
    smellwarn report --out WORK
    smellwarn synth --out CORPUS [--seed N] [--spec plant.json] [--projects K]

Settings resolve as command line > SMELLWARN_* environment > --config file
> defaults.  Exit codes: 0 ok, 2 configuration, 3 parse, 4 data sufficiency.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import CUTOFF_MODES, RANK_UNITS, load_config
from .errors import ConfigError, DataError, InvalidSpec, ParseError, SmellwarnError

log = logging.getLogger("smellwarn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_DATA = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="flat JSON file of settings")
    p.add_argument("--out", "-o", default=S, help="working/output directory")
    p.add_argument("--alpha", type=float, default=S, help="BH false discovery rate (default 0.05)")
    p.add_argument("--roots", dest="source_roots", default=S, help="comma-separated source roots stripped from paths")
    p.add_argument("--severity-map", default=S, help="JSON severity-map override")
    p.add_argument("--rho-moderate", type=float, default=S)
    p.add_argument("--rho-strong", type=float, default=S)
    p.add_argument("--cutoff-mode", choices=CUTOFF_MODES, default=S)
    p.add_argument("--rank-unit", choices=RANK_UNITS, default=S)
    p.add_argument("--rank-tools", default=S, help="comma-separated tools to rank (default: all)")
    p.add_argument("--p-combo", default=S, help='combination(s) for the P ranker, or "all" (default NCO)')
    p.add_argument("--min-pairs", type=int, default=S)
    p.add_argument("--jobs", "-j", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--deterministic", action="store_true", default=S, help="omit timestamps and versions from outputs")
    p.add_argument("--keep-going", action="store_true", default=S, help="skip unreadable reports instead of failing")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smellwarn", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse native reports into canonical dumps and package profiles")
    p.add_argument("inputs", nargs="*", default=argparse.SUPPRESS, help="report files or directories")
    _add_common(p)
    for name, help_ in [
        ("analyze", "correlation, co-occurrence, P scores and the H2/H3 batteries"),
        ("rank", "rankers, effort curves, Popt and the ranker comparison"),
        ("report", "human-readable summary and plot data"),
        ("run", "ingest, analyze, rank and report in one go"),
    ]:
        p = sub.add_parser(name, help=help_)
        if name == "run":
            p.add_argument("inputs", nargs="*", default=argparse.SUPPRESS)
        _add_common(p)

    p = sub.add_parser("synth", help="write a synthetic corpus with planted structure")
    _add_common(p)
    p.add_argument("--spec", default=None, help="JSON plant specification (default: built-in demo)")
    p.add_argument("--projects", type=int, default=1, help="number of projects (seeds seed, seed+1, ...)")
    p.add_argument("--packages", type=int, default=None, help="packages per project for the demo spec")
    return parser


_NON_CONFIG = {"command", "config", "verbose", "spec", "projects", "packages"}


def _synth(cfg, args) -> None:
    from .synth import PlantSpec, demo_spec, generate, write_corpus

    if args.spec:
        try:
            base = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read plant spec {args.spec}: {exc}") from exc
    out = Path(cfg.out)
    for i in range(args.projects):
        seed = cfg.seed + i
        if args.spec:
            spec = PlantSpec.from_dict({**base, "seed": seed})
        else:
            spec = demo_spec(seed, args.packages or 60)
        name = f"project{i + 1}"
        spec = dataclasses.replace(spec, package_prefix=f"{spec.package_prefix}.{name}")
        warnings, smells = generate(spec)
        write_corpus(warnings, smells, out / name, project=name, extra={"seed": seed, "spec": spec.to_dict()})
        log.info("wrote %s: %d warnings, %d smells", out / name, len(warnings), len(smells))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    given = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        cfg = load_config(given, args.config)
        from . import pipeline

        if args.command == "synth":
            _synth(cfg, args)
        elif args.command == "ingest":
            rep = pipeline.cmd_ingest(cfg)
            print(f"ingested {len(rep['files'])} files, {rep['packages']} packages; {len(rep['failed'])} failed")
            for f in rep["failed"]:
                print(f"  failed: {f['path']}: {f['error']}", file=sys.stderr)
        elif args.command == "analyze":
            summary = pipeline.cmd_analyze(cfg)
            for table, msg in summary["errors"].items():
                print(f"  {table}: {msg}", file=sys.stderr)
            print(f"analyzed {summary['packages']} packages; NCO fraction {summary['nco_fraction']:.2f}")
        elif args.command == "rank":
            res = pipeline.cmd_rank(cfg)
            print("popt: " + ", ".join(f"{k}={v:.3f}" for k, v in res["popt"].items()))
        elif args.command == "report":
            print(pipeline.cmd_report(cfg), end="")
        elif args.command == "run":
            pipeline.cmd_ingest(cfg)
            pipeline.cmd_analyze(cfg)
            pipeline.cmd_rank(cfg)
            print(pipeline.cmd_report(cfg), end="")
    except (ConfigError, InvalidSpec) as exc:
        print(f"smellwarn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"smellwarn: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DataError as exc:
        print(f"smellwarn: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SmellwarnError as exc:
        print(f"smellwarn: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

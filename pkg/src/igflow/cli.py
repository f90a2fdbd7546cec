"""Command-line experiment runner.

Subcommands:
  run   execute one experiment from a key=value config and/or --set overrides
  list  print the experiment catalog with parameter schemas

Outputs: a delimited table (tab separated, '.' decimal, header row) written
to <out>.tsv and echoed to stdout, a structured JSON record with full
metadata at <out>.json, and a diagnostic figure at <out>.png unless
--no-plot is given.  Exit codes: 0 success, 2 configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, parse_keyvalue_file
from .experiments import ExperimentConfig, catalog

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_RESERVED_KEYS = {"experiment", "out", "digits"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igflow",
        description="Distinguishability metrics, relevance spectra, and "
                    "renormalization-flow experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("experiment", nargs="?", default=None,
                       help="experiment name (may come from the config file)")
    run_p.add_argument("--config", type=Path, default=None,
                       help="key=value config file ('#' comments allowed)")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one parameter")
    run_p.add_argument("--out", type=str, default=None,
                       help="output stem or directory (default igflow-out/<name>)")
    run_p.add_argument("--digits", type=int, default=None,
                       help="significant digits in the delimited table (default 12)")
    run_p.add_argument("--no-plot", action="store_true",
                       help="skip the diagnostic figure")

    list_p = sub.add_parser("list", help="list experiments and their parameters")
    list_p.add_argument("--json", action="store_true", help="emit the catalog as JSON")
    return parser


def _collect_config(args) -> ExperimentConfig:
    raw: dict[str, str] = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file not found: {args.config}")
        raw.update(parse_keyvalue_file(args.config))
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()

    experiment = args.experiment or raw.pop("experiment", None)
    raw.pop("experiment", None)
    if not experiment:
        raise ConfigError("no experiment named on the command line or in the config")

    digits = args.digits
    if digits is None:
        try:
            digits = int(raw.pop("digits", 12))
        except ValueError:
            raise ConfigError("digits must be an integer") from None
    else:
        raw.pop("digits", None)

    out_raw = args.out if args.out is not None else raw.pop("out", None)
    raw.pop("out", None)
    if out_raw is None:
        out = Path("igflow-out") / experiment
    elif str(out_raw).endswith(("/", "\\")) or Path(out_raw).is_dir():
        out = Path(out_raw) / experiment
    else:
        out = Path(out_raw)
        if out.suffix in {".tsv", ".json", ".png"}:
            out = out.with_suffix("")

    params = {k: v for k, v in raw.items() if k not in _RESERVED_KEYS}
    return ExperimentConfig(experiment, params, out, digits)


def _cmd_run(args) -> int:
    config = _collect_config(args)
    out = Path(config.output_path)
    digits = config.precision
    table = config.run()
    table.metadata["digits"] = digits

    out.parent.mkdir(parents=True, exist_ok=True)
    text = table.to_delimited(digits=digits)
    tsv_path = out.with_suffix(".tsv")
    tsv_path.write_text(text)
    json_path = out.with_suffix(".json")
    json_path.write_text(json.dumps(table.to_record(digits), indent=2, sort_keys=True) + "\n")

    sys.stdout.write(text)
    written = [str(tsv_path), str(json_path)]
    if not args.no_plot:
        from .plotting import render_figure

        written.append(render_figure(table, config.experiment, out.with_suffix(".png")))
    print("wrote " + ", ".join(written), file=sys.stderr)
    return EXIT_OK


def _cmd_list(args) -> int:
    entries = catalog()
    if args.json:
        print(json.dumps(entries, indent=2, sort_keys=True))
        return EXIT_OK
    for entry in entries:
        print(f"{entry['name']}")
        print(f"    {entry['description']}")
        for pname, ps in entry["parameters"].items():
            default = "required" if ps["required"] else f"default {ps['default']}"
            help_text = f"  ({ps['help']})" if ps["help"] else ""
            print(f"    --set {pname}=<{ps['kind']}>  [{default}]{help_text}")
        print()
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_list(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

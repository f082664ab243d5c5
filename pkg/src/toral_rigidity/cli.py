"""Command-line front end: ``toral-rigidity <command> ...``; reports go to stdout as JSON."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .errors import ToralRigidityError
from .pipeline import (PRECISION_ENV, RunConfig, cmd_analyze, cmd_certify, cmd_chambers, cmd_conjugate,
                       cmd_fit, cmd_rigidity, diagnostic)

_FLAG_HELP = {
    "precision_bits": f"working precision in bits (default from ${PRECISION_ENV}, else 128)",
    "resolution": "grid points per axis, a power of two",
    "fixed_point_tol": "Franks-Manning stopping tolerance",
    "period_bound": "largest period in the periodic-orbit comparison",
    "epsilon": "scale applied to perturbation coefficients",
    "output": "write the JSON report (or the conjugacy grid prefix) here",
    "csv_output": "CSV side-channel (chambers or per-orbit exponents)",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = {"int": int, "float": float}.get(str(f.type).split(" ")[0], str)
        p.add_argument(flag, dest=f.name, type=kind, default=None, help=_FLAG_HELP.get(f.name))


def _config(args) -> RunConfig:
    given = {f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name) is not None}
    return RunConfig(**given)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toral-rigidity",
                                     description="Rigidity diagnostics for linear and perturbed toral actions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectral data, units, functionals, chambers and hypothesis verdicts")
    p.add_argument("matrix", help="matrix or generator-set text file")
    p = sub.add_parser("rigidity", help="compare a perturbed action with its linear model")
    p.add_argument("matrix", help="matrix or generator-set text file")
    p.add_argument("perturbation", help="perturbation file for the first generator")
    p = sub.add_parser("certify", help="uniform contraction/expansion certificates")
    p.add_argument("perturbation")
    p.add_argument("--bundle", choices=("stable", "unstable", "expanding"), default="stable")
    p = sub.add_parser("fit", help="fit power-law conjugacy forms to CSV samples")
    p.add_argument("samples", help="CSV with columns x,h or re,im,h_re,h_im")
    p.add_argument("--orientation", choices=("preserving", "reversing"), default=None)
    p = sub.add_parser("chambers", help="Weyl chambers as CSV (stdout) and JSON (--output)")
    p.add_argument("matrix")
    p = sub.add_parser("conjugate", help="solve for the conjugacy to the linear part")
    p.add_argument("perturbation")
    for sp in sub.choices.values():
        _add_config_flags(sp)
    return parser


def _emit(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        read = lambda name: Path(getattr(args, name)).read_text()  # noqa: E731
        if args.command == "analyze":
            report = cmd_analyze(read("matrix"), cfg)
        elif args.command == "rigidity":
            report, table = cmd_rigidity(read("matrix"), read("perturbation"), cfg)
            if cfg.csv_output:
                Path(cfg.csv_output).write_text(table)
        elif args.command == "certify":
            report = cmd_certify(read("perturbation"), args.bundle, cfg)
        elif args.command == "fit":
            report = cmd_fit(read("samples"), cfg, args.orientation)
        elif args.command == "chambers":
            report, table = cmd_chambers(read("matrix"), cfg)
            if cfg.csv_output:
                Path(cfg.csv_output).write_text(table)
            else:
                sys.stdout.write(table)
                if cfg.output:
                    Path(cfg.output).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
                return 1 if report["errors"] else 0
        else:
            report = cmd_conjugate(read("perturbation"), cfg)
            _emit(report, None)
            return 1 if report["errors"] else 0
    except (ToralRigidityError, ValueError, OSError) as exc:
        _emit({"command": args.command, "errors": [diagnostic(exc)]}, None)
        return 1
    _emit(report, cfg.output)
    return 1 if report["errors"] else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

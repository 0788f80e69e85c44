"""Command-line entry point: ``oscchain <scenario> [--config FILE] [--out DIR]``."""

from __future__ import annotations

import argparse
import copy
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import yaml

from .errors import ConfigError, OscChainError
from .persistence import DEFAULT_DOCUMENTS, CalibrationCache, parse_document, write_result
from .experiments import run_scenario

SUBCOMMANDS = {
    "quench": "quench",
    "ramp-scan": "ramp_scan",
    "decohere": "decohere",
    "channel": "channel",
    "falloff": "falloff",
    "calibrate": "calibrate",
}


def _load_document(kind: str, path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_DOCUMENTS[kind])
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML in {path}: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if doc.get("scenario") != kind:
        raise ConfigError(f"{path}: scenario '{doc.get('scenario')}' does not match subcommand '{kind}'")
    return doc


def _apply_overrides(doc: dict, args: argparse.Namespace) -> dict:
    time_doc = doc.setdefault("time", {})
    if args.dt is not None:
        time_doc["dt"] = args.dt
    if args.t_end is not None:
        time_doc["t_end"] = args.t_end
    if args.log_base is not None:
        doc["log_base"] = args.log_base
    if args.threads is not None:
        doc["threads"] = args.threads
    return doc


def _report(result, run_dir: Path) -> None:
    print(f"scenario: {result.config.kind.value}")
    for label, s in result.series.items():
        if len(result.series) > 12 and label != "main":
            continue
        onset = "none" if s.onset is None else f"{s.onset:.4f}"
        print(f"  [{label}] peak E_N = {s.peak_in(2):.6f} ebit ({s.peak_in(2.718281828459045):.6f} nat)"
              f" at t = {s.peak_time:.3f}; onset t0 = {onset}")
    for key, value in result.summary.items():
        if key in ("arrival_times", "first_maxima") or isinstance(value, (int, float, str)):
            print(f"  {key}: {value}")
        elif isinstance(value, dict):
            print(f"  {key}: " + ", ".join(f"{k}={v}" for k, v in value.items()))
    print(f"output: {run_dir}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario file (built-in defaults otherwise)")
    common.add_argument("--out", default="runs", help="output root directory (default: runs)")
    common.add_argument("--dt", type=float, help="RK4 step for ramped couplings")
    common.add_argument("--t-end", type=float, help="simulation horizon in units of 1/omega")
    common.add_argument("--log-base", choices=["2", "e"], help="logarithm base of E_N")
    common.add_argument("--threads", type=int, help="worker threads for independent scan points")

    parser = argparse.ArgumentParser(prog="oscchain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} scenario")
    sub.add_parser("validate", help="run the invariant suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            from .validation import run_checks

            checks = run_checks()
            for c in checks:
                print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
            return 0 if all(c.passed for c in checks) else 3

        kind = SUBCOMMANDS[args.command]
        doc = _apply_overrides(_load_document(kind, args.config), args)
        cfg = parse_document(doc)
        cache = CalibrationCache(Path(args.out) / "calibration_cache.json")
        started = datetime.now(timezone.utc)
        tic = time.perf_counter()
        result = run_scenario(cfg, cache)
        run_dir = write_result(result, args.out, started, time.perf_counter() - tic)
        _report(result, run_dir)
        return 0
    except OscChainError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())

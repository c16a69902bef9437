"""Command-line entry point: ``qergodic run`` and ``qergodic verify``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, QergodicError
from .report import emit_report
from .scenarios import SCENARIOS, ScenarioConfig, run_scenario


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qergodic", description="Ergodic preparation and weak-value identity checks")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and emit a report")
    run.add_argument("--config", help="ScenarioConfig JSON file; flags override its fields")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--dim", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--slit", type=int, help="slit index for single-slit")
    run.add_argument("--kappa", type=float, help="meter coupling")
    run.add_argument("--sigma-x", type=float, help="meter position spread")
    run.add_argument("--grid", type=int, help="meter grid size (default: auto)")
    run.add_argument("--half-width", type=float, help="meter half-width L (default: auto)")
    _output_args(run)

    ver = sub.add_parser("verify", help="run the identity suite")
    ver.add_argument("--dim-max", type=int, default=8)
    ver.add_argument("--seeds", type=int, default=5)
    ver.add_argument("--tol-scale", type=float, default=1.0)
    ver.add_argument("--seed", type=int, default=42)
    ver.add_argument("--mc-samples", type=int, default=10_000)
    _output_args(ver)
    return ap


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall-clock duration (JSON only)")


def _run_config(args) -> ScenarioConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    for key in ("scenario", "dim", "seed", "slit", "out"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    meter_flags = {"kappa": args.kappa, "sigma_x": args.sigma_x, "n": args.grid, "L": args.half_width}
    if any(v is not None for v in meter_flags.values()):
        meter = dict(data.get("meter") or {})
        meter.update({k: v for k, v in meter_flags.items() if v is not None})
        data["meter"] = meter
    return ScenarioConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _run_config(args)
        else:
            config = ScenarioConfig(
                "identity-suite", seed=args.seed, dim_max=args.dim_max, seeds=args.seeds,
                tol_scale=args.tol_scale, mc_samples=args.mc_samples, out=args.out,
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_scenario(config)
    except QergodicError as exc:
        # e.g. a meter grid too small for the coupling
        print(f"invalid run: {exc}", file=sys.stderr)
        return 2
    try:
        text = emit_report(report, args.format, config.out, include_timing=args.timing)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return 3
    if config.out is None:
        sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())

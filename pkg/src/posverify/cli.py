"""Command line front end: calibrate theta tables, run experiments, sweep n0."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .adversary import FakingSearchConfig, Region
from .calibration import estimate_theta_table, table_to_dict
from .channel import SignalParams
from .experiment import (
    NOISE_MODES,
    PRESETS,
    ExperimentConfig,
    NoiseMode,
    emit_report,
    load_config,
    run_experiment,
)


def _build_region(width: float, height: float) -> Region:
    return Region(0.0, float(width), 0.0, float(height))


def _faking_config(args, region: Region) -> FakingSearchConfig:
    diag = region.diagonal
    radius = args.exclusion_radius if args.exclusion_radius is not None else 0.2 * diag
    step = args.grid_step if args.grid_step is not None else diag / 30.0
    return FakingSearchConfig(radius, step, args.refine_iters)


def _noise_mode(args) -> NoiseMode:
    if args.noise_mode == "explicit":
        if args.sigma is None:
            raise ValueError("--noise-mode explicit requires --sigma")
        return NoiseMode("explicit", args.sigma)
    if args.sigma is not None:
        raise ValueError("--sigma only applies to --noise-mode explicit")
    return NoiseMode(args.noise_mode)


def _cmd_theta(args) -> int:
    region = _build_region(*args.region)
    signal = SignalParams(
        transmit_power=args.transmit_power,
        wavelength=args.wavelength,
        path_loss_exponent=args.path_loss_exponent,
    )
    config = ExperimentConfig(
        n=args.n,
        n0=max(2, args.n // 2),
        region=region,
        signal=signal,
        noise_mode=_noise_mode(args),
        faking=_faking_config(args, region),
        seed=args.seed,
    )
    num_x0, num_sets = args.samples
    table = estimate_theta_table(
        config.resolved_signal(),
        region,
        args.n,
        num_x0,
        num_sets,
        config.faking,
        seed=args.seed,
        workers=args.workers,
    )
    out = Path(args.out)
    out.write_text(json.dumps(table_to_dict(table), sort_keys=True, indent=2) + "\n")
    print(f"theta_star={table.theta_star} samples={len(table.samples)} -> {out}")
    return 0


def _base_config(args) -> ExperimentConfig:
    if args.config is not None:
        return load_config(args.config)
    return PRESETS[args.preset]


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_run(args) -> int:
    config = _apply_overrides(_base_config(args), args)
    report = run_experiment(config, workers=args.workers)
    print(
        f"n={config.n} n0={config.n0} filter={config.filter_mode} "
        f"theta_star={report.theta_star} trials={config.trials} "
        f"success_rate={report.success_rate:.3f} "
        f"mean_genuine_retained={report.mean_genuine_retained:.2f} "
        f"mean_passes={report.mean_rounds:.2f}"
    )
    if args.report is not None:
        emit_report(report, args.format, args.report)
        print(f"report -> {args.report}")
    return 0


def _parse_span(text: str) -> range:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad span {text!r}, want lo:hi or lo:hi:step")
    lo, hi = int(parts[0]), int(parts[1])
    step = int(parts[2]) if len(parts) == 3 else 1
    if step < 1 or hi < lo:
        raise ValueError(f"bad span {text!r}")
    return range(lo, hi + 1, step)


def _cmd_sweep(args) -> int:
    base = _apply_overrides(_base_config(args), args)
    rows = []
    for n0 in _parse_span(args.n0):
        report = run_experiment(replace(base, n0=n0), workers=args.workers)
        rows.append(
            {
                "n0": n0,
                "success_rate": report.success_rate,
                "mean_genuine_retained": report.mean_genuine_retained,
                "mean_passes": report.mean_rounds,
            }
        )
        print(
            f"n0={n0}: success_rate={report.success_rate:.3f} "
            f"mean_genuine_retained={report.mean_genuine_retained:.2f}"
        )
    if args.report is not None:
        path = Path(args.report)
        try:
            if args.format == "json":
                path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
            else:
                with open(path, "w", newline="") as fh:
                    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
                    writer.writeheader()
                    writer.writerows(rows)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        print(f"report -> {path}")
    return 0


def _add_signal_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--transmit-power", type=float, default=1.0)
    sub.add_argument("--wavelength", type=float, default=0.125)
    sub.add_argument("--path-loss-exponent", type=float, default=2.0)
    sub.add_argument("--exclusion-radius", type=float, default=None)
    sub.add_argument("--grid-step", type=float, default=None)
    sub.add_argument("--refine-iters", type=int, default=25)


def _add_source_flags(sub: argparse.ArgumentParser) -> None:
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment config JSON")
    src.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_argument("--trials", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--report", help="write a report file")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posverify",
        description="Position verification for wireless sensor networks: "
        "calibrate the deception allowance, run filtering experiments, "
        "and sweep the genuine-node count.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    theta = commands.add_parser("theta", help="calibrate a theta table and save it")
    theta.add_argument("--n", type=int, required=True)
    theta.add_argument("--region", type=float, nargs=2, metavar=("W", "H"), default=(100.0, 100.0))
    theta.add_argument("--noise-mode", choices=NOISE_MODES, default="significant")
    theta.add_argument("--sigma", type=float, default=None)
    theta.add_argument("--samples", type=int, nargs=2, metavar=("X0", "SETS"), default=(25, 20))
    theta.add_argument("--seed", type=int, default=0)
    theta.add_argument("--workers", type=int, default=1)
    theta.add_argument("--out", required=True)
    _add_signal_flags(theta)
    theta.set_defaults(func=_cmd_theta)

    run = commands.add_parser("run", help="run one experiment")
    _add_source_flags(run)
    run.set_defaults(func=_cmd_run)

    sweep = commands.add_parser("sweep", help="run an experiment per n0 value")
    _add_source_flags(sweep)
    sweep.add_argument("--n0", required=True, help="span lo:hi or lo:hi:step")
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: parse experiment configs, run the engine, serialize results.

Subcommands
-----------
ser         SER sweep over an SNR grid.
floor       Error-floor sweep over antennas or correlation at a fixed SNR.
outage      Outage probability over channel realizations, plus the
            norm-vs-conditional-SER scatter data.
validate    Estimator/bound oracle report (JSON).
thresholds  Print the Gaussian decision thresholds for inspection.

SNR values are taken in dB (grids as ``start:step:stop`` or comma lists) and
converted to linear scale internally.  All randomness flows from ``--seed``,
which is mandatory.  Exit codes: 0 success, 2 usage/config error, 1 runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time


from . import __version__
from .errors import ParameterError, QuadetError
from .quadform import build_bque, build_ed, build_hsnr, build_qmmse
from .constellation import uniform_ask
from .detect import analytic_ser, compute_thresholds
from .sim import (
    DETECTOR_NAMES,
    ExperimentSpec,
    OutageResult,
    OutageSpec,
    SerResult,
    run_estimator_validation,
    run_outage,
    run_ser,
    spectrum_for,
)

SER_COLUMNS = ("detector", "snr_db", "n", "rho", "m", "trials", "errors", "ser", "stderr", "analytic_ser")
OUTAGE_COLUMNS = (
    "detector", "zeta", "snr_db", "n", "rho", "m", "n_channels", "inner_trials", "p_out", "stderr",
)
SCATTER_COLUMNS = ("detector", "snr_db", "n", "rho", "m", "h_norm_sq", "cond_ser")


class UsageError(Exception):
    """Invalid flag combination or parameter; maps to exit code 2."""


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:step:stop`` (inclusive) or a comma list or a single value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:step:stop, got {text!r}")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError as exc:
            raise UsageError(f"non-numeric grid {text!r}") from exc
        if step <= 0 or stop < start:
            raise UsageError(f"grid {text!r} must have step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        values = tuple(start + k * step for k in range(count) if start + k * step <= stop + 1e-9)
        return values
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise UsageError(f"non-numeric grid {text!r}") from exc


def parse_detectors(text: str) -> tuple[str, ...]:
    names = tuple(p.strip().lower() for p in text.split(",") if p.strip())
    unknown = [d for d in names if d not in DETECTOR_NAMES]
    if unknown:
        raise UsageError(f"unknown detectors {unknown}; choose from {','.join(DETECTOR_NAMES)}")
    if not names:
        raise UsageError("at least one detector is required")
    return names


def resolve_threads(value: str | None) -> int:
    if value is None:
        value = os.environ.get("QUADET_THREADS", "auto")
    if value == "auto":
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError as exc:
        raise UsageError(f"--threads must be an integer or 'auto', got {value!r}") from exc
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    return threads


def load_config_args(path: str) -> list[str]:
    """Turn a flat ``key = value`` file into a CLI argument prefix."""
    args: list[str] = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                args.extend([f"--{key.replace('_', '-')}", value])
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return args


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # Plain-float repr: numpy scalars would otherwise print their type.
        return repr(float(value))
    return str(value)


def ser_rows(result: SerResult) -> list[dict]:
    return [
        {
            "detector": p.detector,
            "snr_db": p.snr_db,
            "n": p.n,
            "rho": p.rho,
            "m": p.m,
            "trials": p.trials,
            "errors": p.errors,
            "ser": p.ser,
            "stderr": p.stderr,
            "analytic_ser": p.analytic_ser,
        }
        for p in result.points
    ]


def outage_rows(result: OutageResult) -> tuple[list[dict], list[dict]]:
    curves: list[dict] = []
    scatter: list[dict] = []
    for p in result.points:
        for zeta, pout, se in zip(p.zetas, p.p_out, p.stderr):
            curves.append(
                {
                    "detector": p.detector,
                    "zeta": zeta,
                    "snr_db": p.snr_db,
                    "n": p.n,
                    "rho": p.rho,
                    "m": p.m,
                    "n_channels": p.n_channels,
                    "inner_trials": p.inner_trials,
                    "p_out": float(pout),
                    "stderr": float(se),
                }
            )
        for norm, cond in zip(p.channel_norms, p.cond_ser):
            scatter.append(
                {
                    "detector": p.detector,
                    "snr_db": p.snr_db,
                    "n": p.n,
                    "rho": p.rho,
                    "m": p.m,
                    "h_norm_sq": float(norm),
                    "cond_ser": float(cond),
                }
            )
    return curves, scatter


def write_csv(path: str, columns: tuple[str, ...], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_json(path: str, meta: dict, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"meta": meta, **payload}, fh, indent=2)
        fh.write("\n")


def _meta(args: argparse.Namespace, wall_time: float) -> dict:
    return {
        "seed": args.seed,
        "version": __version__,
        "wall_time_s": wall_time,
        "command": " ".join(sys.argv[1:]) if sys.argv else "",
    }


def _resolve_format(args: argparse.Namespace) -> str:
    fmt = getattr(args, "format", None)
    if fmt:
        return fmt
    out = args.out
    if out.endswith(".csv"):
        return "csv"
    if out.endswith(".json"):
        return "json"
    raise UsageError("cannot infer output format; pass --format csv|json or use a .csv/.json path")


def _add_common(parser: argparse.ArgumentParser, trials: bool = True) -> None:
    parser.add_argument("--seed", type=int, required=True, help="master RNG seed (mandatory)")
    parser.add_argument("--out", required=True, help="output file path")
    parser.add_argument("--format", choices=["csv", "json"], help="output format (default: from extension)")
    parser.add_argument("--threads", default=None, help="worker threads, or 'auto' (env QUADET_THREADS)")
    parser.add_argument("--detectors", default="ed,bque,qmmse,ml", help="comma list of detectors")
    parser.add_argument("--mod", type=int, default=8, help="constellation order M")
    if trials:
        parser.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials per point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadet", description=__doc__, add_help=True)
    parser.add_argument("--config", help="flat key=value file providing default flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ser = sub.add_parser("ser", help="SER sweep over SNR")
    _add_common(p_ser)
    p_ser.add_argument("--n", type=int, default=128, help="number of antennas")
    p_ser.add_argument("--rho", type=float, default=0.7, help="channel correlation coefficient")
    p_ser.add_argument("--snr-db", default="-10:2:30", help="SNR grid in dB (start:step:stop or comma list)")

    p_floor = sub.add_parser("floor", help="error-floor sweep over N or rho at fixed SNR")
    _add_common(p_floor)
    p_floor.add_argument("--n", type=int, default=512, help="antennas (fixed when sweeping rho)")
    p_floor.add_argument("--rho", type=float, default=0.7, help="correlation (fixed when sweeping N)")
    p_floor.add_argument("--n-grid", help="antenna grid (comma list)")
    p_floor.add_argument("--rho-grid", help="correlation grid (comma list)")
    p_floor.add_argument("--snr-db", default="30", help="floor SNR in dB (single value)")

    p_out = sub.add_parser("outage", help="outage probability over channel realizations")
    _add_common(p_out, trials=False)
    p_out.add_argument("--n", type=int, default=64)
    p_out.add_argument("--n-grid", help="antenna grid (comma list) for hardening sweeps")
    p_out.add_argument("--rho", type=float, default=0.7)
    p_out.add_argument("--snr-db", default="10", help="single SNR in dB")
    p_out.add_argument("--zeta-grid", default="0.001,0.003,0.01,0.03,0.1,0.3", help="SER thresholds")
    p_out.add_argument("--n-channels", type=int, default=500)
    p_out.add_argument("--inner-trials", type=int, default=20_000)

    p_val = sub.add_parser("validate", help="estimator/bound oracle report")
    p_val.add_argument("--seed", type=int, required=True)
    p_val.add_argument("--out", required=True)
    p_val.add_argument("--n", type=int, default=64)
    p_val.add_argument("--rho", type=float, default=0.7)
    p_val.add_argument("--snr-db", default="10")
    p_val.add_argument("--mod", type=int, default=8)
    p_val.add_argument("--trials", type=int, default=200_000)
    p_val.add_argument("--clt-n-grid", default="16,64,256,1024")

    p_thr = sub.add_parser("thresholds", help="print decision thresholds")
    p_thr.add_argument("--n", type=int, default=128)
    p_thr.add_argument("--rho", type=float, default=0.7)
    p_thr.add_argument("--mod", type=int, default=8)
    p_thr.add_argument("--snr-db", default="10", help="single SNR in dB")
    p_thr.add_argument("--detectors", default="ed,hsnr,bque,qmmse")
    return parser


def _single(grid: tuple[float, ...], flag: str) -> float:
    if len(grid) != 1:
        raise UsageError(f"{flag} must be a single value here, got {len(grid)} values")
    return grid[0]


def _cmd_ser(args: argparse.Namespace) -> int:
    spec = ExperimentSpec(
        sweep="snr_grid",
        detectors=parse_detectors(args.detectors),
        n_antennas=args.n,
        rho=args.rho,
        mod_order=args.mod,
        snr_db=parse_grid(args.snr_db),
        trials=args.trials,
        seed=args.seed,
        threads=resolve_threads(args.threads),
    )
    started = time.perf_counter()
    result = run_ser(spec)
    _emit_ser(args, result, time.perf_counter() - started)
    return 0


def _cmd_floor(args: argparse.Namespace) -> int:
    if (args.n_grid is None) == (args.rho_grid is None):
        raise UsageError("floor needs exactly one of --n-grid or --rho-grid")
    snr_db = _single(parse_grid(args.snr_db), "--snr-db")
    if args.n_grid is not None:
        sweep = "antenna_grid"
        n_antennas: object = tuple(int(v) for v in parse_grid(args.n_grid))
        rho: object = args.rho
    else:
        sweep = "rho_grid"
        n_antennas = args.n
        rho = parse_grid(args.rho_grid)
    spec = ExperimentSpec(
        sweep=sweep,
        detectors=parse_detectors(args.detectors),
        n_antennas=n_antennas,
        rho=rho,
        mod_order=args.mod,
        snr_db=snr_db,
        trials=args.trials,
        seed=args.seed,
        threads=resolve_threads(args.threads),
    )
    started = time.perf_counter()
    result = run_ser(spec)
    _emit_ser(args, result, time.perf_counter() - started)
    return 0


def _emit_ser(args: argparse.Namespace, result: SerResult, wall: float) -> None:
    rows = ser_rows(result)
    if _resolve_format(args) == "csv":
        write_csv(args.out, SER_COLUMNS, rows)
    else:
        write_json(args.out, _meta(args, wall), {"rows": rows})


def _cmd_outage(args: argparse.Namespace) -> int:
    if args.n_grid is not None:
        sweep = "antenna_grid"
        n_antennas: object = tuple(int(v) for v in parse_grid(args.n_grid))
    else:
        sweep = "snr_grid"
        n_antennas = args.n
    spec = ExperimentSpec(
        sweep=sweep,
        detectors=parse_detectors(args.detectors),
        n_antennas=n_antennas,
        rho=args.rho,
        mod_order=args.mod,
        snr_db=_single(parse_grid(args.snr_db), "--snr-db"),
        trials=1,
        seed=args.seed,
        threads=resolve_threads(args.threads),
        outage=OutageSpec(
            zeta_grid=parse_grid(args.zeta_grid),
            n_channels=args.n_channels,
            inner_trials=args.inner_trials,
        ),
    )
    started = time.perf_counter()
    result = run_outage(spec)
    wall = time.perf_counter() - started
    curves, scatter = outage_rows(result)
    warnings = sorted({w for p in result.points for w in p.warnings})
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if _resolve_format(args) == "csv":
        write_csv(args.out, OUTAGE_COLUMNS, curves)
        stem, ext = os.path.splitext(args.out)
        write_csv(f"{stem}_scatter{ext}", SCATTER_COLUMNS, scatter)
    else:
        write_json(
            args.out,
            _meta(args, wall),
            {"rows": curves, "scatter": scatter, "warnings": warnings},
        )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    spec = ExperimentSpec(
        sweep="snr_grid",
        detectors=("ed",),
        n_antennas=args.n,
        rho=args.rho,
        mod_order=args.mod,
        snr_db=_single(parse_grid(args.snr_db), "--snr-db"),
        trials=args.trials,
        seed=args.seed,
    )
    clt_grid = tuple(int(v) for v in parse_grid(args.clt_n_grid))
    started = time.perf_counter()
    report = run_estimator_validation(spec, clt_n_grid=clt_grid)
    write_json(args.out, _meta(args, time.perf_counter() - started), {"report": report})
    return 0


def _cmd_thresholds(args: argparse.Namespace) -> int:
    snr_db = _single(parse_grid(args.snr_db), "--snr-db")
    constellation = uniform_ask(args.mod)
    spectrum = spectrum_for(args.n, args.rho, snr_db)
    builders = {
        "ed": lambda: build_ed(spectrum),
        "hsnr": lambda: build_hsnr(spectrum),
        "qmmse": lambda: build_qmmse(spectrum, constellation.energy_variance),
    }
    print(f"# n={args.n} rho={args.rho} m={args.mod} snr_db={snr_db}")
    for name in parse_detectors(args.detectors):
        if name == "bque":
            for i, eps in enumerate(constellation.energies, 1):
                est = build_bque(spectrum, float(eps))
                taus = compute_thresholds(est, spectrum, constellation)
                print(f"bque[eps_{i}={eps:.6g}]: " + " ".join(f"{t:.9g}" for t in taus.taus))
            continue
        if name not in builders:
            raise UsageError(f"thresholds are undefined for detector {name!r}")
        est = builders[name]()
        taus = compute_thresholds(est, spectrum, constellation)
        total, _ = analytic_ser(est, spectrum, constellation, taus)
        print(f"{name}: " + " ".join(f"{t:.9g}" for t in taus.taus) + f"  (analytic_ser={total:.6g})")
    return 0


_COMMANDS = {
    "ser": _cmd_ser,
    "floor": _cmd_floor,
    "outage": _cmd_outage,
    "validate": _cmd_validate,
    "thresholds": _cmd_thresholds,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # A config file supplies defaults; explicit flags win because they
        # come later in the argument list.
        if "--config" in argv:
            idx = argv.index("--config")
            if idx + 1 >= len(argv):
                raise UsageError("--config needs a path")
            config_args = load_config_args(argv[idx + 1])
            command = argv[0] if argv and not argv[0].startswith("-") else None
            rest = [a for i, a in enumerate(argv) if i not in (idx, idx + 1) and i != 0]
            if command is None:
                raise UsageError("--config requires a subcommand")
            argv = [command, *config_args, *rest]
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QuadetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

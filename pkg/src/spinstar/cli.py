"""Command-line batch runner.

Subcommands: spectrum, estimate, sweep, compile, oracle-check.  Exit codes:
0 success, 1 configuration error, 2 numerical or consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import compiler as cp
from . import crosscheck
from . import experiment as ex
from . import oracle
from . import spectro as sp
from . import svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

# flag name -> RunConfig field
_OVERRIDES = {
    "preset": "preset", "seed": "seed", "out": "out", "pulses": "pulses",
    "sequence": "sequence", "priming": "priming", "delay": "delay", "b0": "b0",
    "delta_h": "delta_h", "delta_si": "delta_si", "workers": "workers",
    "readout": "readout", "noise_sigma": "noise_sigma", "experiment": "experiment",
    "phase_cycle": "phase_cycle",
}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--preset", choices=("tms", "tmp"))
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="output directory")
    p.add_argument("--pulses", choices=cp.PULSE_MODELS)
    p.add_argument("--sequence", choices=("original", "a", "b"))
    p.add_argument("--priming", type=_bool, metavar="BOOL")
    p.add_argument("--delay", type=float, metavar="SECONDS")
    p.add_argument("--b0", type=float, metavar="TESLA")
    p.add_argument("--delta-h", type=float, metavar="HZ")
    p.add_argument("--delta-si", type=float, metavar="HZ")
    p.add_argument("--workers", type=int)
    p.add_argument("--readout", choices=ex.READOUTS)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--phase-cycle", type=_bool, metavar="BOOL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinstar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="simulate and process one spectrum")
    _common(p)
    p.add_argument("--experiment", choices=ex.EXPERIMENTS)

    p = sub.add_parser("estimate", help="field estimate from one field run")
    _common(p)
    p.add_argument("--fail-on-degraded", action="store_true")

    p = sub.add_parser("sweep", help="estimates over a range of one parameter")
    _common(p)
    p.add_argument("--axis", choices=ex.SWEEP_AXES)
    p.add_argument("--values", help="comma separated values")
    p.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "NUM"),
                   help="evenly spaced values, endpoints included")

    p = sub.add_parser("compile", help="write the compiled pulse program")
    _common(p)

    p = sub.add_parser("oracle-check", help="compare the sector engine with the full-space oracle")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=_u64, default=0)
    return parser


def config_from_args(args: argparse.Namespace) -> ex.RunConfig:
    data = {}
    if getattr(args, "config", None):
        cfg = ex.RunConfig.load(args.config)
        data = cfg.to_dict()
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    if getattr(args, "fail_on_degraded", False):
        data["fail_on_degraded"] = True
    if getattr(args, "axis", None):
        data["sweep_axis"] = args.axis
    if getattr(args, "values", None):
        try:
            data["sweep_values"] = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ex.ConfigError(f"sweep_values: {exc}") from exc
    if getattr(args, "range", None):
        start, stop, num = args.range
        if num < 2 or num != int(num):
            raise ex.ConfigError("sweep_values: --range needs an integer count >= 2")
        num = int(num)
        data["sweep_values"] = [start + (stop - start) * i / (num - 1) for i in range(num)]
    return ex.RunConfig.from_dict(data)


def _outdir(cfg: ex.RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _write_config(out: Path, cfg: ex.RunConfig) -> None:
    # execution-only settings are left out so outputs do not depend on them
    data = {k: v for k, v in cfg.to_dict().items() if k not in ("out", "workers")}
    (out / "config.json").write_text(json.dumps(data, indent=2) + "\n")


def cmd_spectrum(cfg: ex.RunConfig) -> int:
    if cfg.readout != "spectral":
        raise ex.ConfigError("readout: the spectrum command needs spectral readout")
    res = ex.run_spectrum(cfg)
    out = _outdir(cfg)
    _write_config(out, cfg)
    sp.write_spectrum_csv(out / "spectrum.csv", res.spectrum)
    sp.write_peaks_csv(out / "peaks.csv", res.peaks)
    svg.plot_csv(out / "spectrum.csv", out / "spectrum.svg", "freq_hz", ["re"],
                 xlabel="frequency offset (Hz)", ylabel="signal (real part)",
                 title=f"{cfg.experiment} spectrum")
    print(f"wrote {out / 'spectrum.csv'}, {out / 'peaks.csv'}, {out / 'spectrum.svg'}")
    return EXIT_OK


def write_estimate(out: Path, result: ex.EstimateResult) -> None:
    est = result.estimate
    (out / "estimate.json").write_text(json.dumps(est.to_dict(), indent=2) + "\n")
    with open(out / "per_peak.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "coefficient_hz_per_t", "phase_rad", "k", "weight", "b0_tesla", "sigma_tesla"])
        for r in est.peaks:
            w.writerow([r.ell, _g(r.coefficient), _g(r.phase), r.k, _g(r.weight), _g(r.b0), _g(r.sigma)])


def cmd_estimate(cfg: ex.RunConfig) -> int:
    try:
        result = ex.run_estimate(cfg)
    except ex.ConfigError:
        raise
    except ValueError as exc:
        print(f"error: estimation failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = _outdir(cfg)
    _write_config(out, cfg)
    write_estimate(out, result)
    svg.plot_csv(out / "per_peak.csv", out / "per_peak.svg", "ell", ["b0_tesla"], xlabel="lopsidedness",
                 ylabel="field estimate (nT)", title="per-line field estimates", style="scatter",
                 scale={"b0_tesla": 1e9})
    est = result.estimate
    print(f"B0 = {est.b0:.6e} T +- {est.sigma:.3e} T  flags={','.join(est.flags) or 'none'}")
    if est.degraded and cfg.fail_on_degraded:
        print("error: estimate flagged degraded", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(cfg: ex.RunConfig) -> int:
    points = ex.run_sweep(cfg, cfg.sweep_axis, cfg.sweep_values)
    out = _outdir(cfg)
    _write_config(out, cfg)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "b0_tesla", "sigma_tesla", "flags"])
        for p in points:
            if p.result is None:
                w.writerow([_g(p.value), "nan", "nan", f"error={p.error}"])
            else:
                e = p.result.estimate
                w.writerow([_g(p.value), _g(e.b0), _g(e.sigma), ";".join(e.flags)])
    svg.plot_csv(out / "sweep.csv", out / "sweep.svg", "value", ["b0_tesla"], xlabel=cfg.sweep_axis,
                 ylabel="field estimate (nT)", title=f"sweep over {cfg.sweep_axis}",
                 scale={"b0_tesla": 1e9})
    failed = sum(p.result is None for p in points)
    print(f"wrote {out / 'sweep.csv'} ({len(points)} points, {failed} failed)")
    return EXIT_NUMERIC if failed == len(points) else EXIT_OK


def cmd_compile(cfg: ex.RunConfig) -> int:
    program = ex.Experiment(cfg).program()
    out = _outdir(cfg)
    path = out / "program.txt"
    path.write_text(program.to_text())
    print(f"wrote {path} ({len(program.primitives)} primitives, "
          f"{program.total_duration:.9g} s)")
    return EXIT_OK


def cmd_oracle_check(n: int, trials: int, seed: int) -> int:
    if trials == 0:
        print("warning: 0 trials requested; check passes vacuously", file=sys.stderr)
    report = crosscheck.run_check(n, trials, seed)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"oracle-check n={n} trials={trials} max_deviation={report.max_deviation:.3e} "
          f"tolerance={crosscheck.TOLERANCE:.0e} {verdict}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            return cmd_oracle_check(args.n, args.trials, args.seed)
        cfg = config_from_args(args)
        if args.command == "sweep" and len(cfg.sweep_values) < 2:
            raise ex.ConfigError("sweep_values: need at least 2 values (--values or --range)")
        handler = {"spectrum": cmd_spectrum, "estimate": cmd_estimate, "sweep": cmd_sweep,
                   "compile": cmd_compile}[args.command]
        return handler(cfg)
    except (ex.ConfigError, cp.CompileError, oracle.OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

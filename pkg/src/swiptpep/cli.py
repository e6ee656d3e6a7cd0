"""Command-line entry point.

Subcommands
-----------
pep         analytical bound (and optional Monte Carlo) on an SNR grid
sweep       relay-scenario, PS-ratio or spatial-model sweeps
diversity   high-SNR log-log slope of the analytical bounds
noise-check statistical self-test of the impulsive noise generator

Values given on the command line override those read from ``--config``.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import List, Optional

from . import harness
from .analysis import DiversityError, diversity_order
from .harness import ConfigError, ExperimentSpec
from .mca_noise import (
    NoiseEnvironment,
    mixture_variance,
    pdf_total_mass,
    required_samples,
    sample_mean_power,
)
from .phy import ALL_VARIANTS
from .specfun import QuadratureError

DIVERSITY_GRID = "50:80:5"
CURVE_GRID = "0:45:5"

NOISE_COLUMNS = ("noise_env", "M", "N0", "samples", "seed", "variance_expected", "variance_sample",
                 "variance_rel_err", "pdf_mass", "passed")

# argparse dest -> config-file key
_FLAG_KEYS = {
    "env": "env", "scheme": "scheme", "eh": "eh", "spatial": "spatial",
    "d_sr1": "d_sr1", "d_sr2": "d_sr2", "theta1": "theta1", "theta2": "theta2",
    "eta1": "eta1", "eta2": "eta2", "lam": "lambda", "Ps": "Ps", "M": "M",
    "snr": "snr_db", "trials": "trials", "seed": "seed", "out": "out",
    "workers": "workers", "sweep": "sweep",
}


def _count(text):
    """Accept ``1000000`` as well as ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML or JSON file with flat key-value settings")
    p.add_argument("--env", help="noise environment: HI, MI, NG or AWGN")
    p.add_argument("--scheme", help="blind, csi, or a combined form such as blind-aeh")
    p.add_argument("--eh", choices=("ieh", "aeh"), help="energy-harvesting mode")
    p.add_argument("--spatial", help="model1 (shared impulse state) or model2 (independent)")
    p.add_argument("--d-sr1", dest="d_sr1", type=float)
    p.add_argument("--d-sr2", dest="d_sr2", type=float)
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--lambda", dest="lam", type=float, help="path-loss exponent")
    p.add_argument("--Ps", type=float, help="source power in watts")
    p.add_argument("--M", type=_count, help="impulse-state truncation")
    p.add_argument("--snr", help="SNR grid in dB: start:stop:step or a comma list")
    p.add_argument("--seed", type=_count)
    p.add_argument("--out", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swiptpep", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pep", help="PEP curve: analytical bound plus optional Monte Carlo")
    _scenario_args(p)
    p.add_argument("--trials", type=_count, help="MC frames per SNR point (0: analytical only)")
    p.add_argument("--workers", type=_count)
    p.add_argument("--closed-form", action="store_true", help="use the special-function forms")

    p = sub.add_parser("sweep", help="parameter sweep")
    _scenario_args(p)
    p.add_argument("--sweep", choices=[k.value for k in harness.SweepKind] + ["scenario", "model"])
    p.add_argument("--trials", type=_count)
    p.add_argument("--workers", type=_count)

    p = sub.add_parser("diversity", help="diversity order from the analytical bounds")
    _scenario_args(p)
    p.add_argument("--all", action="store_true", help="tabulate every scheme and environment")

    p = sub.add_parser("noise-check", help="noise generator self-test")
    p.add_argument("--config")
    p.add_argument("--env", help="restrict to one environment (default: HI, MI, NG)")
    p.add_argument("--M", type=_count)
    p.add_argument("--trials", type=_count, help="samples per environment (default: sized for 1%% at 3 sigma)")
    p.add_argument("--seed", type=_count)
    p.add_argument("--out")
    return parser


def _merged(args, default_grid) -> dict:
    data = harness.load_config_file(args.config) if args.config else {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[key] = value
    # a combined "--scheme blind-aeh" on the command line supersedes a file "eh"
    if getattr(args, "scheme", None) and "-" in str(args.scheme) and args.eh is None:
        data.pop("eh", None)
    data.setdefault("snr_db", default_grid)
    return data


def _emit(rows, columns, out):
    if out:
        harness.write_csv(rows, out, columns)
    else:
        sys.stdout.write(harness.format_rows(rows, columns))


def _cmd_pep(args):
    data = _merged(args, CURVE_GRID)
    data.pop("sweep", None)
    spec = harness.spec_from_mapping(data)
    spec = spec.replace(closed_form=args.closed_form)
    start = time.perf_counter()
    rows = harness.run_experiment(spec)
    _emit(rows, harness.CSV_COLUMNS, spec.output)
    _summary(rows, spec, time.perf_counter() - start)


def _cmd_sweep(args):
    data = _merged(args, CURVE_GRID)
    if not data.get("sweep"):
        raise ConfigError("sweep needs --sweep (or a 'sweep' key in the config file)")
    spec = harness.spec_from_mapping(data)
    start = time.perf_counter()
    rows = harness.run_sweep(spec)
    _emit(rows, harness.CSV_COLUMNS, spec.output)
    _summary(rows, spec, time.perf_counter() - start)


def _diversity_rows(spec: ExperimentSpec):
    rows = harness.run_analytical(spec)
    slope = diversity_order([r.snr_db for r in rows], [r.pep_analytical for r in rows])
    return rows, slope


def _cmd_diversity(args):
    data = _merged(args, DIVERSITY_GRID)
    data["trials"] = 0
    data.pop("sweep", None)
    spec = harness.spec_from_mapping(data)
    rows = []
    if args.all:
        envs = (NoiseEnvironment.HI, NoiseEnvironment.MI, NoiseEnvironment.NG, NoiseEnvironment.AWGN_LIMIT)
        print("scheme      " + "".join(f"{e.value:>8}" for e in envs), file=sys.stderr)
        for variant in ALL_VARIANTS:
            line = f"{variant.label:<12}"
            for env in envs:
                cfg = spec.config.replace(variant=variant, environment=env)
                part, slope = _diversity_rows(spec.replace(config=cfg))
                rows.extend(part)
                line += f"{slope:8.3f}"
            print(line, file=sys.stderr)
    else:
        rows, slope = _diversity_rows(spec)
        cfg = spec.config
        lo, hi = spec.snr_grid_db[-2], spec.snr_grid_db[-1]
        print(f"diversity order {slope:.4f} ({cfg.variant.label}, {cfg.environment.value}, "
              f"{cfg.spatial.value}, slope over {lo:g}-{hi:g} dB)", file=sys.stderr)
    if spec.output:
        harness.write_csv(rows, spec.output)


def _cmd_noise_check(args):
    data = harness.load_config_file(args.config) if args.config else {}
    env = args.env or data.get("env")
    envs = [NoiseEnvironment.parse(env)] if env else [NoiseEnvironment.HI, NoiseEnvironment.MI, NoiseEnvironment.NG]
    M = args.M if args.M is not None else harness._count(data.get("M", 5), "M")
    seed = args.seed if args.seed is not None else harness._count(data.get("seed", 0), "seed")
    trials = args.trials if args.trials is not None else harness._count(data.get("trials", 0), "trials")
    out = args.out or data.get("out")
    rows = []
    for e in envs:
        params = e.params(M=M, N0=1.0)
        n = trials or required_samples(params)
        expected = mixture_variance(params)
        sample = sample_mean_power(params, n, seed)
        rel = abs(sample / expected - 1.0)
        mass = pdf_total_mass(params)
        passed = rel <= 0.01 and abs(mass - 1.0) <= 1e-6
        rows.append(dict(noise_env=e.value, M=M, N0=1.0, samples=n, seed=seed, variance_expected=expected,
                         variance_sample=sample, variance_rel_err=rel, pdf_mass=mass, passed=passed))
        print(f"{e.value:>4}: variance rel. error {rel:.2e} over {n} samples, pdf mass {mass:.12f} "
              f"-> {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    _emit(rows, NOISE_COLUMNS, out)


def _summary(rows, spec: ExperimentSpec, seconds):
    cfg = spec.config
    flags = {}
    for r in rows:
        flags[r.pep_chernoff_flag] = flags.get(r.pep_chernoff_flag, 0) + 1
    flag_text = ", ".join(f"{k}={v}" for k, v in sorted(flags.items()))
    target = spec.output if spec.output else "stdout"
    print(f"{len(rows)} rows ({cfg.variant.label}, {cfg.environment.value}, {cfg.spatial.value}; {flag_text}) "
          f"-> {target} in {seconds:.1f}s", file=sys.stderr)


_COMMANDS = {"pep": _cmd_pep, "sweep": _cmd_sweep, "diversity": _cmd_diversity, "noise-check": _cmd_noise_check}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, DiversityError, QuadratureError, ValueError) as exc:
        print(f"swiptpep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"swiptpep {args.command}: I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

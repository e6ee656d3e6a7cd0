"""Experiment orchestration: seeded Monte Carlo, analytical curves, sweeps
and CSV output.

Monte Carlo trials are split into fixed-size chunks.  Chunk ``k`` of SNR
point ``p`` draws from ``SeedSequence([seed, p, k])`` and chunk results are
reduced in chunk order, so the output depends only on the seed and the spec,
never on scheduling or the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np
import yaml
from scipy import stats

from .analysis import conditional_pep_given_variance, fading_average, pep_bound
from .channel import Topology, sample_fading_block
from .mca_noise import NoiseEnvironment, SpatialModel, sample_states
from .phy import (
    CodewordPair,
    RelayParams,
    SchemeVariant,
    SystemConfig,
    WORST_CASE_PAIR,
    pairwise_error,
    projected_noise_variance,
    synthesize_frame,
)
from .specfun import QuadratureError

__all__ = [
    "SCENARIOS",
    "SweepKind",
    "ExperimentSpec",
    "ResultRow",
    "McPoint",
    "CSV_COLUMNS",
    "ConfigError",
    "simulate_point",
    "run_monte_carlo",
    "run_analytical",
    "run_sweep",
    "run_experiment",
    "theta_grid",
    "wilson_interval",
    "format_rows",
    "write_csv",
    "load_config_file",
    "spec_from_mapping",
    "parse_snr_grid",
]

#: Relay placements ``(d_sr1, d_sr2)`` for the six geometric scenarios.
SCENARIOS = {
    1: (0.8, 0.8),
    2: (0.5, 0.8),
    3: (0.2, 0.8),
    4: (0.5, 0.5),
    5: (0.5, 0.2),
    6: (0.2, 0.2),
}

MIN_MC_TRIALS = 1000
DEFAULT_CHUNK = 1 << 16


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class SweepKind(str, Enum):
    RELAY_SCENARIO = "relay_scenario"
    THETA_EQUAL = "theta_equal"
    THETA_COMPLEMENT = "theta_complement"
    MODEL_COMPARE = "model_compare"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"scenario": cls.RELAY_SCENARIO, "relay": cls.RELAY_SCENARIO, "model": cls.MODEL_COMPARE}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown sweep {value!r}; expected one of {choices}") from None


def theta_grid(step=0.02):
    """PS-ratio grid ``step, 2 step, ..., 1 - step`` rounded to avoid drift."""
    n = int(round(1.0 / step))
    return tuple(round(k * step, 10) for k in range(1, n))


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a base scenario, an SNR grid and MC settings.

    ``trials == 0`` requests analytical curves only.
    """

    config: SystemConfig
    snr_grid_db: tuple = tuple(range(0, 50, 5))
    trials: int = 0
    seed: int = 0
    output: Optional[Path] = None
    sweep: Optional[SweepKind] = None
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK
    pair: CodewordPair = WORST_CASE_PAIR
    closed_form: bool = False

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ConfigError("SNR grid is empty")
        if any(b <= a for a, b in zip(grid[:-1], grid[1:])):
            raise ConfigError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if self.trials and self.trials < MIN_MC_TRIALS:
            raise ConfigError(f"Monte Carlo runs need at least {MIN_MC_TRIALS} trials")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.workers < 1 or self.chunk_size < 1:
            raise ConfigError("workers and chunk_size must be positive")
        if self.sweep is not None:
            object.__setattr__(self, "sweep", SweepKind.parse(self.sweep))
        if self.output is not None:
            object.__setattr__(self, "output", Path(self.output))

    def replace(self, **changes) -> "ExperimentSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    scheme: str
    eh_mode: str
    noise_env: str
    spatial_model: str
    d_sr1: float
    d_sr2: float
    theta1: float
    theta2: float
    pep_analytical: float
    pep_chernoff_flag: str
    pep_mc: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    trials: int = 0
    seed: int = 0


CSV_COLUMNS = tuple(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class McPoint:
    """Monte Carlo outcome at one SNR.

    ``semi_analytic`` averages the exact conditional pairwise error
    probability over the simulated fading and impulse states, so it has the
    same expectation as ``pep`` but far smaller variance.  ``eq25_average``
    is the per-state Gaussian form averaged over the same fading draws with
    the state probabilities (Model I only, otherwise NaN).
    """

    errors: int
    trials: int
    pep: float
    ci_low: float
    ci_high: float
    semi_analytic: float
    semi_analytic_sem: float
    eq25_average: float

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of ``pep``."""
        p = self.pep
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)


def wilson_interval(errors: int, trials: int, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    ci = stats.binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# --- Monte Carlo ----------------------------------------------------------

def _chunk_sums(args):
    config, snr_db, n, seed, point, chunk, pair = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, point, chunk]))
    params = config.noise(snr_db)
    fading = sample_fading_block(rng, n)
    states = sample_states(params, config.spatial, rng, n)
    frame = synthesize_frame(config, fading, states, pair.s, params.N0, rng)
    errors = int(np.count_nonzero(pairwise_error(frame.y, frame.h, pair)))
    d2, var = projected_noise_variance(frame.h, frame.slot_variance, pair)
    q = conditional_pep_given_variance(d2, var)
    if config.spatial is SpatialModel.MODEL_I:
        eq25 = fading_average(config, snr_db, fading, pair)[0] * n
    else:
        eq25 = math.nan
    return errors, math.fsum(q), math.fsum(q * q), eq25


def _chunks(trials, chunk_size):
    full, rest = divmod(int(trials), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def simulate_point(config: SystemConfig, snr_db: float, trials: int, seed: int = 0, point_index: int = 0,
                   chunk_size: int = DEFAULT_CHUNK, workers: int = 1,
                   pair: CodewordPair = WORST_CASE_PAIR) -> McPoint:
    """Estimate the pairwise error rate at one SNR by frame-level simulation."""
    tasks = [(config, float(snr_db), n, int(seed), int(point_index), k, pair)
             for k, n in enumerate(_chunks(trials, chunk_size))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_sums, tasks))
    else:
        parts = [_chunk_sums(t) for t in tasks]
    trials = int(trials)
    errors = sum(p[0] for p in parts)
    q_sum = math.fsum(p[1] for p in parts)
    q2_sum = math.fsum(p[2] for p in parts)
    mean = q_sum / trials
    var = max(q2_sum / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    eq25 = math.fsum(p[3] for p in parts) / trials
    lo, hi = wilson_interval(errors, trials)
    return McPoint(errors, trials, errors / trials, lo, hi, mean, math.sqrt(var / trials), eq25)


def _analytical_value(config, snr_db, pair, closed_form):
    try:
        value = pep_bound(config, snr_db, pair, closed_form)
    except (QuadratureError, ArithmeticError, ValueError):
        return math.nan, "error"
    return value, ("saturated" if value > 1.0 else "ok")


def _row(config: SystemConfig, snr_db, value, flag, mc: Optional[McPoint] = None, seed=0) -> ResultRow:
    d1, d2 = config.topology.d_sr1, config.topology.d_sr2
    return ResultRow(
        snr_db=float(snr_db),
        scheme=config.variant.relaying.value,
        eh_mode=config.variant.eh_mode.value,
        noise_env=config.environment.value,
        spatial_model=config.spatial.value,
        d_sr1=d1,
        d_sr2=d2,
        theta1=config.relays[0].theta,
        theta2=config.relays[1].theta,
        pep_analytical=value,
        pep_chernoff_flag=flag,
        pep_mc=None if mc is None else mc.pep,
        ci_low=None if mc is None else mc.ci_low,
        ci_high=None if mc is None else mc.ci_high,
        trials=0 if mc is None else mc.trials,
        seed=int(seed),
    )


def run_analytical(spec: ExperimentSpec) -> List[ResultRow]:
    """Variant-matched Chernoff bounds on the SNR grid.

    Quadrature failures are recorded in the row (flag ``error``, value NaN)
    instead of aborting the curve.
    """
    rows = []
    for snr in spec.snr_grid_db:
        value, flag = _analytical_value(spec.config, snr, spec.pair, spec.closed_form)
        rows.append(_row(spec.config, snr, value, flag, seed=spec.seed))
    return rows


def run_monte_carlo(spec: ExperimentSpec) -> List[ResultRow]:
    """Analytical bound and simulated pairwise error rate for every SNR point."""
    if not spec.trials:
        raise ConfigError("run_monte_carlo needs trials > 0")
    rows = []
    for p, snr in enumerate(spec.snr_grid_db):
        value, flag = _analytical_value(spec.config, snr, spec.pair, spec.closed_form)
        mc = simulate_point(spec.config, snr, spec.trials, spec.seed, p, spec.chunk_size, spec.workers, spec.pair)
        rows.append(_row(spec.config, snr, value, flag, mc, spec.seed))
    return rows


def _with_relays(config: SystemConfig, theta1=None, theta2=None, d_sr1=None, d_sr2=None):
    r1, r2 = config.relays
    relays = (RelayParams(theta1 if theta1 is not None else r1.theta, r1.eta),
              RelayParams(theta2 if theta2 is not None else r2.theta, r2.eta))
    topo = config.topology
    topology = Topology(d_sr1 if d_sr1 is not None else topo.d_sr1,
                        d_sr2 if d_sr2 is not None else topo.d_sr2,
                        topo.path_loss_exponent_lambda)
    return config.replace(relays=relays, topology=topology)


def sweep_configs(config: SystemConfig, kind: SweepKind) -> List[SystemConfig]:
    kind = SweepKind.parse(kind)
    if kind is SweepKind.RELAY_SCENARIO:
        return [_with_relays(config, d_sr1=a, d_sr2=b) for a, b in SCENARIOS.values()]
    if kind is SweepKind.THETA_EQUAL:
        return [_with_relays(config, theta1=t, theta2=t) for t in theta_grid()]
    if kind is SweepKind.THETA_COMPLEMENT:
        return [_with_relays(config, theta1=t, theta2=round(1.0 - t, 10)) for t in theta_grid()]
    return [config.replace(spatial=SpatialModel.MODEL_I), config.replace(spatial=SpatialModel.MODEL_II)]


def run_sweep(spec: ExperimentSpec) -> List[ResultRow]:
    """Repeat the experiment for each configuration of the requested sweep.

    Rows are grouped by SNR, then by sweep position, so that e.g. the
    Model I and Model II values of one SNR sit next to each other.
    """
    if spec.sweep is None:
        raise ConfigError("run_sweep needs a sweep kind")
    configs = sweep_configs(spec.config, spec.sweep)
    per_config = []
    for cfg in configs:
        sub = spec.replace(config=cfg, sweep=None)
        per_config.append(run_monte_carlo(sub) if spec.trials else run_analytical(sub))
    return [rows[i] for i in range(len(spec.snr_grid_db)) for rows in per_config]


def run_experiment(spec: ExperimentSpec) -> List[ResultRow]:
    if spec.sweep is not None:
        return run_sweep(spec)
    if spec.trials:
        return run_monte_carlo(spec)
    return run_analytical(spec)


# --- CSV -------------------------------------------------------------------

_PROBABILITY_COLUMNS = {"pep_analytical", "pep_mc", "ci_low", "ci_high"}


def _format_value(name, value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if name in _PROBABILITY_COLUMNS and value != 0.0 and abs(value) < 1e-4:
            return f"{value:.6e}"
        return f"{value:.8g}"
    return str(value)


def format_rows(rows: Iterable, columns: Sequence[str] = CSV_COLUMNS) -> str:
    """Render rows (dataclasses or mappings) as CSV text with a header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        data = row if isinstance(row, Mapping) else asdict(row)
        writer.writerow([_format_value(c, data[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Iterable, path, columns: Sequence[str] = CSV_COLUMNS) -> Path:
    """Write atomically: the target either holds the complete CSV or is untouched."""
    path = Path(path)
    text = format_rows(rows, columns)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# --- configuration -----------------------------------------------------------

CONFIG_KEYS = ("env", "scheme", "eh", "spatial", "d_sr1", "d_sr2", "theta1", "theta2", "eta1", "eta2",
               "lambda", "Ps", "M", "snr_db", "trials", "seed", "out", "sweep", "workers")


def load_config_file(path) -> dict:
    """Read a flat key-value document (YAML or JSON)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a key-value mapping")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(map(str, unknown))}")
    for key, value in data.items():
        if isinstance(value, (dict,)):
            raise ConfigError(f"config key {key!r} must be a scalar or list")
    return data


def parse_snr_grid(value) -> tuple:
    """``"0:45:5"`` (inclusive), ``"10,20,30"``, a number or a list."""
    if isinstance(value, (int, float)):
        return (float(value),)
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    text = str(value).strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1.0)
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(n))
        return tuple(float(p) for p in text.replace(" ", "").split(",") if p)
    except ValueError:
        raise ConfigError(f"cannot parse SNR grid {value!r}; use start:stop:step or a comma list") from None


def _count(value, name):
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if f != int(f) or f < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
    return int(f)


def spec_from_mapping(data: Mapping, default_grid="0:45:5") -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from config-file style keys."""
    scheme = str(data.get("scheme", "blind"))
    eh = data.get("eh")
    if eh is None and "-" not in scheme and "_" not in scheme:
        eh = "ieh"
    try:
        variant = SchemeVariant.parse(scheme, eh)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        relays = (RelayParams(float(data.get("theta1", 0.5)), float(data.get("eta1", 0.3))),
                  RelayParams(float(data.get("theta2", 0.5)), float(data.get("eta2", 0.3))))
        topology = Topology(float(data.get("d_sr1", 0.5)), float(data.get("d_sr2", 0.5)),
                            float(data.get("lambda", 2.7)))
        config = SystemConfig(
            P_s=float(data.get("Ps", 1.0)),
            relays=relays,
            topology=topology,
            variant=variant,
            environment=NoiseEnvironment.parse(data.get("env", "NG")),
            spatial=SpatialModel.parse(data.get("spatial", "model1")),
            M=_count(data.get("M", 5), "M"),
        )
        return ExperimentSpec(
            config=config,
            snr_grid_db=parse_snr_grid(data.get("snr_db", default_grid)),
            trials=_count(data.get("trials", 0), "trials"),
            seed=_count(data.get("seed", 0), "seed"),
            output=data.get("out"),
            sweep=data.get("sweep"),
            workers=_count(data.get("workers", 1), "workers") or 1,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

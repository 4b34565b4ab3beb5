"""
Experiment harness

PURPOSE: Loads flat key-value configs, runs single experiments and paired
Monte-Carlo sweeps across schemes, and persists records, aggregates and traces

KEY COMPONENTS:
- parse_config_text / load_config: `key = value` files validated into HarnessConfig
- run_trial: one (scheme, trial) run returning a ResultRecord and its SolveTrace
- run_single: one run from a config file, optionally written to CSV + trace JSON
- SweepRunner: context manager over an optional process pool
- run_sweep: every (scheme, value, trial) cell, sorted, aggregated and written
- summarize: per-cell mean, standard deviation and 95% t interval
- check_config: config validation plus initial-layout feasibility

CODE STRUCTURE:
1. Logging and environment configuration
2. Config loading
3. Single runs
4. Sweeps, aggregation and CSV output

WHY USED:
- aws-lambda-powertools Logger gives structured JSON records with run context
  attached through append_keys
- pandas writes the fixed CSV schema and groups cells for the summary
- scipy.stats provides the Student-t quantile for confidence intervals
- ProcessPoolExecutor runs independent trials in parallel; output order is
  fixed by sorting, so worker count never changes the CSV
"""
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from aws_lambda_powertools import Logger
from pydantic import ValidationError
from scipy import stats

from .errors import ConfigError, SixdmaError
from .geometry import ConstraintReport, check_constraints
from .models import (
    ArraySpec,
    HarnessConfig,
    OptimizerConfig,
    RegionShape,
    ResultRecord,
    ScenarioConfig,
    SchemeKind,
    SweepParameter,
    SweepSpec,
)
from .psca import SolveTrace, optimize
from .scenario import baseline_poses, initial_poses, scenario_for_trial, trial_seed

# Environment configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
WORKERS_ENV = "SIXDMA_WORKERS"

logger = Logger(
    service="sixdma-secure",
    level=LOG_LEVEL,
    logger_handler=logging.StreamHandler(sys.stderr),
)

logging.basicConfig(level=LOG_LEVEL)

CSV_COLUMNS = [
    "scheme",
    "swept_param",
    "swept_value",
    "trial",
    "seed",
    "k_d",
    "k_e",
    "ssr_bps_hz",
    "alpha",
    "outer_iters",
    "runtime_ms",
    "status",
]

SWEEP_FIELDS = {
    SweepParameter.TRANSMIT_POWER: "p_max",
    SweepParameter.MEAN_USERS: "mean_users",
    SweepParameter.MEAN_EVES: "mean_eves",
}

# derived model fields and the config keys they are built from
DERIVED_KEYS = {
    "distance_range": "distance_min_m, distance_max_m",
    "elevation_range": "elevation_min_deg, elevation_max_deg",
    "wavelength": "wavelength_m",
    "p_max": "p_max_w",
    "noise_power": "noise_dbm",
    "d_min": "d_min_m",
    "downtilt": "downtilt_deg",
    "radius": "region_radius_m",
    "half_widths": "region_half_widths_m",
    "hotspot_azimuth": "hotspot_azimuth_deg",
    "hotspot_width": "hotspot_width_deg",
}


def parse_config_text(text: str) -> Dict[str, str]:
    """Split `key = value` lines; '#' starts a comment"""
    known = set(HarnessConfig.model_fields)
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, f"duplicate key on line {number}")
        values[key] = value
    return values


def _config_error(error: ValidationError, fallback: Optional[str]) -> ConfigError:
    """First validation error, named by the config key(s) it came from"""
    first = error.errors()[0]
    field = str(first["loc"][0]) if first["loc"] else None
    if field is None:
        return ConfigError(fallback, first["msg"])
    key = DERIVED_KEYS.get(field, field)
    return ConfigError(key, first["msg"].replace(field, key))


def validate_config(values: Dict[str, str]) -> HarnessConfig:
    """Build a HarnessConfig, reporting the first invalid key"""
    try:
        config = HarnessConfig(**values)
    except ValidationError as e:
        raise _config_error(e, None) from e
    region_key = "region_half_widths_m" if config.region_shape == RegionShape.BOX else "region_radius_m"
    try:
        config.to_scenario_config()
    except ValidationError as e:
        raise _config_error(e, region_key) from e
    try:
        config.to_optimizer_config()
    except ValidationError as e:
        raise _config_error(e, "alpha_min, alpha_max") from e
    return config


def load_config(path) -> HarnessConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(None, f"cannot read config {path}: {e}") from e
    config = validate_config(parse_config_text(text))
    logger.debug(f"Loaded config {path}")
    return config


def run_trial(
    scheme: SchemeKind,
    scenario_config: ScenarioConfig,
    optimizer_config: OptimizerConfig,
    trial: int,
    base_seed: int,
    swept_param: str = "none",
    swept_value: Optional[float] = None,
) -> Tuple[ResultRecord, SolveTrace]:
    """Generate the trial's scene, optimise it under the scheme and record the result"""
    start = time.perf_counter()
    scenario, seed = scenario_for_trial(scenario_config, trial, base_seed)
    policy = baseline_poses(scheme, scenario_config)
    trace = optimize(scenario, policy.initial_poses, optimizer_config, policy.motion)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    record = ResultRecord(
        scheme=scheme,
        swept_param=swept_param,
        swept_value=swept_value,
        trial=trial,
        seed=seed,
        k_d=len(scenario.users),
        k_e=len(scenario.eves),
        ssr_bps_hz=trace.report.ssr,
        alpha=trace.beams.alpha,
        outer_iters=trace.outer_iterations,
        runtime_ms=runtime_ms,
    )
    logger.info(
        f"{scheme.value} trial {trial}: SSR {record.ssr_bps_hz:.4f} bps/Hz",
        extra={"ssr": record.ssr_bps_hz, "alpha": record.alpha,
               "iterations": record.outer_iters, "runtime_ms": runtime_ms},
    )
    return record, trace


def trace_path(out: Path) -> Path:
    return out.with_name(out.stem + ".trace.json")


def run_single(
    config_path, scheme: Optional[SchemeKind] = None, out: Optional[Path] = None
) -> Tuple[ResultRecord, SolveTrace]:
    """One end-to-end run (trial 0) of the config's scenario"""
    config = load_config(config_path)
    scheme = scheme or config.scheme
    logger.append_keys(scheme=scheme.value, trial=0)
    record, trace = run_trial(
        scheme, config.to_scenario_config(), config.to_optimizer_config(), 0, config.seed
    )
    if out is not None:
        out = Path(out)
        write_csv([record.csv_row()], out)
        trace_path(out).write_text(trace.dump(scheme).model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote {out} and {trace_path(out)}")
    return record, trace


def check_config(config_path) -> ConstraintReport:
    """Validate a config and the feasibility of its initial layout"""
    config = load_config(config_path)
    scenario_config = config.to_scenario_config()
    poses = initial_poses(scenario_config)
    array = ArraySpec.upa(scenario_config.antennas_per_surface, scenario_config.wavelength, scenario_config.pattern)
    return check_constraints(poses, array, scenario_config.region, scenario_config.min_distance)


@dataclass(frozen=True)
class SweepJob:
    scheme: SchemeKind
    scheme_index: int
    value_index: int
    swept_param: str
    swept_value: float
    trial: int
    base_seed: int
    scenario_config: ScenarioConfig
    optimizer_config: OptimizerConfig

    @property
    def order(self) -> Tuple[int, int, int]:
        return self.scheme_index, self.value_index, self.trial


def run_job(job: SweepJob) -> ResultRecord:
    """Run one sweep cell; library errors become a failed record"""
    logger.append_keys(scheme=job.scheme.value, trial=job.trial, swept_value=job.swept_value)
    start = time.perf_counter()
    try:
        record, _ = run_trial(
            job.scheme, job.scenario_config, job.optimizer_config, job.trial, job.base_seed,
            job.swept_param, job.swept_value,
        )
        return record
    except SixdmaError as e:
        logger.warning(f"Run failed: {type(e).__name__}: {e}")
        scenario, seed = _failed_scene(job)
        return ResultRecord(
            scheme=job.scheme,
            swept_param=job.swept_param,
            swept_value=job.swept_value,
            trial=job.trial,
            seed=seed,
            k_d=len(scenario.users) if scenario else 0,
            k_e=len(scenario.eves) if scenario else 0,
            runtime_ms=(time.perf_counter() - start) * 1000.0,
            status=f"failed:{type(e).__name__}",
        )


def _failed_scene(job: SweepJob):
    try:
        return scenario_for_trial(job.scenario_config, job.trial, job.base_seed)
    except SixdmaError:
        return None, trial_seed(job.base_seed, job.trial)


class SweepRunner:
    """Runs sweep jobs in-process or on a process pool"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers if workers is not None else int(os.getenv(WORKERS_ENV, "1"))
        if self.workers < 1:
            raise ConfigError(WORKERS_ENV, "worker count must be at least 1")
        self._pool: Optional[ProcessPoolExecutor] = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def close(self):
        """Shut the pool down"""
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def run(self, jobs: Sequence[SweepJob]) -> List[ResultRecord]:
        if self._pool is None:
            results = [run_job(job) for job in jobs]
        else:
            results = list(self._pool.map(run_job, jobs))
        ordered = sorted(zip(jobs, results), key=lambda pair: pair[0].order)
        return [record for _, record in ordered]


def apply_sweep_value(parameter: SweepParameter, value: float, config: ScenarioConfig) -> ScenarioConfig:
    """Scenario config with the swept field replaced (re-validated)"""
    fields = config.model_dump()
    fields[SWEEP_FIELDS[parameter]] = value
    try:
        return ScenarioConfig(**fields)
    except ValidationError as e:
        raise ConfigError(parameter.value, e.errors()[0]["msg"]) from e


def sweep_jobs(spec: SweepSpec, config: HarnessConfig) -> List[SweepJob]:
    base = config.to_scenario_config()
    optimizer_config = config.to_optimizer_config()
    jobs = []
    for s_index, scheme in enumerate(spec.schemes):
        for v_index, value in enumerate(spec.values):
            scenario_config = apply_sweep_value(spec.parameter, value, base)
            for trial in range(spec.trials):
                jobs.append(SweepJob(
                    scheme=scheme,
                    scheme_index=s_index,
                    value_index=v_index,
                    swept_param=spec.parameter.value,
                    swept_value=float(value),
                    trial=trial,
                    base_seed=spec.base_seed,
                    scenario_config=scenario_config,
                    optimizer_config=optimizer_config,
                ))
    return jobs


def _mean(values: List[float]) -> Optional[float]:
    return float(sum(values) / len(values)) if values else None


def aggregate_row(records: Sequence[ResultRecord]) -> Dict[str, object]:
    """Cell mean over the successful records of one (scheme, value)"""
    ok = [r for r in records if r.status == "ok"]
    first = records[0]
    return {
        "scheme": first.scheme.value,
        "swept_param": first.swept_param,
        "swept_value": first.swept_value,
        "trial": "mean",
        "seed": None,
        "k_d": _mean([r.k_d for r in ok]),
        "k_e": _mean([r.k_e for r in ok]),
        "ssr_bps_hz": _mean([r.ssr_bps_hz for r in ok]),
        "alpha": _mean([r.alpha for r in ok]),
        "outer_iters": _mean([r.outer_iters for r in ok]),
        "runtime_ms": _mean([r.runtime_ms for r in ok]),
        "status": f"aggregate:{len(ok)}",
    }


def csv_rows(records: Sequence[ResultRecord]) -> List[Dict[str, object]]:
    """Trial rows of each (scheme, value) cell followed by the cell aggregate"""
    rows: List[Dict[str, object]] = []
    cell: List[ResultRecord] = []
    for record in records:
        if cell and (record.scheme, record.swept_value) != (cell[0].scheme, cell[0].swept_value):
            rows.append(aggregate_row(cell))
            cell = []
        cell.append(record)
        rows.append(record.csv_row())
    if cell:
        rows.append(aggregate_row(cell))
    return rows


def write_csv(rows: Sequence[Dict[str, object]], out: Path) -> None:
    frame = pd.DataFrame(list(rows), columns=CSV_COLUMNS, dtype=object)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)


def summarize(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """Per-cell mean, std and Student-t 95% half-width of the SSR"""
    frame = pd.DataFrame([r.csv_row() for r in records if r.status == "ok"])
    if frame.empty:
        return pd.DataFrame(columns=["scheme", "swept_value", "n", "mean", "std", "ci95"])
    frame["swept_value"] = frame["swept_value"].fillna(math.nan)
    grouped = frame.groupby(["scheme", "swept_value"], sort=False, dropna=False)["ssr_bps_hz"]
    summary = grouped.agg(n="count", mean="mean", std="std").reset_index()
    summary["std"] = summary["std"].fillna(0.0)
    summary["ci95"] = [
        float(stats.t.ppf(0.975, n - 1) * s / math.sqrt(n)) if n > 1 else math.nan
        for n, s in zip(summary["n"], summary["std"])
    ]
    return summary


def run_sweep(
    spec: SweepSpec, config: HarnessConfig, out: Optional[Path] = None, workers: Optional[int] = None
) -> Tuple[List[ResultRecord], pd.DataFrame]:
    """Paired sweep over schemes x values x trials"""
    jobs = sweep_jobs(spec, config)
    logger.info(
        f"Sweeping {spec.parameter.value} over {list(spec.values)} with {spec.trials} trials "
        f"for {[s.value for s in spec.schemes]}"
    )
    with SweepRunner(workers) as runner:
        records = runner.run(jobs)

    summary = summarize(records)
    for row in summary.itertuples(index=False):
        logger.info(
            f"{row.scheme} @ {row.swept_value}: mean SSR {row.mean:.4f} +/- {row.ci95:.4f} (n={row.n})"
        )
    failed = sum(1 for r in records if r.status != "ok")
    if failed:
        logger.warning(f"{failed} of {len(records)} runs failed")
    if out is not None:
        write_csv(csv_rows(records), Path(out))
        logger.info(f"Wrote {out}")
    return records, summary

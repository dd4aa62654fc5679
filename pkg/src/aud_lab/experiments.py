"""Experiment runner: parameter sweeps, decision-rate invariance, validation.

Configurations come from flat ``key = value`` text files (``#`` starts a
comment) and/or keyword overrides; results are written as fixed-schema CSV
plus a JSON-lines manifest (config echo, versions, timings).  Grid points
run concurrently, each with a seed derived from the base seed and its grid
index, and rows are assembled in grid order so output is byte-reproducible
regardless of scheduling.  ``AUD_LAB_THREADS`` caps the worker count.
"""
from __future__ import annotations

import concurrent.futures
import json
import math
import os
import platform
import struct
import time
from dataclasses import dataclass, fields, replace

import numpy as np
import scipy

from . import analytic
from .decisions import DecisionSet, aoi_path, generate_decisions, periodic_decisions, time_average_aoi
from .distributions import SeededStream, splitmix64
from .errors import ParameterError, StabilityError
from .queueing import (
    SystemParams,
    UpdateTrace,
    default_warmup,
    occupancy_fractions,
    queue_length_process,
    simulate,
)
from .stats import EstimateWithCI, batch_means_ci, ks_exponential, mean_ci, z_value

MODES = ("sweep_lambda", "sweep_mu", "grid_lambda_mu", "nu_invariance", "validate")

SWEEP_CSV_HEADER = (
    "lambda,mu,nu,analytic_aud,empirical_aud,ci_half_width,"
    "n_decisions,n_undefined_decisions,ks_T_pvalue,ks_Y_pvalue,status"
)

VALIDATION_CSV_HEADER = "check,passed,observed,expected,tolerance,detail"

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Runs below this many updates get scaled-up tolerances and a low-power mark.
LOW_POWER_UPDATES = 100_000

# Goodness-of-fit tests use at most this many post-warm-up samples.
KS_MAX_SAMPLES = 100_000


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "validate"
    arrival_rates: tuple = (0.5,)
    service_rates: tuple = (1.0,)
    decision_rates: tuple = (0.1, 1.0, 10.0)
    n_updates: int = 1_000_000
    seed: int = 42
    confidence: float = 0.99
    output_path: str | None = None
    allow_unstable: bool = False
    periodic: bool = False
    warmup_updates: int | None = None  # None: max(1000, 1% of n), capped at half

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.warmup_updates is not None and not (
            0 <= self.warmup_updates < self.n_updates
        ):
            raise ParameterError(
                f"warmup_updates must lie in [0, n_updates), got {self.warmup_updates}"
            )
        for name in ("arrival_rates", "service_rates", "decision_rates"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise ParameterError(f"{name} must not be empty")
            if any(not (math.isfinite(v) and v > 0.0) for v in grid):
                raise ParameterError(f"{name} entries must be positive, got {grid}")
        if self.n_updates < 1:
            raise ParameterError(f"n_updates must be >= 1, got {self.n_updates}")
        if not 0.0 < self.confidence < 1.0:
            raise ParameterError(f"confidence must be in (0, 1), got {self.confidence}")
        if self.mode == "nu_invariance" and (
            len(self.arrival_rates) != 1 or len(self.service_rates) != 1
        ):
            raise ParameterError("nu_invariance runs a single (lambda, mu) point")
        if self.mode == "nu_invariance" and len(self.decision_rates) < 2:
            raise ParameterError("nu_invariance needs at least two decision rates")


def parse_rates(text: str) -> tuple:
    """Parse '0.5', '0.1,0.2,0.5', or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0.0 or stop < start:
            raise ParameterError(f"bad range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        # rounding kills float accumulation artifacts (0.6000000000000001)
        return tuple(round(start + i * step, 12) for i in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"cannot parse boolean from {text!r}")


_CONFIG_KEYS = {
    "mode": ("mode", str.strip),
    "lambda": ("arrival_rates", parse_rates),
    "mu": ("service_rates", parse_rates),
    "nu": ("decision_rates", parse_rates),
    "updates": ("n_updates", lambda s: int(s.strip())),
    "n_updates": ("n_updates", lambda s: int(s.strip())),
    "seed": ("seed", lambda s: int(s.strip())),
    "confidence": ("confidence", lambda s: float(s.strip())),
    "out": ("output_path", str.strip),
    "output": ("output_path", str.strip),
    "allow_unstable": ("allow_unstable", _parse_bool),
    "periodic_decisions": ("periodic", _parse_bool),
    "warmup": ("warmup_updates", lambda s: int(s.strip())),
}


def load_config_file(path: str) -> dict:
    """Read a flat key=value config file into ExperimentConfig field values."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            attr, conv = _CONFIG_KEYS[key]
            values[attr] = conv(value)
    return values


def build_config(file_path: str | None = None, **overrides) -> ExperimentConfig:
    """Config from optional file plus keyword overrides (overrides win)."""
    values = load_config_file(file_path) if file_path else {}
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ParameterError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(**values)


def derive_point_seed(seed: int, grid_index: int) -> int:
    """Per-grid-point seed: base seed XOR a stable hash of the grid index."""
    return (seed ^ splitmix64(grid_index)) & _MASK64


def decision_stream_id(decision_rate: float) -> int:
    """Stream id keyed by the decision rate's bit pattern.

    Keying by value (not list position) makes duplicate rate entries
    reproduce identical decision sequences on a shared trace.  The top bit
    is forced so hashed ids never collide with the reserved process streams.
    """
    (bits,) = struct.unpack("<Q", struct.pack("<d", float(decision_rate)))
    return 0x8000000000000000 | splitmix64(bits ^ 0xDEC1510)


def decorrelation_lag(utilization: float) -> int:
    """Thinning stride that renders system-time samples effectively independent.

    Successive system times are serially correlated (they share queue
    state), which would invalidate an i.i.d. goodness-of-fit test; the
    relaxation scale in update counts grows like rho/(1-sqrt(rho))^2, and
    two relaxation times between kept samples calibrates the K-S false-
    rejection rate back to its nominal level.
    """
    if not 0.0 < utilization < 1.0:
        raise ParameterError(f"utilization must be in (0, 1), got {utilization}")
    return max(1, math.ceil(2.0 * utilization / (1.0 - math.sqrt(utilization)) ** 2))


@dataclass(frozen=True)
class SweepRow:
    arrival_rate: float
    service_rate: float
    decision_rate: float
    analytic_aud: float | None
    empirical_aud: float | None
    ci_half_width: float | None
    n_decisions: int | None
    n_undefined_decisions: int | None
    ks_system_time_pvalue: float | None
    ks_interdeparture_pvalue: float | None
    status: str

    def as_csv(self) -> str:
        def fmt(v):
            return "" if v is None else repr(float(v))

        def fmt_int(v):
            return "" if v is None else str(int(v))

        return ",".join(
            (
                repr(float(self.arrival_rate)),
                repr(float(self.service_rate)),
                repr(float(self.decision_rate)),
                fmt(self.analytic_aud),
                fmt(self.empirical_aud),
                fmt(self.ci_half_width),
                fmt_int(self.n_decisions),
                fmt_int(self.n_undefined_decisions),
                fmt(self.ks_system_time_pvalue),
                fmt(self.ks_interdeparture_pvalue),
                self.status,
            )
        )


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    rows: tuple

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(SWEEP_CSV_HEADER + "\n")
            fh.writelines(row.as_csv() + "\n" for row in self.rows)


def _config_record(config: ExperimentConfig) -> dict:
    return {
        "record": "config",
        "mode": config.mode,
        "lambda": list(config.arrival_rates),
        "mu": list(config.service_rates),
        "nu": list(config.decision_rates),
        "n_updates": config.n_updates,
        "seed": config.seed,
        "confidence": config.confidence,
        "output": config.output_path,
        "allow_unstable": config.allow_unstable,
        "periodic_decisions": config.periodic,
        "warmup": config.warmup_updates,
    }


def _versions_record() -> dict:
    try:
        from importlib.metadata import version

        own = version("aud-lab")
    except Exception:
        own = "unknown"
    return {
        "record": "versions",
        "aud_lab": own,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(path: str, config: ExperimentConfig, wall_seconds: float) -> None:
    with open(path, "w", newline="") as fh:
        for record in (
            _config_record(config),
            _versions_record(),
            {"record": "timing", "wall_seconds": wall_seconds},
        ):
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def manifest_path_for(output_path: str) -> str:
    base, _ = os.path.splitext(output_path)
    return base + ".manifest.jsonl"


def _max_workers(n_tasks: int) -> int:
    cap = os.environ.get("AUD_LAB_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def _warmup_count(config: ExperimentConfig, n: int) -> int:
    if config.warmup_updates is not None:
        return min(config.warmup_updates, n - 1)
    return default_warmup(n)


def _decisions_for(
    trace: UpdateTrace,
    decision_rate: float,
    point_seed: int,
    periodic: bool,
) -> DecisionSet:
    horizon = trace.last_departure
    if periodic:
        return periodic_decisions(trace, decision_rate, horizon)
    stream = SeededStream(point_seed, decision_stream_id(decision_rate))
    return generate_decisions(trace, decision_rate, horizon, stream)


def _aud_estimate(
    decisions: DecisionSet, warm_epoch: float, confidence: float
) -> EstimateWithCI | None:
    ages = decisions.ages[decisions.defined & (decisions.times > warm_epoch)]
    if len(ages) >= 200:
        return batch_means_ci(ages, confidence)
    if len(ages) >= 2:
        return mean_ci(ages, confidence)
    if len(ages) == 1:
        return EstimateWithCI(float(ages[0]), math.inf, 1, confidence)
    return None


def _point_rows(config: ExperimentConfig, grid_index: int, arrival_rate: float,
                service_rate: float) -> list[SweepRow]:
    """All rows (one per decision rate) for a single (lambda, mu) grid point."""
    params = SystemParams(arrival_rate, service_rate, config.decision_rates[0])
    try:
        analytic_value = analytic.average_aud(params)
    except StabilityError:
        analytic_value = None

    unstable = params.utilization >= 1.0
    if unstable and not config.allow_unstable:
        return [
            SweepRow(arrival_rate, service_rate, nu, None, None, None, None, None,
                     None, None, "unstable")
            for nu in config.decision_rates
        ]

    point_seed = derive_point_seed(config.seed, grid_index)
    trace = simulate(params, config.n_updates, point_seed, allow_unstable=config.allow_unstable)
    warm = _warmup_count(config, trace.n)
    warm_epoch = float(trace.departure_times[warm - 1]) if warm >= 1 else 0.0
    status = "ok" if trace.stationary else "unstable-simulated"

    ks_t_p = ks_y_p = None
    if trace.stationary:
        thinned = trace.system_times[warm:][:: decorrelation_lag(params.utilization)]
        thinned = thinned[:KS_MAX_SAMPLES]
        if len(thinned) >= 50:
            ks_t_p = ks_exponential(thinned, analytic.system_time_rate(params)).p_value
        gaps = trace.interdeparture_times[warm:][:KS_MAX_SAMPLES]
        if len(gaps) >= 50:
            ks_y_p = ks_exponential(gaps, params.arrival_rate).p_value

    rows = []
    for nu in config.decision_rates:
        decisions = _decisions_for(trace, nu, point_seed, config.periodic)
        est = _aud_estimate(decisions, warm_epoch, config.confidence)
        rows.append(
            SweepRow(
                arrival_rate,
                service_rate,
                nu,
                analytic_value,
                est.mean if est else None,
                (est.half_width if est and math.isfinite(est.half_width) else None),
                len(decisions),
                decisions.n_undefined,
                ks_t_p,
                ks_y_p,
                status,
            )
        )
    return rows


def _grid_points(config: ExperimentConfig) -> list[tuple]:
    if config.mode == "sweep_lambda":
        if len(config.service_rates) != 1:
            raise ParameterError("sweep_lambda expects a single service rate")
        return [(lam, config.service_rates[0]) for lam in config.arrival_rates]
    if config.mode == "sweep_mu":
        if len(config.arrival_rates) != 1:
            raise ParameterError("sweep_mu expects a single arrival rate")
        return [(config.arrival_rates[0], mu) for mu in config.service_rates]
    if config.mode == "grid_lambda_mu":
        return [(lam, mu) for lam in config.arrival_rates for mu in config.service_rates]
    # nu_invariance / validate run a single point
    return [(config.arrival_rates[0], config.service_rates[0])]


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """One simulated row per (grid point, decision rate); CSV + manifest if configured."""
    started = time.monotonic()
    points = _grid_points(config)
    rows_by_point: list = [None] * len(points)
    with concurrent.futures.ThreadPoolExecutor(_max_workers(len(points))) as pool:
        futures = {
            pool.submit(_point_rows, config, i, lam, mu): i
            for i, (lam, mu) in enumerate(points)
        }
        for fut in concurrent.futures.as_completed(futures):
            rows_by_point[futures[fut]] = fut.result()
    rows = tuple(row for point_rows in rows_by_point for row in point_rows)
    result = SweepResult(config, rows)
    if config.output_path:
        result.write_csv(config.output_path)
        write_manifest(
            manifest_path_for(config.output_path), config, time.monotonic() - started
        )
    return result


@dataclass(frozen=True)
class NuInvarianceResult:
    sweep: SweepResult
    estimates: dict
    max_pairwise_diff: float
    max_pairwise_allowance: float
    consistent: bool


def run_nu_invariance(config: ExperimentConfig) -> NuInvarianceResult:
    """Paired comparison of decision rates on one shared trace.

    Every decision rate samples the same simulated path, so differences in
    the per-rate age means reflect decision sampling only.  Consistency
    means every pair of batch-means confidence intervals overlaps.
    """
    if len(config.decision_rates) < 2:
        raise ParameterError("nu invariance needs at least two decision rates")
    started = time.monotonic()
    sweep = run_sweep(replace(config, mode="nu_invariance", output_path=None))
    estimates = {}
    for row in sweep.rows:
        if row.empirical_aud is None:
            raise ParameterError("nu invariance point produced no defined decisions")
        estimates[row.decision_rate] = EstimateWithCI(
            row.empirical_aud, row.ci_half_width or math.inf, 0, config.confidence
        )
    rates = list(estimates)
    max_diff, max_allow, consistent = 0.0, 0.0, True
    for i, a in enumerate(rates):
        for b in rates[i + 1:]:
            diff = abs(estimates[a].mean - estimates[b].mean)
            allow = estimates[a].half_width + estimates[b].half_width
            if diff > max_diff:
                max_diff, max_allow = diff, allow
            consistent = consistent and diff <= allow
    result = NuInvarianceResult(sweep, estimates, max_diff, max_allow, consistent)
    if config.output_path:
        sweep.write_csv(config.output_path)
        write_manifest(
            manifest_path_for(config.output_path), config, time.monotonic() - started
        )
    return result


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    detail: str = ""

    def as_csv(self) -> str:
        return ",".join(
            (
                self.name,
                "true" if self.passed else "false",
                repr(float(self.observed)),
                repr(float(self.expected)),
                repr(float(self.tolerance)),
                self.detail.replace(",", ";"),
            )
        )


@dataclass(frozen=True)
class ValidationReport:
    config: ExperimentConfig
    checks: tuple
    low_power: bool

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(VALIDATION_CSV_HEADER + "\n")
            fh.writelines(check.as_csv() + "\n" for check in self.checks)

    def summary(self) -> str:
        lines = [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name}: observed={c.observed:.6g} "
            f"expected={c.expected:.6g} tol={c.tolerance:.6g}"
            + (f"  [{c.detail}]" if c.detail else "")
            for c in self.checks
        ]
        verdict = "ALL CHECKS PASSED" if self.passed else "SOME CHECKS FAILED"
        if self.low_power:
            verdict += " (low-power run: tolerances widened)"
        return "\n".join(lines + [verdict])


def run_validation(config: ExperimentConfig, oracle_rate_scale: float = 1.0) -> ValidationReport:
    """Certify one simulated point against every closed-form oracle.

    ``oracle_rate_scale`` deliberately mis-scales the exponential reference
    rates of the K-S checks; it exists so the test surface can demonstrate
    the checks have power (anything but 1.0 must fail them).
    """
    started = time.monotonic()
    lam, mu = config.arrival_rates[0], config.service_rates[0]
    params = SystemParams(lam, mu, config.decision_rates[0])
    analytic.require_stable(params)
    n = config.n_updates
    low_power = n < LOW_POWER_UPDATES
    tol_scale = max(1.0, math.sqrt(LOW_POWER_UPDATES / n))
    significance = 0.01 if not low_power else 0.001
    checks: list[CheckResult] = []

    point_seed = derive_point_seed(config.seed, 0)
    trace = simulate(params, n, point_seed)
    warm = _warmup_count(config, n)
    warm_epoch = float(trace.departure_times[warm - 1]) if warm >= 1 else 0.0
    horizon = trace.last_departure
    theory = analytic.average_aud(params)

    # Monte Carlo mean age vs closed form, per decision rate, on one trace.
    estimates = {}
    for nu in config.decision_rates:
        decisions = _decisions_for(trace, nu, point_seed, config.periodic)
        est = _aud_estimate(decisions, warm_epoch, config.confidence)
        if est is None:
            raise ParameterError(f"no defined decisions at decision rate {nu}")
        estimates[nu] = est
    worst_rel = max(abs(e.mean - theory) / theory for e in estimates.values())
    checks.append(
        CheckResult(
            "aud_mc_vs_theory",
            worst_rel <= 0.01 * tol_scale,
            worst_rel,
            0.0,
            0.01 * tol_scale,
            f"theory={theory:.6g}; rates={sorted(estimates)}",
        )
    )

    if len(estimates) >= 2:
        rates = sorted(estimates)
        max_diff = max_allow = 0.0
        all_overlap = True
        for i, a in enumerate(rates):
            for b in rates[i + 1:]:
                diff = abs(estimates[a].mean - estimates[b].mean)
                allow = estimates[a].half_width + estimates[b].half_width
                if diff > max_diff:
                    max_diff, max_allow = diff, allow
                all_overlap = all_overlap and diff <= allow
        checks.append(
            CheckResult(
                "aud_nu_invariance",
                all_overlap,
                max_diff,
                0.0,
                max_allow,
                "pairwise CI overlap on shared trace",
            )
        )

    # Distributional checks (marginals), decorrelated where needed.  Short
    # runs cannot afford the full thinning stride; they keep at least 50
    # samples and accept the residual correlation (already low-power).
    post_warm_system = trace.system_times[warm:]
    lag = decorrelation_lag(params.utilization)
    if len(post_warm_system) // lag < 50:
        lag = max(1, len(post_warm_system) // 50)
    thinned = post_warm_system[::lag][:KS_MAX_SAMPLES]
    ks_t = ks_exponential(thinned, oracle_rate_scale * analytic.system_time_rate(params))
    checks.append(
        CheckResult(
            "ks_system_time",
            ks_t.p_value >= significance,
            ks_t.p_value,
            significance,
            0.0,
            f"n={ks_t.n}; D={ks_t.statistic:.6g}; lag={lag}",
        )
    )
    gaps = trace.interdeparture_times[warm:][:KS_MAX_SAMPLES]
    ks_y = ks_exponential(gaps, oracle_rate_scale * lam)
    checks.append(
        CheckResult(
            "ks_interdeparture",
            ks_y.p_value >= significance,
            ks_y.p_value,
            significance,
            0.0,
            f"n={ks_y.n}; D={ks_y.statistic:.6g}",
        )
    )
    rel_y1 = abs(float(gaps.mean()) - 1.0 / lam) * lam
    checks.append(
        CheckResult("interdeparture_mean", rel_y1 <= 0.01 * tol_scale, rel_y1, 0.0,
                    0.01 * tol_scale)
    )
    rel_y2 = abs(float((gaps**2).mean()) - 2.0 / lam**2) / (2.0 / lam**2)
    checks.append(
        CheckResult("interdeparture_second_moment", rel_y2 <= 0.02 * tol_scale, rel_y2,
                    0.0, 0.02 * tol_scale)
    )

    # Stationary occupancy head vs geometric law, batch CIs over time windows.
    # Eleven levels are asserted jointly, so each level gets a Bonferroni-
    # adjusted confidence to keep the family-wise false-alarm rate nominal.
    path = queue_length_process(trace)
    pi = analytic.stationary_queue_dist(params, 10)
    edges = np.linspace(warm_epoch, horizon, 101)
    per_batch = np.array(
        [occupancy_fractions(path, 10, edges[i], edges[i + 1]) for i in range(100)]
    )
    z = z_value(config.confidence)
    z_joint = z_value(1.0 - (1.0 - config.confidence) / len(pi))
    frac_mean = per_batch.mean(axis=0)
    frac_half = z_joint * per_batch.std(axis=0, ddof=1) / 10.0
    ratios = np.abs(frac_mean - pi) / np.where(frac_half > 0, frac_half, np.inf)
    worst_level = int(np.argmax(ratios))
    checks.append(
        CheckResult(
            "queue_length_distribution",
            bool((ratios <= 1.0).all()),
            float(ratios.max()),
            0.0,
            1.0,
            f"worst level {worst_level}",
        )
    )

    # Probability an arrival finds the server busy, within 3 batch-sigma.
    busy = (trace.interarrival_times[1:] < trace.system_times[:-1]).astype(float)[warm:]
    busy_est = batch_means_ci(busy, config.confidence)
    sigma = busy_est.half_width / z
    err = abs(busy_est.mean - params.utilization)
    checks.append(
        CheckResult("prob_busy_on_arrival", err <= 3.0 * sigma, err, 0.0, 3.0 * sigma)
    )

    # Transform identity: busy/idle mixture must reassemble the plain rate transform.
    s_stream = SeededStream(config.seed, 0xC0FFEE)
    s_hi = min(lam, mu)
    s_values = -2.0 * s_hi + 2.95 * s_hi * np.asarray(s_stream.uniform_open(10))
    worst_mgf = 0.0
    for s in s_values:
        mixed = params.utilization * analytic.interdeparture_mgf_given_busy_arrival(
            params, float(s)
        ) + (1.0 - params.utilization) * analytic.interdeparture_mgf_given_idle_arrival(
            params, float(s)
        )
        direct = analytic.interdeparture_mgf(params, float(s))
        worst_mgf = max(worst_mgf, abs(mixed - direct) / abs(direct))
    checks.append(
        CheckResult("mgf_mixture_identity", worst_mgf <= 1e-10, worst_mgf, 0.0, 1e-10)
    )

    # Cross moment of system time and following departure gap.
    prod = (trace.system_times[:-1] * trace.interdeparture_times)[warm:]
    cross_theory = analytic.cross_moment_system_interdeparture(params)
    rel_cross = abs(float(prod.mean()) - cross_theory) / cross_theory
    checks.append(
        CheckResult("cross_moment", rel_cross <= 0.02 * tol_scale, rel_cross, 0.0,
                    0.02 * tol_scale, f"theory={cross_theory:.6g}")
    )

    # Two derivations of the average age must coincide across the stable region.
    pair_stream = SeededStream(config.seed, 0xD0A1)
    u = np.asarray(pair_stream.uniform_open(200)).reshape(100, 2)
    worst_dual = 0.0
    for u_rho, u_mu in u:
        mu_r = 0.1 + 9.9 * u_mu
        rho_r = 0.01 + 0.98 * u_rho
        p = SystemParams(rho_r * mu_r, mu_r)
        direct = analytic.average_aud(p)
        renewal = analytic.average_aud_renewal(p)
        worst_dual = max(worst_dual, abs(direct - renewal) / direct)
    checks.append(
        CheckResult("aud_dual_path", worst_dual <= 1e-12, worst_dual, 0.0, 1e-12)
    )

    # Shape of the closed form: U in arrival rate, decreasing in service rate,
    # and blowing up faster as service capacity vanishes than as arrivals do.
    rho_grid = np.linspace(0.01, 0.99, 999)
    curve = np.array([analytic.average_aud(SystemParams(r, 1.0)) for r in rho_grid])
    interior_min = int(np.argmin(curve))
    rho_at_min = float(rho_grid[interior_min])
    u_ok = (
        0 < interior_min < len(curve) - 1
        and bool((np.diff(curve[: interior_min + 1]) < 0).all())
        and bool((np.diff(curve[interior_min:]) > 0).all())
        and 0.45 <= rho_at_min <= 0.60
    )
    checks.append(
        CheckResult("shape_lambda_u_curve", u_ok, rho_at_min, 0.525, 0.075,
                    "interior minimum of the arrival-rate sweep")
    )
    mu_grid = np.linspace(0.6, 3.0, 200)
    mu_curve = np.array([analytic.average_aud(SystemParams(0.5, m)) for m in mu_grid])
    mu_ok = bool((np.diff(mu_curve) < 0).all())
    checks.append(
        CheckResult("shape_mu_decreasing", mu_ok, float(np.max(np.diff(mu_curve))), 0.0, 0.0,
                    "age strictly decreases with service rate")
    )
    try:
        service_starved = analytic.average_aud(SystemParams(0.5, 0.05))
    except StabilityError:
        service_starved = math.inf  # unstable: the age has no finite steady state
    arrival_starved = analytic.average_aud(SystemParams(0.05, 0.5))
    checks.append(
        CheckResult(
            "shape_divergence_asymmetry",
            service_starved > arrival_starved,
            arrival_starved,
            service_starved,
            0.0,
            "service starvation must dominate arrival starvation",
        )
    )

    # Poisson decisions sample the time average of the age path (PASTA).
    if 1.0 not in estimates:
        decisions = _decisions_for(trace, 1.0, point_seed, config.periodic)
        estimates[1.0] = _aud_estimate(decisions, warm_epoch, config.confidence)
    sawtooth = aoi_path(trace)
    aoi_batches = np.array(
        [time_average_aoi(sawtooth, edges[i], edges[i + 1]) for i in range(100)]
    )
    aoi_mean = float(aoi_batches.mean())
    aoi_half = z * float(aoi_batches.std(ddof=1)) / 10.0
    aud_est = estimates[1.0]
    pasta_diff = abs(aoi_mean - aud_est.mean)
    pasta_allow = aoi_half + aud_est.half_width
    checks.append(
        CheckResult("pasta_time_average", pasta_diff <= pasta_allow, pasta_diff, 0.0,
                    pasta_allow, f"time-average age {aoi_mean:.6g}")
    )

    report = ValidationReport(config, tuple(checks), low_power)
    if config.output_path:
        report.write_csv(config.output_path)
        write_manifest(
            manifest_path_for(config.output_path), config, time.monotonic() - started
        )
    return report

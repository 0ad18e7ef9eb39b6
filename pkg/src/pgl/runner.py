"""Experiment orchestration: deterministic sweeps, aggregation, CSV/JSON.

Four experiment modes share one configuration object:

* quenched  - per-trial law of the match count given one sampled sequence;
* annealed  - the quenched trials plus their pattern-and-sequence average;
* bounds    - Stein-method error terms A, B, C per schedule and level;
* nonconv   - joint word/sequence trials probing the non-convergence
              mechanism (tail patterns that fail to appear).

Determinism contract: records are pure functions of the configuration.
Trial t draws its sequence seed as derive_seed(master_seed, t) (shared
across schedules and levels, so trial t examines nested prefixes of one
conceptual sequence per schedule) and its pattern seed as
derive_seed(master_seed, t, WORD_TAG).  Thread count never changes results:
tasks are mapped in a fixed order and reassembled positionally, and CSV
output excludes wall-clock fields (JSON carries them for diagnostics).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from .analytics import (
    UNION_BOUND_CAP,
    ChenSteinParams,
    ChenSteinReport,
    chen_stein_terms,
    critical_onset_index,
    symbol_sum_tail_mass,
    union_bound_hit_probability,
)
from .counter import DENSE_CAP, count_word, quenched_distribution, window_histogram
from .errors import CapabilityError, ResourceError
from .sampler import MAX_WORD_LEVEL, derive_seed, sample_sequence, sample_word
from .schedule import (
    cesaro_average,
    classify_kakutani,
    gamma,
    parse_schedule,
    validate,
)
from .stats import aggregate_annealed, binomial_ci, poisson_distribution, tv_distance

__all__ = [
    "DEFAULT_SCHEDULES",
    "DEFAULT_K_LIST",
    "SCHEMA_LINE",
    "ExperimentConfig",
    "ResultRecord",
    "BoundsRecord",
    "NonconvRecord",
    "run_quenched",
    "run_annealed",
    "run_bounds",
    "run_nonconv",
    "schedule_info",
    "records_to_csv",
    "records_to_json",
]

DEFAULT_SCHEDULES = ("logpow:0.25", "logpow:0.5", "logpow:1.0", "zero")
DEFAULT_K_LIST = (10, 12, 14, 16, 18, 20)
SCHEMA_LINE = "# pgl-schema v1"

# Pattern seeds must not collide with sequence seeds for the same trial.
_WORD_TAG = 0x57
# Monte Carlo seed namespace for the bounds mode.
_BOUNDS_TAG = 0xB0
# Histogram-based modes keep levels within the dense-counting envelope.
_MAX_SWEEP_LEVEL = DENSE_CAP

_CSV_COLUMNS = {
    "quenched": (
        "schedule", "k", "seed", "mode", "p0", "p1", "p2", "tv_to_po1", "status",
    ),
    "annealed": (
        "schedule", "k", "seed", "mode", "p0", "p1", "p2", "p0_stderr",
        "tv_to_po1", "status",
    ),
    "bounds": (
        "schedule", "k", "lambda", "A", "B", "B_mode", "C", "C_mode",
        "C_stderr", "total", "j0", "epsilon", "theta",
    ),
    "nonconv": (
        "schedule", "k", "eta", "trials", "tail_mass_exact", "tail_mass_normal",
        "p0_hat", "p0_lo", "p0_hi", "tail_rate", "tail_and_hit_rate",
        "union_bound_mean", "union_bound_samples", "status",
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One immutable description of a sweep; every record derives from it."""

    schedules: tuple[str, ...] = DEFAULT_SCHEDULES
    k_list: tuple[int, ...] = DEFAULT_K_LIST
    trials: int = 50
    master_seed: int = 1
    epsilon: float = 0.1
    theta: float = 0.25
    eta: float = 0.1
    mc_samples: int = 4096
    exact_cap: int = 20
    threads: int = 1
    time_limit: float | None = None
    union_bound_samples: int = 4

    def __post_init__(self) -> None:
        if not self.schedules:
            raise ValueError("need at least one schedule spec")
        if not self.k_list:
            raise ValueError("need at least one level k")
        for k in self.k_list:
            if not 1 <= int(k) <= MAX_WORD_LEVEL:
                raise ValueError(f"level {k} outside 1..{MAX_WORD_LEVEL}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 1/2)")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")
        if not 1 <= self.exact_cap <= 26:
            raise ValueError("exact_cap must lie in 1..26")
        if self.union_bound_samples < 0:
            raise ValueError("union_bound_samples must be >= 0")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive when set")
        self.parsed_schedules()  # malformed specs invalidate the config

    def parsed_schedules(self):
        return [parse_schedule(spec) for spec in self.schedules]

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResultRecord:
    """One quenched trial, or one annealed aggregate (mode field tells).

    A trial that hits a resource limit is emitted with status "error: ..."
    and None summaries; the sweep continues.
    """

    schedule: str
    k: int
    seed: int
    mode: str
    p0: float | None
    p1: float | None
    p2: float | None
    tv_to_po1: float | None
    p0_stderr: float | None = None
    status: str = "ok"
    wall_time_s: float = 0.0
    timeout: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundsRecord:
    """Stein-method error terms for one (schedule, level) cell."""

    schedule: str
    report: ChenSteinReport
    wall_time_s: float = 0.0
    timeout: bool = False

    def as_dict(self) -> dict:
        merged = {"schedule": self.schedule}
        merged.update(self.report.as_dict())
        merged["wall_time_s"] = self.wall_time_s
        merged["timeout"] = self.timeout
        return merged


@dataclass(frozen=True)
class NonconvRecord:
    """Joint word/sequence trials for one (schedule, level) cell.

    p0_hat estimates the annealed no-match probability with a Wilson 95%
    interval; tail_rate is the observed share of patterns in the negative
    symbol-sum tail, tail_and_hit_rate the share that were in the tail AND
    occurred at least once (the quantity that must vanish for slowly
    decaying bias); union_bound_mean averages the positionwise union bound
    over the first few tail patterns (None when none were seen or the level
    exceeds the union-bound envelope).
    """

    schedule: str
    k: int
    eta: float
    trials: int
    tail_mass_exact: float
    tail_mass_normal: float
    p0_hat: float
    p0_lo: float
    p0_hi: float
    tail_rate: float
    tail_and_hit_rate: float
    union_bound_mean: float | None
    union_bound_count: int
    status: str = "ok"
    wall_time_s: float = 0.0
    timeout: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Shared machinery


def _map_tasks(fn, tasks, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


_POISSON_ONE = None


def _poisson_one():
    global _POISSON_ONE
    if _POISSON_ONE is None:
        _POISSON_ONE = poisson_distribution(1.0)
    return _POISSON_ONE


def _require_sweep_levels(config: ExperimentConfig, mode: str) -> None:
    bad = [k for k in config.k_list if k > _MAX_SWEEP_LEVEL]
    if bad:
        raise CapabilityError(
            f"{mode} mode counts all 2^k windows; levels {bad} exceed {_MAX_SWEEP_LEVEL}"
        )


def _flag_timeout(config: ExperimentConfig, elapsed: float) -> bool:
    return config.time_limit is not None and elapsed > config.time_limit


# ---------------------------------------------------------------------------
# Quenched / annealed


def _quenched_one(schedule, k: int, seed: int, config: ExperimentConfig):
    start = time.perf_counter()
    try:
        sequence = sample_sequence(schedule, (1 << k) + k - 1, seed)
        law = quenched_distribution(window_histogram(sequence, k))
        tv = tv_distance(law, _poisson_one()).distance
    except (ResourceError, MemoryError) as exc:
        elapsed = time.perf_counter() - start
        record = ResultRecord(
            schedule=schedule.label,
            k=k,
            seed=seed,
            mode="quenched",
            p0=None,
            p1=None,
            p2=None,
            tv_to_po1=None,
            status=f"error: {exc}",
            wall_time_s=elapsed,
            timeout=_flag_timeout(config, elapsed),
        )
        return record, None
    elapsed = time.perf_counter() - start
    record = ResultRecord(
        schedule=schedule.label,
        k=k,
        seed=seed,
        mode="quenched",
        p0=law.mass(0),
        p1=law.mass(1),
        p2=law.mass(2),
        tv_to_po1=tv,
        wall_time_s=elapsed,
        timeout=_flag_timeout(config, elapsed),
    )
    return record, law


def _quenched_tasks(config: ExperimentConfig):
    schedules = config.parsed_schedules()
    return [
        (schedule, k, trial)
        for schedule in schedules
        for k in config.k_list
        for trial in range(config.trials)
    ]


def run_quenched(config: ExperimentConfig) -> list[ResultRecord]:
    """Per-trial quenched laws for every (schedule, level, trial)."""
    _require_sweep_levels(config, "quenched")
    tasks = _quenched_tasks(config)

    def work(task):
        schedule, k, trial = task
        seed = derive_seed(config.master_seed, trial)
        record, _ = _quenched_one(schedule, k, seed, config)
        return record

    records = _map_tasks(work, tasks, config.threads)
    return sorted(records, key=lambda r: (r.schedule, r.k, r.seed))


def run_annealed(config: ExperimentConfig) -> list[ResultRecord]:
    """Quenched trials plus, per (schedule, level), their trial average.

    Aggregate rows carry mode="annealed", the master seed, and the standard
    error of the no-match mass across trials.
    """
    _require_sweep_levels(config, "annealed")
    tasks = _quenched_tasks(config)

    def work(task):
        schedule, k, trial = task
        seed = derive_seed(config.master_seed, trial)
        record, law = _quenched_one(schedule, k, seed, config)
        return schedule.label, k, trial, record, law

    outcomes = _map_tasks(work, tasks, config.threads)
    trial_records = [item[3] for item in outcomes]

    groups: dict[tuple[str, int], list[tuple[int, object]]] = {}
    for label, k, trial, _, law in outcomes:
        groups.setdefault((label, k), []).append((trial, law))

    aggregates = []
    for (label, k), members in sorted(groups.items()):
        start = time.perf_counter()
        laws = [law for _, law in sorted(members, key=lambda item: item[0]) if law is not None]
        if not laws:
            aggregates.append(
                ResultRecord(
                    schedule=label,
                    k=k,
                    seed=config.master_seed,
                    mode="annealed",
                    p0=None,
                    p1=None,
                    p2=None,
                    tv_to_po1=None,
                    status="error: no successful trials to aggregate",
                )
            )
            continue
        mean_law, stderr = aggregate_annealed(laws)
        tv = tv_distance(mean_law, _poisson_one()).distance
        elapsed = time.perf_counter() - start
        aggregates.append(
            ResultRecord(
                schedule=label,
                k=k,
                seed=config.master_seed,
                mode="annealed",
                p0=mean_law.mass(0),
                p1=mean_law.mass(1),
                p2=mean_law.mass(2),
                tv_to_po1=tv,
                p0_stderr=stderr.get(0, 0.0),
                wall_time_s=elapsed,
                timeout=_flag_timeout(config, elapsed),
            )
        )

    trial_records.sort(key=lambda r: (r.schedule, r.k, r.seed))
    return trial_records + aggregates


# ---------------------------------------------------------------------------
# Bounds


def run_bounds(config: ExperimentConfig) -> list[BoundsRecord]:
    """Stein-method error terms for every (schedule, level)."""
    schedules = config.parsed_schedules()
    tasks = [(schedule, k) for schedule in schedules for k in config.k_list]

    def work(task):
        schedule, k = task
        start = time.perf_counter()
        params = ChenSteinParams(
            k=k,
            epsilon=config.epsilon,
            theta=config.theta,
            mc_samples=config.mc_samples,
            exact_cap=config.exact_cap,
            seed=derive_seed(config.master_seed, _BOUNDS_TAG),
        )
        report = chen_stein_terms(schedule, params)
        elapsed = time.perf_counter() - start
        return BoundsRecord(
            schedule=schedule.label,
            report=report,
            wall_time_s=elapsed,
            timeout=_flag_timeout(config, elapsed),
        )

    records = _map_tasks(work, tasks, config.threads)
    return sorted(records, key=lambda r: (r.schedule, r.report.k))


# ---------------------------------------------------------------------------
# Non-convergence probe


def run_nonconv(config: ExperimentConfig) -> list[NonconvRecord]:
    """Joint word/sequence trials per (schedule, level).

    Each trial draws an independent pattern and sequence, then checks
    whether the pattern lies in the negative symbol-sum tail and whether it
    occurs in the sequence at all.  The first union_bound_samples tail
    patterns (in trial order) also get an exact positionwise union bound.
    """
    _require_sweep_levels(config, "nonconv")
    schedules = config.parsed_schedules()
    tasks = [
        (schedule, k, trial)
        for schedule in schedules
        for k in config.k_list
        for trial in range(config.trials)
    ]

    def work(task):
        schedule, k, trial = task
        word = sample_word(k, derive_seed(config.master_seed, trial, _WORD_TAG))
        sequence = sample_sequence(
            schedule, (1 << k) + k - 1, derive_seed(config.master_seed, trial)
        )
        occurrences = count_word(sequence, word)
        symbol_sum = 2 * word.code.bit_count() - k
        in_tail = symbol_sum < -config.eta * math.sqrt(k)
        return schedule.label, k, trial, word, occurrences >= 1, in_tail

    outcomes = _map_tasks(work, tasks, config.threads)
    groups: dict[tuple[str, int], list] = {}
    schedule_by_label = {s.label: s for s in schedules}
    for label, k, trial, word, hit, in_tail in outcomes:
        groups.setdefault((label, k), []).append((trial, word, hit, in_tail))

    records = []
    for (label, k), members in sorted(groups.items()):
        start = time.perf_counter()
        members.sort(key=lambda item: item[0])
        trials = len(members)
        absent_count = sum(1 for _, _, hit, _ in members if not hit)
        tail_count = sum(1 for _, _, _, in_tail in members if in_tail)
        tail_hit = sum(1 for _, _, hit, in_tail in members if hit and in_tail)
        lo, hi = binomial_ci(absent_count, trials, 0.95)
        tail = symbol_sum_tail_mass(k, config.eta)

        union_values = []
        if k <= UNION_BOUND_CAP:
            schedule = schedule_by_label[label]
            for _, word, _, in_tail in members:
                if len(union_values) >= config.union_bound_samples:
                    break
                if in_tail:
                    union_values.append(
                        union_bound_hit_probability(schedule, k, word)
                    )
        union_mean = (
            sum(union_values) / len(union_values) if union_values else None
        )
        elapsed = time.perf_counter() - start
        records.append(
            NonconvRecord(
                schedule=label,
                k=k,
                eta=config.eta,
                trials=trials,
                tail_mass_exact=tail.exact,
                tail_mass_normal=tail.normal_approx,
                p0_hat=absent_count / trials,
                p0_lo=lo,
                p0_hi=hi,
                tail_rate=tail_count / trials,
                tail_and_hit_rate=tail_hit / trials,
                union_bound_mean=union_mean,
                union_bound_count=len(union_values),
                wall_time_s=elapsed,
                timeout=_flag_timeout(config, elapsed),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Schedule inspection


def schedule_info(spec_text: str) -> dict:
    """Parse, validate, and summarize one schedule spec string."""
    schedule = parse_schedule(spec_text)
    sample_points = (1, 2, 10, 100, 1000, 10**6)
    return {
        "spec": spec_text,
        "label": schedule.label,
        "kakutani": classify_kakutani(schedule).value,
        "violations": validate(schedule),
        "gamma": {str(n): gamma(schedule, n) for n in sample_points},
        "cesaro": {
            str(n): cesaro_average(schedule, n) for n in (10**3, 10**6)
        },
        "onset_index": critical_onset_index(schedule),
    }


# ---------------------------------------------------------------------------
# Serialization


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(mode: str, records) -> str:
    """Render records for one mode as deterministic CSV.

    The first line is the schema tag, then a header row, then one row per
    record.  Floats use shortest round-trip formatting; wall-clock fields
    are deliberately absent so repeated runs are byte-identical.
    """
    if mode not in _CSV_COLUMNS:
        raise ValueError(f"unknown mode {mode!r}")
    columns = _CSV_COLUMNS[mode]
    buffer = io.StringIO()
    buffer.write(SCHEMA_LINE + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        data = record.as_dict()
        if "union_bound_count" in data:
            data["union_bound_samples"] = data["union_bound_count"]
        writer.writerow([_format_cell(data.get(col)) for col in columns])
    return buffer.getvalue()


def records_to_json(mode: str, records, config: ExperimentConfig | None = None) -> str:
    """Render records as JSON, including wall-clock diagnostics."""
    payload = {
        "schema": SCHEMA_LINE.lstrip("# "),
        "mode": mode,
        "records": [record.as_dict() for record in records],
    }
    if config is not None:
        payload["config"] = config.as_dict()
    return json.dumps(payload, indent=2) + "\n"

"""Command-line interface for the experiment runner.

Subcommands: quenched, annealed, bounds, nonconv, schedule-info, selftest.
Sweep options may come from flags or from a JSON config file (--config);
explicit flags override file values, which override built-in defaults.

Exit codes: 0 success, 1 usage or configuration error, 2 capability or
resource limit (including selftest failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CapabilityError, ResourceError
from .runner import (
    DEFAULT_K_LIST,
    DEFAULT_SCHEDULES,
    ExperimentConfig,
    records_to_csv,
    records_to_json,
    run_annealed,
    run_bounds,
    run_nonconv,
    run_quenched,
    schedule_info,
)

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_sweep_options(sub: argparse.ArgumentParser, *, with_eta: bool) -> None:
    sub.add_argument(
        "--schedule",
        action="append",
        metavar="SPEC[,SPEC...]",
        help=(
            "bias schedule spec (repeatable or comma-separated); one of "
            "zero | const:<c0> | logpow:<c>[:cap=<v>][:n0=<n>] | "
            f"table:<path>[:tail=zero|repeat]; default {','.join(DEFAULT_SCHEDULES)}"
        ),
    )
    sub.add_argument(
        "--k",
        action="append",
        metavar="K[,K...]",
        help=f"window levels (repeatable or comma-separated); default "
        f"{','.join(str(k) for k in DEFAULT_K_LIST)}",
    )
    sub.add_argument("--trials", type=int, help="trials per (schedule, k); default 50")
    sub.add_argument("--seed", type=int, help="master seed; default 1")
    sub.add_argument("--epsilon", type=float, help="head-block exponent in (0,1); default 0.1")
    sub.add_argument("--theta", type=float, help="concentration exponent in (0,1/2); default 0.25")
    if with_eta:
        sub.add_argument("--eta", type=float, help="tail-set depth >= 0; default 0.1")
    sub.add_argument("--mc-samples", type=int, help="Monte Carlo pattern samples; default 4096")
    sub.add_argument("--exact-cap", type=int, help="largest k for exact 2^k enumerations; default 20")
    sub.add_argument("--threads", type=int, help="worker threads; default 1")
    sub.add_argument("--time-limit", type=float, help="per-record soft wall-time flag, seconds")
    sub.add_argument("--config", metavar="PATH", help="JSON file with config fields; flags override")
    sub.add_argument("--out", metavar="PATH", help="output file; default stdout")
    sub.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pgl",
        description=(
            "Exact and Monte Carlo experiments on window-match counts of "
            "biased binary sequences against the Poisson(1) benchmark."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    quenched = commands.add_parser(
        "quenched", help="per-trial match-count laws for sampled sequences"
    )
    _add_sweep_options(quenched, with_eta=False)
    quenched.set_defaults(handler=_cmd_quenched)

    annealed = commands.add_parser(
        "annealed", help="quenched trials plus their per-cell average law"
    )
    _add_sweep_options(annealed, with_eta=False)
    annealed.set_defaults(handler=_cmd_annealed)

    bounds = commands.add_parser(
        "bounds", help="Stein-method Poisson approximation error terms A, B, C"
    )
    _add_sweep_options(bounds, with_eta=False)
    bounds.set_defaults(handler=_cmd_bounds)

    nonconv = commands.add_parser(
        "nonconv", help="joint pattern/sequence probe of the non-convergence mechanism"
    )
    _add_sweep_options(nonconv, with_eta=True)
    nonconv.add_argument(
        "--union-bound-samples",
        type=int,
        help="tail patterns given an exact union bound per cell; default 4",
    )
    nonconv.set_defaults(handler=_cmd_nonconv)

    info = commands.add_parser(
        "schedule-info", help="parse, validate, and summarize a schedule spec"
    )
    info.add_argument("spec", help="schedule spec string")
    info.add_argument("--out", metavar="PATH", help="output file; default stdout")
    info.set_defaults(handler=_cmd_schedule_info)

    selftest = commands.add_parser(
        "selftest", help="quick internal consistency battery (exit 0 or 2)"
    )
    selftest.set_defaults(handler=_cmd_selftest)

    return parser


# ---------------------------------------------------------------------------
# Config assembly


def _split_multi(values) -> list[str]:
    items: list[str] = []
    for value in values:
        items.extend(part.strip() for part in value.split(",") if part.strip())
    return items


_FLAG_TO_FIELD = {
    "trials": "trials",
    "seed": "master_seed",
    "epsilon": "epsilon",
    "theta": "theta",
    "eta": "eta",
    "mc_samples": "mc_samples",
    "exact_cap": "exact_cap",
    "threads": "threads",
    "time_limit": "time_limit",
    "union_bound_samples": "union_bound_samples",
}


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {config_path!r} is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {config_path!r} must hold a JSON object")
        field_names = set(ExperimentConfig.__dataclass_fields__)
        unknown = sorted(set(loaded) - field_names)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        data.update(loaded)

    if getattr(args, "schedule", None):
        data["schedules"] = _split_multi(args.schedule)
    if getattr(args, "k", None):
        k_items = _split_multi(args.k)
        try:
            data["k_list"] = [int(item) for item in k_items]
        except ValueError:
            raise ValueError(f"--k expects integers, got {k_items!r}")
    for flag, column in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[column] = value

    if "schedules" in data:
        data["schedules"] = tuple(str(s) for s in data["schedules"])
    if "k_list" in data:
        data["k_list"] = tuple(int(k) for k in data["k_list"])
    return ExperimentConfig(**data)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _write_records(args: argparse.Namespace, mode: str, records, config) -> None:
    if args.format == "json":
        text = records_to_json(mode, records, config)
    else:
        text = records_to_csv(mode, records)
    _emit(text, args.out)


# ---------------------------------------------------------------------------
# Handlers


def _cmd_quenched(args) -> int:
    config = _build_config(args)
    _write_records(args, "quenched", run_quenched(config), config)
    return 0


def _cmd_annealed(args) -> int:
    config = _build_config(args)
    _write_records(args, "annealed", run_annealed(config), config)
    return 0


def _cmd_bounds(args) -> int:
    config = _build_config(args)
    _write_records(args, "bounds", run_bounds(config), config)
    return 0


def _cmd_nonconv(args) -> int:
    config = _build_config(args)
    _write_records(args, "nonconv", run_nonconv(config), config)
    return 0


def _cmd_schedule_info(args) -> int:
    info = schedule_info(args.spec)
    _emit(json.dumps(info, indent=2) + "\n", args.out)
    return 0


def _cmd_selftest(args) -> int:
    failures = 0
    for name, check in _selftest_battery():
        try:
            check()
        except AssertionError as exc:
            failures += 1
            print(f"FAIL - {name}: {exc}")
        except Exception as exc:  # pragma: no cover - defensive
            failures += 1
            print(f"FAIL - {name}: unexpected {type(exc).__name__}: {exc}")
        else:
            print(f"ok - {name}")
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 2
    print("selftest: all checks passed")
    return 0


def _selftest_battery():
    import math
    import tempfile

    import numpy as np

    from . import analytics, counter, sampler, schedule, stats

    def check_schedule():
        sched = schedule.parse_schedule("logpow:1.0")
        assert abs(sched.gamma(55) - 1.0 / math.log(55)) < 1e-15, "logpow value"
        assert schedule.parse_schedule("zero").label == "zero", "zero label"
        assert (
            schedule.classify_kakutani(schedule.Zero())
            is schedule.KakutaniClass.EQUIVALENT
        ), "zero class"
        assert (
            schedule.classify_kakutani(sched) is schedule.KakutaniClass.SINGULAR
        ), "logpow class"
        assert not schedule.validate(sched), "logpow validates clean"

    def check_sampler():
        sched = schedule.LogPower(0.5)
        a = sampler.sample_sequence(sched, 4096, 7)
        b = sampler.sample_sequence(sched, 4096, 7)
        assert np.array_equal(a.bits01, b.bits01), "same seed, same bits"
        c = sampler.sample_sequence(sched, 1024, 7)
        assert np.array_equal(a.bits01[:1024], c.bits01), "prefix purity"

    def check_counter():
        sched = schedule.Constant(0.2)
        seq = sampler.sample_sequence(sched, (1 << 10) + 9, 3)
        hist = counter.window_histogram(seq, 10)
        law = counter.quenched_distribution(hist)
        exact_mean = law.exact_mean()
        assert exact_mean is not None and exact_mean == 1, "quenched mean is 1"

    def check_analytics():
        rep = analytics.chen_stein_terms(schedule.Zero(), analytics.ChenSteinParams(k=3))
        assert abs(rep.a_term - 34 / 64) < 1e-15, "A term, level 3"
        assert abs(rep.b_term - 26 / 64) < 1e-15, "B term, level 3"
        assert rep.c_term == 0.0, "C term vanishes for the fair coin"
        mean = analytics.exact_likelihood_mean(schedule.LogPower(1.0), 5, 10)
        assert abs(mean - 1.0) < 1e-12, "likelihood mean is 1"
        tail = analytics.symbol_sum_tail_mass(4, 1.0)
        assert abs(tail.exact - 1 / 16) < 1e-15, "binomial tail, level 4"

    def check_stats():
        po1 = stats.poisson_distribution(1.0)
        assert stats.tv_distance(po1, po1).distance == 0.0, "TV self-distance"
        lo, hi = stats.binomial_ci(50, 100, 0.95)
        assert lo < 0.5 < hi, "Wilson interval covers the point estimate"

    def check_exact_annealed():
        law = analytics.exact_annealed_pmf(schedule.Constant(0.1), 2)
        assert abs(law.mean() - 1.0) < 1e-12, "exact annealed mean is 1"
        assert abs(sum(law.pmf.values()) - 1.0) < 1e-12, "exact annealed total mass"

    def check_bit_roundtrip():
        seq = sampler.sample_sequence(schedule.LogPower(1.0), 777, 11)
        with tempfile.TemporaryDirectory() as tmp:
            path = f"{tmp}/dump.pgl"
            sampler.write_bits(path, seq, level=9)
            loaded, level = sampler.read_bits(path)
            assert level == 9, "level tag survives"
            assert np.array_equal(loaded.bits01, seq.bits01), "payload survives"

    return [
        ("schedule grammar and classification", check_schedule),
        ("sampler determinism and prefix purity", check_sampler),
        ("counter quenched mean", check_counter),
        ("analytics exact terms", check_analytics),
        ("stats distances and intervals", check_stats),
        ("exact annealed law", check_exact_annealed),
        ("bit dump round trip", check_bit_roundtrip),
    ]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CapabilityError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

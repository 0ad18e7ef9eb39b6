"""Bias schedules: per-position coin biases gamma_n for product measures.

A schedule assigns to every position n >= 1 a bias gamma_n in (-1/2, 1/2);
the sampled sequence has P(x_n = +1) = 1/2 + gamma_n independently.  Four
kinds are supported: identically zero (fair coin), constant, log-power decay
gamma_n = min(cap, (ln n)^-c), and explicit tables with a tail rule.

Natural logarithm throughout; swapping the base would only rescale the decay
constants, not the threshold structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "BiasSchedule",
    "Zero",
    "Constant",
    "LogPower",
    "Table",
    "KakutaniClass",
    "gamma",
    "gamma_slice",
    "validate",
    "classify_kakutani",
    "cesaro_average",
    "parse_schedule",
    "first_persistent_below",
    "PROBE_GRID",
]

# Geometric probe grid used by validate(): {1, 2, 4, ..., 2^40}.
PROBE_GRID = tuple(1 << m for m in range(41))

_DEFAULT_CAP = 0.49
_DEFAULT_N0 = 2


class KakutaniClass(Enum):
    """Dichotomy class of the product measure against the fair-coin measure.

    The measures are equivalent iff sum(gamma_n^2) converges, singular iff it
    diverges; UNKNOWN is reported when the kind does not determine the tail.
    """

    EQUIVALENT = "equivalent"
    SINGULAR = "singular"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BiasSchedule:
    """Base type; concrete kinds implement ``gamma`` and ``label``."""

    def gamma(self, n: int) -> float:
        raise NotImplementedError

    def gamma_slice(self, start: int, count: int) -> np.ndarray:
        """Vector of gamma at positions start, ..., start+count-1 (1-based).

        Positions above 2^53 collapse to float64 resolution; the bias varies
        so slowly there that the loss is far below every tolerance used here.
        """
        if start < 1 or count < 0:
            raise ValueError("positions are 1-based and count must be >= 0")
        ns = start + np.arange(count, dtype=np.float64)
        return self._gamma_array(ns)

    def _gamma_array(self, ns: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(BiasSchedule):
    """Fair coin: gamma_n = 0 for all n."""

    def gamma(self, n: int) -> float:
        _check_index(n)
        return 0.0

    def _gamma_array(self, ns: np.ndarray) -> np.ndarray:
        return np.zeros_like(ns)

    @property
    def label(self) -> str:
        return "zero"


@dataclass(frozen=True)
class Constant(BiasSchedule):
    """Fixed bias gamma_n = value at every position."""

    value: float

    def gamma(self, n: int) -> float:
        _check_index(n)
        return self.value

    def _gamma_array(self, ns: np.ndarray) -> np.ndarray:
        return np.full_like(ns, self.value)

    @property
    def label(self) -> str:
        return f"const:{self.value!r}"


@dataclass(frozen=True)
class LogPower(BiasSchedule):
    """Log-power decay: gamma_n = min(cap, (ln n)^-exponent) for n >= n0.

    Positions below n0, and any position where the formula reaches 1/2 or
    more, are clipped to ``cap``.  Non-increasing in n for n >= 2, which the
    threshold analysis relies on.
    """

    exponent: float
    cap: float = _DEFAULT_CAP
    n0: int = _DEFAULT_N0

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise ValueError("LogPower exponent must be > 0")
        if not 0 < self.cap < 0.5:
            raise ValueError("LogPower cap must lie in (0, 1/2)")
        if self.n0 < 2:
            raise ValueError("LogPower n0 must be >= 2")

    def gamma(self, n: int) -> float:
        _check_index(n)
        if n < self.n0:
            return self.cap
        return min(self.cap, math.log(n) ** -self.exponent)

    def _gamma_array(self, ns: np.ndarray) -> np.ndarray:
        out = np.full_like(ns, self.cap)
        m = ns >= self.n0
        if np.any(m):
            out[m] = np.minimum(self.cap, np.log(ns[m]) ** -self.exponent)
        return out

    @property
    def label(self) -> str:
        parts = [f"logpow:{self.exponent!r}"]
        if self.cap != _DEFAULT_CAP:
            parts.append(f"cap={self.cap!r}")
        if self.n0 != _DEFAULT_N0:
            parts.append(f"n0={self.n0}")
        return ":".join(parts)


@dataclass(frozen=True)
class Table(BiasSchedule):
    """Explicit bias values for the first len(values) positions.

    ``tail`` decides positions beyond the table: "repeat" holds the last
    value, "zero" switches to a fair coin.
    """

    values: tuple[float, ...]
    tail: str = "repeat"
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ValueError("Table schedule needs at least one value")
        if self.tail not in ("repeat", "zero"):
            raise ValueError("Table tail rule must be 'repeat' or 'zero'")

    def gamma(self, n: int) -> float:
        _check_index(n)
        if n <= len(self.values):
            return self.values[n - 1]
        return self.values[-1] if self.tail == "repeat" else 0.0

    def _gamma_array(self, ns: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.values, dtype=np.float64)
        tail_value = vals[-1] if self.tail == "repeat" else 0.0
        out = np.full_like(ns, tail_value)
        m = ns <= len(vals)
        if np.any(m):
            out[m] = vals[ns[m].astype(np.int64) - 1]
        return out

    @property
    def label(self) -> str:
        if self.source is not None:
            base = f"table:{self.source}"
        else:
            base = f"table:<{len(self.values)} values>"
        return base if self.tail == "repeat" else f"{base}:tail=zero"


def _check_index(n: int) -> None:
    if n < 1:
        raise ValueError(f"positions are 1-based, got {n}")


def gamma(schedule: BiasSchedule, n: int) -> float:
    """Bias at position n (1-based).  Accepts arbitrarily large indices."""
    return schedule.gamma(n)


def gamma_slice(schedule: BiasSchedule, start: int, count: int) -> np.ndarray:
    """Biases at positions start..start+count-1 as a float64 vector."""
    return schedule.gamma_slice(start, count)


def validate(schedule: BiasSchedule, extra_indices: Sequence[int] = ()) -> list[str]:
    """Check the schedule on the geometric probe grid plus caller indices.

    Returns violation messages (empty list means clean); out-of-range values
    are data to report, not exceptions.
    """
    violations: list[str] = []
    probes = sorted(set(PROBE_GRID) | {int(n) for n in extra_indices})
    for n in probes:
        if n < 1:
            violations.append(f"index {n}: positions are 1-based")
            continue
        g = schedule.gamma(n)
        if not -0.5 < g < 0.5:
            violations.append(f"gamma({n}) = {g!r} outside (-1/2, 1/2)")
        if not math.isfinite(g):
            violations.append(f"gamma({n}) = {g!r} is not finite")
    if isinstance(schedule, LogPower):
        # Decay kinds must be non-increasing from position 2 on.
        for n in probes:
            if n < 2:
                continue
            if schedule.gamma(n + 1) > schedule.gamma(n) + 1e-15:
                violations.append(
                    f"gamma({n + 1}) > gamma({n}): decay schedule not non-increasing"
                )
    return violations


def classify_kakutani(schedule: BiasSchedule) -> KakutaniClass:
    """Analytic dichotomy class for the known kinds.

    Zero -> equivalent; nonzero constant -> singular; log-power decay ->
    singular (the squared biases sum like n / log^2c n); tables are
    equivalent when the tail rule is zero and unknown otherwise.
    """
    if isinstance(schedule, Zero):
        return KakutaniClass.EQUIVALENT
    if isinstance(schedule, Constant):
        return KakutaniClass.EQUIVALENT if schedule.value == 0 else KakutaniClass.SINGULAR
    if isinstance(schedule, LogPower):
        return KakutaniClass.SINGULAR
    if isinstance(schedule, Table):
        return KakutaniClass.EQUIVALENT if schedule.tail == "zero" else KakutaniClass.UNKNOWN
    return KakutaniClass.UNKNOWN


def cesaro_average(schedule: BiasSchedule, n_terms: int) -> float:
    """Mean of gamma_1..gamma_N; tends to 0 for admissible decay schedules."""
    if n_terms < 1:
        raise ValueError("cesaro_average needs at least one term")
    total = 0.0
    start = 1
    remaining = n_terms
    while remaining > 0:
        count = min(remaining, 1 << 22)
        total += float(schedule.gamma_slice(start, count).sum())
        start += count
        remaining -= count
    return total / n_terms


def first_persistent_below(schedule: BiasSchedule, bound: float) -> int | None:
    """Smallest n with gamma(m) < bound for every m >= n, or None.

    Uses kind structure: constants are all-or-nothing, log-power decay is
    monotone (binary search), tables reduce to the tail rule plus a finite
    scan.  The search ceiling is 2^63.
    """
    if isinstance(schedule, Zero):
        return 1 if 0.0 < bound else None
    if isinstance(schedule, Constant):
        return 1 if schedule.value < bound else None
    if isinstance(schedule, Table):
        tail_value = schedule.values[-1] if schedule.tail == "repeat" else 0.0
        if not tail_value < bound:
            return None
        last_bad = 0
        for idx, v in enumerate(schedule.values, start=1):
            if not v < bound:
                last_bad = idx
        return last_bad + 1
    if isinstance(schedule, LogPower):
        ceiling = 1 << 63
        if schedule.cap < bound:
            return 1
        if not schedule.gamma(ceiling) < bound:
            return None
        lo, hi = 1, ceiling  # gamma(lo) >= bound > gamma(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if schedule.gamma(mid) < bound:
                hi = mid
            else:
                lo = mid
        return hi
    raise ValueError(f"unsupported schedule kind: {type(schedule).__name__}")


def parse_schedule(text: str) -> BiasSchedule:
    """Parse the CLI grammar: zero | const:<c0> | logpow:<c>[:cap=<v>][:n0=<n>]
    | table:<path>[:tail=zero].

    Raises ValueError with the offending fragment on malformed input.
    """
    spec = text.strip()
    if not spec:
        raise ValueError("empty schedule spec")
    head, _, rest = spec.partition(":")
    kind = head.lower()
    if kind == "zero":
        if rest:
            raise ValueError(f"schedule spec {spec!r}: 'zero' takes no arguments")
        return Zero()
    if kind == "const":
        return Constant(value=_parse_float(rest, spec, "constant bias"))
    if kind == "logpow":
        parts = rest.split(":") if rest else []
        if not parts or parts[0] == "":
            raise ValueError(f"schedule spec {spec!r}: logpow needs an exponent")
        exponent = _parse_float(parts[0], spec, "exponent")
        cap = _DEFAULT_CAP
        n0 = _DEFAULT_N0
        for part in parts[1:]:
            key, eq, value = part.partition("=")
            if not eq:
                raise ValueError(f"schedule spec {spec!r}: expected key=value, got {part!r}")
            if key == "cap":
                cap = _parse_float(value, spec, "cap")
            elif key == "n0":
                try:
                    n0 = int(value)
                except ValueError:
                    raise ValueError(f"schedule spec {spec!r}: n0 must be an integer") from None
            else:
                raise ValueError(f"schedule spec {spec!r}: unknown option {key!r}")
        return LogPower(exponent=exponent, cap=cap, n0=n0)
    if kind == "table":
        if not rest:
            raise ValueError(f"schedule spec {spec!r}: table needs a file path")
        tail = "repeat"
        path_text = rest
        if path_text.endswith(":tail=zero"):
            tail = "zero"
            path_text = path_text[: -len(":tail=zero")]
        elif path_text.endswith(":tail=repeat"):
            path_text = path_text[: -len(":tail=repeat")]
        values = _load_table(Path(path_text))
        return Table(values=values, tail=tail, source=path_text)
    raise ValueError(f"schedule spec {spec!r}: unknown kind {head!r}")


def _parse_float(text: str, spec: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"schedule spec {spec!r}: bad {what} {text!r}") from None


def _load_table(path: Path) -> tuple[float, ...]:
    """Read one decimal bias per line; blank lines and '#' comments skipped."""
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read table file {path}: {exc}") from None
    values: list[float] = []
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            values.append(float(body))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a decimal bias: {body!r}") from None
    if not values:
        raise ValueError(f"table file {path} contains no values")
    return tuple(values)

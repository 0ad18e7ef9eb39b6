"""Exact and Monte Carlo analytics for window-hit statistics.

Setting: a sequence is sampled with per-position biases gamma_n (schedule),
a level-k pattern w with symbols omega_i = +-1 is drawn uniformly, and
I_j indicates that the window at position j matches w.  Everything here
follows from the likelihood ratio of a window against the fair coin,

    R_j(w) = prod_{i=1}^k (1 + 2 omega_i gamma_{i+j-1}),

which satisfies P(window j matches w) = 2^-k R_j(w) and has mean exactly 1
over uniform w.  The module computes:

* exact pattern-averaged quantities by enumerating all 2^k patterns in
  Gray-code order (each step flips one symbol, so the log-likelihood updates
  by one term; the enumeration is a cumulative sum in extended precision);
* exact joint hit probabilities for two windows, disjoint (closed form) or
  overlapping (the sum over shift-compatible patterns factorizes over
  residue classes of the overlap distance);
* the three Stein-method error terms A, B, C bounding the total-variation
  distance between the law of the total match count and Poisson(1);
* the ingredients of the non-convergence mechanism at slowly decaying bias:
  balanced products, the mass of patterns with atypically negative symbol
  sum, and the union bound for the hit probability of a fixed pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binom as _binom

from .counter import CountDistribution
from .errors import CapabilityError
from .sampler import Word, derive_seed, sample_words
from .schedule import BiasSchedule, first_persistent_below

__all__ = [
    "ChenSteinParams",
    "ChenSteinReport",
    "BalancedSpec",
    "TailMass",
    "OutlierMass",
    "likelihood_ratio",
    "hit_probability",
    "log_likelihood_values",
    "exact_likelihood_mean",
    "pair_hit_probability",
    "overlap_pair_probabilities",
    "mean_abs_likelihood_deviation",
    "outlier_mass",
    "chen_stein_terms",
    "exact_annealed_pmf",
    "balanced_product",
    "symbol_sum_tail_mass",
    "union_bound_hit_probability",
    "critical_onset_index",
    "EXACT_ANNEALED_CAP",
    "UNION_BOUND_CAP",
]

# Exact full-position sums cost 2^k enumerations of 2^k patterns; 2k <= 26
# keeps that under ~10^8 elementary updates.
_FULL_SUM_CAP = 13
# All-prefix enumeration for the exact annealed law costs 2^(2^k + k - 1).
EXACT_ANNEALED_CAP = 4
# Union bounds scan all 2^k window positions.
UNION_BOUND_CAP = 30
# Onset threshold for per-factor control: positions with 1 + 2 gamma_n below
# 2^(1/4) make every overlap-pair factor small enough for the 2^(-3k/2) bound.
_ONSET_FACTOR_BOUND = (2.0 ** 0.25 - 1.0) / 2.0


@dataclass(frozen=True)
class ChenSteinParams:
    """Knobs for the Stein-method error terms at level k.

    exact_cap is the largest k for which 2^k-pattern enumerations run exactly
    (memory for the cached Gray tables grows like 2^k; 26 is the hard ceiling,
    20 the comfortable default).  mc_samples sizes the Monte Carlo fallback;
    seed makes it reproducible.
    """

    k: int
    epsilon: float = 0.1
    theta: float = 0.25
    mc_samples: int = 4096
    exact_cap: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("level k must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 1/2)")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")
        if not 1 <= self.exact_cap <= 26:
            raise ValueError("exact_cap must lie in 1..26")


@dataclass(frozen=True)
class ChenSteinReport:
    """The three error terms and their provenance.

    total = A + B + C upper-bounds the total-variation distance between the
    law of the match count over 2^k windows and Poisson(1); modes record
    whether each term is exact, a monotone/analytic bound, or Monte Carlo
    (with standard error).
    """

    k: int
    lam: float
    a_term: float
    b_term: float
    b_mode: str
    c_term: float
    c_mode: str
    c_stderr: float
    total: float
    onset_index: int | None
    epsilon: float
    theta: float

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": self.lam,
            "A": self.a_term,
            "B": self.b_term,
            "B_mode": self.b_mode,
            "C": self.c_term,
            "C_mode": self.c_mode,
            "C_stderr": self.c_stderr,
            "total": self.total,
            "j0": self.onset_index,
            "epsilon": self.epsilon,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class BalancedSpec:
    """Disjoint, equally sized index sets inside 1..k for balanced products."""

    k: int
    plus: tuple[int, ...]
    minus: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("level k must be >= 1")
        pset, mset = set(self.plus), set(self.minus)
        if len(pset) != len(self.plus) or len(mset) != len(self.minus):
            raise ValueError("index sets must not repeat indices")
        if pset & mset:
            raise ValueError("index sets must be disjoint")
        if len(pset) != len(mset):
            raise ValueError("index sets must have equal sizes")
        for i in pset | mset:
            if not 1 <= i <= self.k:
                raise ValueError(f"index {i} outside 1..{self.k}")


@dataclass(frozen=True)
class TailMass:
    """Exact and Gaussian-approximate mass of a symbol-sum tail set."""

    exact: float
    normal_approx: float


@dataclass(frozen=True)
class OutlierMass:
    """Measured mass outside a concentration set, and its Chebyshev bound."""

    outside_mass: float
    chebyshev_bound: float


# ---------------------------------------------------------------------------
# Gray-code enumeration over all 2^k patterns


@lru_cache(maxsize=4)
def _gray_tables(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-step flip data for the Gray-code walk over k-bit patterns.

    Step t (1-based) flips bit ctz(t); the second array says whether the bit
    flips up (0 -> 1).  Cached per k; treat the arrays as read-only.
    """
    t = np.arange(1, 1 << k, dtype=np.uint64)
    low = t & (~t + np.uint64(1))
    flip_index = np.log2(low.astype(np.float64)).astype(np.int64)
    gray = t ^ (t >> np.uint64(1))
    flip_up = ((gray >> flip_index.astype(np.uint64)) & np.uint64(1)).astype(bool)
    return flip_index, flip_up


def _gray_values(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    """sum over set bits of plus[i], over clear bits of minus[i], for all
    2^k patterns, in Gray-code order.

    One flipped symbol per step means one added/removed term; the whole
    enumeration is a cumulative sum, run in extended precision so that the
    drift over 2^k steps stays far below 1e-9.
    """
    k = len(plus)
    flip_index, flip_up = _gray_tables(k)
    delta = np.asarray(plus, dtype=np.float64) - np.asarray(minus, dtype=np.float64)
    values = np.empty(1 << k, dtype=np.longdouble)
    values[0] = math.fsum(float(v) for v in minus)
    steps = np.where(flip_up, delta[flip_index], -delta[flip_index])
    values[1:] = steps
    np.cumsum(values, out=values)
    return values.astype(np.float64)


def log_likelihood_values(schedule: BiasSchedule, j: int, k: int) -> np.ndarray:
    """log R_j(w) for every level-k pattern w (Gray-code order)."""
    if j < 1 or k < 1:
        raise ValueError("window position and level must be >= 1")
    two_gamma = 2.0 * schedule.gamma_slice(j, k)
    return _gray_values(np.log1p(two_gamma), np.log1p(-two_gamma))


def exact_likelihood_mean(schedule: BiasSchedule, j: int, k: int) -> float:
    """Mean of R_j over all 2^k patterns; identically 1 up to roundoff."""
    return float(np.exp(log_likelihood_values(schedule, j, k)).mean())


# ---------------------------------------------------------------------------
# Likelihood ratios and hit probabilities


def likelihood_ratio(schedule: BiasSchedule, j: int, word: Word) -> float:
    """R_j(w) = prod_i (1 + 2 omega_i gamma_{i+j-1})."""
    if j < 1:
        raise ValueError("window position must be >= 1")
    two_gamma = 2.0 * schedule.gamma_slice(j, word.k)
    signs = np.fromiter(word.symbols(), dtype=np.float64, count=word.k)
    return float(np.prod(1.0 + signs * two_gamma))


def hit_probability(schedule: BiasSchedule, j: int, word: Word) -> float:
    """P(window at j equals w) = 2^-k R_j(w)."""
    return math.ldexp(likelihood_ratio(schedule, j, word), -word.k)


def pair_hit_probability(
    schedule: BiasSchedule, i: int, j: int, k: int, exact_cap: int = 26
) -> float:
    """P(windows at i and j both match one shared uniform pattern), exact.

    Disjoint windows (|i-j| >= k): the pattern average factorizes per symbol
    into 2^-2k prod_t (1 + 4 gamma_{t+i-1} gamma_{t+j-1}).

    Overlapping windows (0 < |i-j| < k): only patterns that equal their own
    shift by d = |i-j| can match twice; they are determined by their first d
    symbols, and the joint probability is the biased probability of the
    (k+d)-symbol juxtaposition.  The sum over the 2^d compatible patterns
    factorizes over residue classes mod d (see overlap_pair_probabilities).
    """
    if i < 1 or j < 1 or k < 1:
        raise ValueError("positions and level must be >= 1")
    if i == j:
        raise ValueError("pair positions must differ")
    lo, hi = min(i, j), max(i, j)
    d = hi - lo
    if d >= k:
        gi = schedule.gamma_slice(lo, k)
        gj = schedule.gamma_slice(hi, k)
        return math.ldexp(float(np.prod(1.0 + 4.0 * gi * gj)), -2 * k)
    if k > exact_cap:
        raise CapabilityError(
            f"overlap pair expectation at level {k} exceeds exact_cap {exact_cap}"
        )
    return float(overlap_pair_probabilities(schedule, k, d, lo, 1)[0])


def overlap_pair_probabilities(
    schedule: BiasSchedule, k: int, distance: int, i_start: int, count: int
) -> np.ndarray:
    """Joint hit probabilities for window pairs (i, i+distance), vectorized
    over i = i_start..i_start+count-1, for overlap distance 0 < d < k.

    For each i the value is
        2^-(2k+d) * prod_{r=1}^{d} [ prod_{t = r, r+d, ... <= k+d} (1 + 2 g_t)
                                   + prod_{t = r, r+d, ... <= k+d} (1 - 2 g_t) ]
    with g_t = gamma_{i+t-1}: patterns compatible with a self-overlap at
    distance d are periodic with period d, so the sum over them factorizes
    into independent residue classes, one per period slot.
    """
    d = distance
    if not 0 < d < k:
        raise ValueError("overlap distance must satisfy 0 < d < k")
    if i_start < 1 or count < 1:
        raise ValueError("need i_start >= 1 and count >= 1")
    gam = schedule.gamma_slice(i_start, count + k + d - 1)
    acc = np.ones(count)
    for r in range(1, d + 1):
        grow = np.ones(count)
        shrink = np.ones(count)
        t = r
        while t <= k + d:
            two_g = 2.0 * gam[t - 1 : t - 1 + count]
            grow = grow * (1.0 + two_g)
            shrink = shrink * (1.0 - two_g)
            t += d
        acc *= grow + shrink
    return acc * math.ldexp(1.0, -(2 * k + d))


# ---------------------------------------------------------------------------
# Pattern-averaged deviation of the likelihood ratio


def mean_abs_likelihood_deviation(
    schedule: BiasSchedule,
    j: int,
    k: int,
    *,
    exact_cap: int = 20,
    mc_samples: int = 4096,
    seed: int = 0,
) -> tuple[float, float]:
    """E |R_j - 1| over uniform patterns; returns (value, stderr).

    Exact (stderr 0) for k <= exact_cap via Gray-code enumeration; Monte
    Carlo with mc_samples patterns beyond, reproducible per (seed, k, j).
    """
    if k <= exact_cap:
        values = log_likelihood_values(schedule, j, k)
        return float(np.abs(np.expm1(values)).mean()), 0.0
    two_gamma = 2.0 * schedule.gamma_slice(j, k)
    plus = np.log1p(two_gamma)
    minus = np.log1p(-two_gamma)
    codes = sample_words(k, derive_seed(seed, k, j), mc_samples)
    logs = np.zeros(mc_samples)
    for i in range(k):
        bit = ((codes >> np.uint64(i)) & np.uint64(1)).astype(bool)
        logs += np.where(bit, plus[i], minus[i])
    deviations = np.abs(np.expm1(logs))
    value = float(deviations.mean())
    stderr = float(deviations.std(ddof=1) / math.sqrt(mc_samples))
    return value, stderr


def outlier_mass(
    schedule: BiasSchedule, j: int, k: int, theta: float, exact_cap: int = 20
) -> OutlierMass:
    """Mass of patterns whose weighted symbol sum leaves the concentration set.

    The set keeps |sum_i omega_i gamma_{i+j-1}| <= (sum_i gamma^2)^(1/2-theta),
    boundary included; Chebyshev bounds the outside mass by
    (sum_i gamma^2)^(2 theta).  Exact enumeration only (k <= exact_cap).
    """
    if not 0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    if k > exact_cap:
        raise CapabilityError(f"outlier_mass at level {k} exceeds exact_cap {exact_cap}")
    gam = schedule.gamma_slice(j, k)
    power = float((gam * gam).sum())
    if power == 0.0:
        return OutlierMass(outside_mass=0.0, chebyshev_bound=0.0)
    sums = _gray_values(gam, -gam)
    threshold = power ** (0.5 - theta)
    outside = float((np.abs(sums) > threshold).mean())
    return OutlierMass(outside_mass=outside, chebyshev_bound=power ** (2 * theta))


# ---------------------------------------------------------------------------
# Stein-method error terms


def critical_onset_index(schedule: BiasSchedule) -> int | None:
    """Smallest position from which 1 + 2 gamma_n stays below 2^(1/4).

    From this position on, every overlap-pair joint probability at level k is
    below 2^(-3k/2).  None when the schedule never decays that far.
    """
    return first_persistent_below(schedule, _ONSET_FACTOR_BOUND)


def _pair_sum_exact(schedule: BiasSchedule, k: int) -> float:
    """Sum of joint hit probabilities over all ordered overlapping pairs
    (j, i) with i, j in 1..2^k and 0 < |i-j| < k."""
    n = 1 << k
    total = 0.0
    for d in range(1, k):
        count = n - d
        if count < 1:
            continue
        total += 2.0 * float(overlap_pair_probabilities(schedule, k, d, 1, count).sum())
    return total


def _neighborhood_term(k: int) -> float:
    """2^-2k * sum_j (1 + #{i != j : |i-j| < k}), in closed form.

    The neighbor count sums to 2(k-1) 2^k - k(k-1) over j in 1..2^k.
    """
    n_terms = (2 * k - 1) * (1 << k) - k * (k - 1)
    return math.ldexp(float(n_terms), -2 * k)


def _mean_abs_exact(schedule: BiasSchedule, j: int, k: int) -> float:
    return float(np.abs(np.expm1(log_likelihood_values(schedule, j, k))).mean())


def _stratum_grid(lo: int, n: int) -> list[tuple[int, int]]:
    """Half-octave strata covering window positions lo..n: a list of
    (left endpoint, width); the final position n is its own stratum."""
    points = {lo, n}
    p = 1
    while p < n:
        p <<= 1
        if lo < p < n:
            points.add(p)
        half = 3 * (p >> 1)
        if lo < half < n:
            points.add(half)
    ordered = sorted(points)
    strata = [(a, b - a) for a, b in zip(ordered, ordered[1:])]
    strata.append((n, 1))
    return strata


# Exact evaluation of the head block is cheap at the default epsilon; an
# absurdly large epsilon could make it dominate, so cap the per-position work.
_HEAD_BLOCK_EXACT_LIMIT = 4096


def _c_term(
    schedule: BiasSchedule, params: ChenSteinParams
) -> tuple[float, str, float]:
    """2^-k sum_j E|R_j - 1| over j in 1..2^k: exact, stratified-monotone
    bound, or Monte Carlo, in that order of preference."""
    k = params.k
    n = 1 << k
    exact_points = k <= params.exact_cap
    if exact_points and k <= _FULL_SUM_CAP:
        total = 0.0
        for j in range(1, n + 1):
            total += _mean_abs_exact(schedule, j, k)
        return math.ldexp(total, -k), "exact", 0.0

    lo = min(int(math.ceil(2 ** (params.epsilon * k))), n)
    c_value = 0.0
    variance = 0.0
    used_mc = False
    # head block j < lo: each E|R_j - 1| <= E[R_j] + 1 = 2
    head = lo - 1
    if exact_points and head <= _HEAD_BLOCK_EXACT_LIMIT:
        for j in range(1, lo):
            c_value += math.ldexp(_mean_abs_exact(schedule, j, k), -k)
    else:
        c_value += 2.0 * head * math.ldexp(1.0, -k)
    # tail block j >= lo: monotone upper integration on a half-octave grid
    for left, width in _stratum_grid(lo, n):
        if exact_points:
            value, stderr = _mean_abs_exact(schedule, left, k), 0.0
        else:
            value, stderr = mean_abs_likelihood_deviation(
                schedule,
                left,
                k,
                exact_cap=params.exact_cap,
                mc_samples=params.mc_samples,
                seed=params.seed,
            )
            used_mc = True
        c_value += width * math.ldexp(value, -k)
        variance += (width * math.ldexp(stderr, -k)) ** 2
    mode = "monte-carlo" if used_mc else "bound"
    return c_value, mode, math.sqrt(variance)


def chen_stein_terms(schedule: BiasSchedule, params: ChenSteinParams) -> ChenSteinReport:
    """Assemble the Poisson(1) approximation error terms at level k.

    A: exact closed form over the window-neighborhood structure.
    B: sum of joint hit probabilities over overlapping pairs; exact through
       exact_cap, else the onset-index bound j0 k 2^-k + k 2^-k/2.
    C: pattern-averaged likelihood deviation summed over positions; exact for
       small k, stratified monotone bound with exact or Monte Carlo grid
       values beyond (mode and stderr reported).
    """
    k = params.k
    n = 1 << k
    a_value = _neighborhood_term(k)
    onset = critical_onset_index(schedule)
    if k <= params.exact_cap:
        b_value, b_mode = _pair_sum_exact(schedule, k), "exact"
    else:
        head_count = n if onset is None else min(onset, n)
        b_value = head_count * k * math.ldexp(1.0, -k)
        if onset is not None and onset <= n:
            b_value += k * 2.0 ** (-k / 2)
        b_mode = "bound"
    c_value, c_mode, c_stderr = _c_term(schedule, params)
    return ChenSteinReport(
        k=k,
        lam=1.0,
        a_term=a_value,
        b_term=b_value,
        b_mode=b_mode,
        c_term=c_value,
        c_mode=c_mode,
        c_stderr=c_stderr,
        total=a_value + b_value + c_value,
        onset_index=onset,
        epsilon=params.epsilon,
        theta=params.theta,
    )


# ---------------------------------------------------------------------------
# Exact annealed law (tiny k)


def exact_annealed_pmf(schedule: BiasSchedule, k: int) -> CountDistribution:
    """Exact law of the match count when sequence and pattern are both random.

    Enumerates every length-(2^k + k - 1) prefix with its product-measure
    probability and every pattern; k <= EXACT_ANNEALED_CAP.
    """
    if k < 1:
        raise ValueError("level k must be >= 1")
    if k > EXACT_ANNEALED_CAP:
        raise CapabilityError(
            f"exact annealed law needs 2^(2^k + k - 1) prefixes; k <= {EXACT_ANNEALED_CAP}"
        )
    n = 1 << k
    length = n + k - 1
    prefixes = np.arange(1 << length, dtype=np.uint32)
    gam = schedule.gamma_slice(1, length)
    prob = np.ones(1 << length)
    for pos in range(length):
        bit = ((prefixes >> np.uint32(pos)) & np.uint32(1)).astype(bool)
        prob *= np.where(bit, 0.5 + gam[pos], 0.5 - gam[pos])
    mask = np.uint32(n - 1)
    window_codes = [(prefixes >> np.uint32(j)) & mask for j in range(n)]
    accum = np.zeros(n + 1)
    for code in range(n):
        matches = np.zeros(1 << length, dtype=np.uint16)
        for j in range(n):
            matches += window_codes[j] == code
        accum += np.bincount(matches, weights=prob, minlength=n + 1)
    accum *= math.ldexp(1.0, -k)
    pmf = {m: float(p) for m, p in enumerate(accum) if p > 0.0}
    return CountDistribution(pmf=pmf, label=f"exact-annealed:{schedule.label}:k={k}")


# ---------------------------------------------------------------------------
# Non-convergence ingredients


def balanced_product(schedule: BiasSchedule, j: int, spec: BalancedSpec) -> float:
    """prod_{i in plus} (1 + gamma_{i+j-1}) * prod_{i in minus} (1 - gamma_{i+j-1}).

    For non-increasing schedules this stays <= 1 once the decay is slow
    relative to gamma^2, which is what defeats pattern-average cancellation.
    Scalar gamma lookups keep indices exact for j beyond 2^53.
    """
    if j < 1:
        raise ValueError("window position must be >= 1")
    value = 1.0
    for i in spec.plus:
        value *= 1.0 + schedule.gamma(i + j - 1)
    for i in spec.minus:
        value *= 1.0 - schedule.gamma(i + j - 1)
    return value


def symbol_sum_tail_mass(k: int, eta: float) -> TailMass:
    """Mass of k-symbol patterns with symbol sum strictly below -eta sqrt(k).

    Exact via the binomial tail (sum over counts of +1 symbols), alongside
    the Gaussian tail Phi(-eta).  Boundary sums exactly at -eta sqrt(k) are
    excluded (strict inequality).
    """
    if k < 1:
        raise ValueError("level k must be >= 1")
    if eta < 0:
        raise ValueError("eta must be >= 0")
    threshold = (k - eta * math.sqrt(k)) / 2.0
    nearest = round(threshold)
    if abs(threshold - nearest) < 1e-9 * max(1.0, abs(threshold)):
        m_max = int(nearest) - 1
    else:
        m_max = math.floor(threshold)
    exact = float(_binom.cdf(m_max, k, 0.5)) if m_max >= 0 else 0.0
    normal = 0.5 * math.erfc(eta / math.sqrt(2.0))
    return TailMass(exact=exact, normal_approx=normal)


def union_bound_hit_probability(schedule: BiasSchedule, k: int, word: Word) -> float:
    """2^-k sum_{j=1}^{2^k} R_j(w): a union bound for P(w occurs at all).

    Scans all 2^k positions in chunks (k <= UNION_BOUND_CAP).  Factors stay
    >= 1 - 2*cap > 0 for capped schedules, so products cannot underflow
    within this envelope.
    """
    if word.k != k:
        raise ValueError(f"word has level {word.k}, expected {k}")
    if k > UNION_BOUND_CAP:
        raise CapabilityError(f"union bound scans 2^k positions; k <= {UNION_BOUND_CAP}")
    n = 1 << k
    signs = np.fromiter(word.symbols(), dtype=np.float64, count=k)
    total = 0.0
    chunk = 1 << 20
    j = 1
    while j <= n:
        count = min(chunk, n - j + 1)
        gam = schedule.gamma_slice(j, count + k - 1)
        acc = np.ones(count)
        for i in range(k):
            acc *= 1.0 + 2.0 * signs[i] * gam[i : i + count]
        total += float(acc.sum())
        j += count
    return math.ldexp(total, -k)

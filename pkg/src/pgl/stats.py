"""Reference laws and distances: Poisson pmfs, total variation, aggregation,
and binomial confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .counter import CountDistribution

__all__ = [
    "TvResult",
    "poisson_pmf",
    "poisson_distribution",
    "tv_distance",
    "aggregate_annealed",
    "binomial_ci",
]

_TAIL_TOL = 1e-12


def poisson_pmf(lam: float, m: int) -> float:
    """P(Poisson(lam) = m), computed in log space for stability."""
    if lam <= 0:
        raise ValueError("Poisson rate must be > 0")
    if m < 0:
        raise ValueError("count must be >= 0")
    return math.exp(-lam + m * math.log(lam) - math.lgamma(m + 1))


def poisson_distribution(lam: float, tail_tol: float = _TAIL_TOL) -> CountDistribution:
    """Poisson(lam) truncated adaptively so the neglected tail is < tail_tol."""
    if lam <= 0:
        raise ValueError("Poisson rate must be > 0")
    pmf: dict[int, float] = {}
    cumulative = 0.0
    limit = int(lam + 200 * math.sqrt(lam) + 200)
    for m in range(limit + 1):
        p = poisson_pmf(lam, m)
        pmf[m] = p
        cumulative += p
        if 1.0 - cumulative < tail_tol:
            break
    else:
        raise ValueError(f"failed to reach tail tolerance for lam={lam}")
    return CountDistribution(pmf=pmf, label=f"poisson:{lam!r}")


@dataclass(frozen=True)
class TvResult:
    """Total-variation distance plus the mass neglected by truncation."""

    distance: float
    truncation_mass: float


def tv_distance(p: CountDistribution, q: CountDistribution) -> TvResult:
    """(1/2) sum_m |p(m) - q(m)| over the union support.

    Both inputs must be normalized within 1e-9 (truncated reference laws
    qualify); the mass outside the represented support is reported separately
    and stays below 1e-12 for laws built by this package.
    """
    for dist in (p, q):
        total = sum(dist.pmf.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{dist.label}: masses sum to {total!r}, not 1")
    support = set(p.pmf) | set(q.pmf)
    distance = 0.5 * sum(abs(p.mass(m) - q.mass(m)) for m in sorted(support))
    residual = max(0.0, 1.0 - sum(p.pmf.values())) + max(0.0, 1.0 - sum(q.pmf.values()))
    return TvResult(distance=distance, truncation_mass=residual)


def aggregate_annealed(
    laws: list[CountDistribution],
) -> tuple[CountDistribution, dict[int, float]]:
    """Bin-wise mean of count laws plus the standard error of each bin.

    Averaging quenched laws over fresh sequences estimates the annealed law
    (sequence and pattern both random).  Standard errors use the sample
    standard deviation over laws; a single law gets stderr 0.
    """
    if not laws:
        raise ValueError("aggregate_annealed needs at least one law")
    support = sorted(set().union(*(law.pmf.keys() for law in laws)))
    n = len(laws)
    pmf: dict[int, float] = {}
    stderr: dict[int, float] = {}
    for m in support:
        column = np.array([law.mass(m) for law in laws])
        pmf[m] = float(column.mean())
        stderr[m] = float(column.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean_law = CountDistribution(pmf=pmf, label=f"annealed:mean-of-{n}")
    return mean_law, stderr


def binomial_ci(successes: int, trials: int, confidence: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in 0..trials")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))

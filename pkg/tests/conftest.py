"""Shared brute-force oracles for the test suite.

Everything here is deliberately naive — direct window scans, explicit
products over whole prefixes, full enumerations — so that the library is
checked against arithmetic a reader can verify by hand.  Keep these slow
and obvious; never import them from the package under test.
"""

from __future__ import annotations

import numpy as np

from pgl.sampler import PackedSequence


def pack_bits(bits) -> PackedSequence:
    """Build a PackedSequence from explicit 0/1 bits (bit 1 = symbol +1)."""
    arr = np.asarray(list(bits), dtype=np.uint8)
    packed = np.packbits(arr, bitorder="little")
    return PackedSequence(packed=packed, length=int(arr.size), seed=0,
                          schedule_label="test")


def naive_window_counts(bits, k: int) -> dict[int, int]:
    """Count level-k patterns over the first 2^k windows by direct scan.

    The window starting at (0-based) position j has code sum_i bits[j+i] << i:
    the first symbol of the window is the least significant bit.
    """
    bits = list(bits)
    counts: dict[int, int] = {}
    for j in range(1 << k):
        code = 0
        for i in range(k):
            code |= bits[j + i] << i
        counts[code] = counts.get(code, 0) + 1
    return counts


def prefix_probability(schedule, bits) -> float:
    """Probability of an explicit prefix under the product measure."""
    p = 1.0
    for n, b in enumerate(bits, start=1):
        g = schedule.gamma(n)
        p *= (0.5 + g) if b else (0.5 - g)
    return p


def brute_pair_hit_probability(schedule, i: int, j: int, k: int) -> float:
    """P(windows at i and j both equal the pattern), by full double sum.

    Sums over every level-k pattern (uniform weight 2^-k) and every prefix
    long enough to cover both windows.  Exponential; keep k and max(i, j)
    small.
    """
    length = max(i, j) + k - 1
    total = 0.0
    for code in range(1 << k):
        wbits = [(code >> t) & 1 for t in range(k)]
        for x in range(1 << length):
            xbits = [(x >> t) & 1 for t in range(length)]
            if (xbits[i - 1:i - 1 + k] == wbits
                    and xbits[j - 1:j - 1 + k] == wbits):
                total += prefix_probability(schedule, xbits)
    return total / (1 << k)


def brute_annealed_pmf(schedule, k: int) -> dict[int, float]:
    """Exact law of the match count with pattern and sequence both random.

    Full enumeration of every (prefix, pattern) combination; usable for
    k <= 3 only.
    """
    n = 1 << k
    length = n + k - 1
    pmf: dict[int, float] = {}
    for code in range(1 << k):
        wbits = [(code >> t) & 1 for t in range(k)]
        for x in range(1 << length):
            xbits = [(x >> t) & 1 for t in range(length)]
            m = sum(1 for j in range(n) if xbits[j:j + k] == wbits)
            pmf[m] = pmf.get(m, 0.0) + prefix_probability(schedule, xbits)
    return {m: p / (1 << k) for m, p in sorted(pmf.items())}


def brute_likelihood_ratio(schedule, j: int, word_bits) -> float:
    """prod_i (1 + 2 omega_i gamma_{i+j-1}) with omega = 2*bit - 1."""
    r = 1.0
    for i, b in enumerate(word_bits, start=1):
        g = schedule.gamma(i + j - 1)
        r *= 1.0 + (2.0 * b - 1.0) * 2.0 * g
    return r

"""Deterministic sequence and word sampling.

Randomness comes from numpy's Philox counter generator keyed directly by the
caller's seed: the 64-bit word at stream index m is a pure function of
(seed, m), so bit n of a sampled sequence never depends on how much of the
sequence is generated, in what chunks, or on how many threads are running.

Sequences store one bit per position, bit value 1 encoding symbol +1 and bit
value 0 encoding -1.  Position n is sampled by comparing stream word n-1
against the 64-bit threshold of p_n = 1/2 + gamma_n, so P(bit=1) equals p_n
to within 2^-64.

Bit-dump file layout (little-endian throughout):
  bytes 0-3   magic ``PGL1``
  bytes 4-7   u32 level tag (the histogram level k the dump belongs to, or 0
              for a plain sequence)
  bytes 8-15  u64 bit count L
  then ceil(L/8) payload bytes, LSB-first within each byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.random import Philox

from .schedule import BiasSchedule

__all__ = [
    "PackedSequence",
    "Word",
    "sample_sequence",
    "sample_word",
    "sample_words",
    "mix64",
    "derive_seed",
    "write_bits",
    "read_bits",
    "MAX_WORD_LEVEL",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MAGIC = b"PGL1"
_CHUNK = 1 << 21

# Word codes are masked from a single 64-bit draw; 60 keeps headroom in the
# signed arithmetic downstream consumers tend to do.
MAX_WORD_LEVEL = 60


def mix64(value: int) -> int:
    """SplitMix64 finalizer; a bijective 64-bit avalanche mix."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Derive a child seed from a master seed and integer coordinates.

    Documented chain: h = mix64(master), then for each coordinate p,
    h = mix64(h XOR (p * golden-ratio-constant mod 2^64)).  Distinct
    coordinate tuples yield independent Philox keys.
    """
    h = mix64(master)
    for p in parts:
        h = mix64(h ^ ((p * _GOLDEN) & _MASK64))
    return h


def _raw_words(seed: int, start: int, count: int) -> np.ndarray:
    """Stream words [start, start+count) for this seed, as uint64.

    Philox advances in blocks of four words; the generator is advanced to the
    containing block and lane offsets are discarded, which keeps word m a pure
    function of (seed, m).
    """
    if count == 0:
        return np.empty(0, dtype=np.uint64)
    bg = Philox(key=seed & _MASK64)
    blocks, lane = divmod(start, 4)
    if blocks:
        bg.advance(blocks)
    raw = bg.random_raw(lane + count)
    return raw[lane:]


@dataclass(frozen=True, eq=False)
class PackedSequence:
    """An immutable +-1 sequence stored as packed bits (LSB-first per byte)."""

    packed: np.ndarray
    length: int
    seed: int
    schedule_label: str

    def __post_init__(self) -> None:
        need = (self.length + 7) // 8
        if self.packed.dtype != np.uint8 or self.packed.size != need:
            raise ValueError("packed buffer does not match the declared bit length")

    @property
    def bits01(self) -> np.ndarray:
        """The sequence as a 0/1 uint8 vector of length L (bit 1 <-> +1)."""
        return np.unpackbits(self.packed, count=self.length, bitorder="little")

    def bit(self, n: int) -> int:
        """Bit at 1-based position n."""
        if not 1 <= n <= self.length:
            raise ValueError(f"position {n} outside 1..{self.length}")
        i = n - 1
        return (int(self.packed[i >> 3]) >> (i & 7)) & 1

    def symbol(self, n: int) -> int:
        """Symbol at 1-based position n, +1 or -1."""
        return 2 * self.bit(n) - 1

    def symbols(self) -> np.ndarray:
        """The full sequence as an int8 vector of +-1 values."""
        return (2 * self.bits01.astype(np.int8) - 1).astype(np.int8)


@dataclass(frozen=True)
class Word(object):
    """A k-symbol pattern, symbols packed LSB-first: bit i-1 encodes the i-th
    symbol (1 <-> +1)."""

    k: int
    code: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= MAX_WORD_LEVEL:
            raise ValueError(f"word length must lie in 1..{MAX_WORD_LEVEL}")
        if not 0 <= self.code < (1 << self.k):
            raise ValueError("word code has bits beyond its length")

    def bit(self, i: int) -> int:
        """Bit of the i-th symbol (1-based)."""
        if not 1 <= i <= self.k:
            raise ValueError(f"symbol index {i} outside 1..{self.k}")
        return (self.code >> (i - 1)) & 1

    def symbol(self, i: int) -> int:
        return 2 * self.bit(i) - 1

    def symbols(self) -> tuple[int, ...]:
        return tuple(self.symbol(i) for i in range(1, self.k + 1))


def sample_sequence(schedule: BiasSchedule, length: int, seed: int) -> PackedSequence:
    """Sample x_1..x_L with P(x_n = +1) = 1/2 + gamma_n, deterministically.

    Bit n depends only on (seed, n, gamma_n); chunking below is invisible.
    """
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    bits = np.empty(length, dtype=np.uint8)
    pos = 0
    while pos < length:
        count = min(_CHUNK, length - pos)
        p = 0.5 + schedule.gamma_slice(pos + 1, count)
        if not (0.0 < p.min() and p.max() < 1.0):
            raise ValueError("schedule produced a bias outside (-1/2, 1/2)")
        thresholds = np.floor(p * 2.0**64).astype(np.uint64)
        words = _raw_words(seed, pos, count)
        bits[pos : pos + count] = words < thresholds
        pos += count
    return PackedSequence(
        packed=np.packbits(bits, bitorder="little"),
        length=length,
        seed=seed,
        schedule_label=schedule.label,
    )


def sample_word(k: int, seed: int) -> Word:
    """Uniform k-symbol word: k bits masked from one generator draw."""
    if not 1 <= k <= MAX_WORD_LEVEL:
        raise ValueError(f"word length must lie in 1..{MAX_WORD_LEVEL}")
    code = int(_raw_words(seed, 0, 1)[0]) & ((1 << k) - 1)
    return Word(k=k, code=code)


def sample_words(k: int, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Vector of ``count`` independent uniform word codes (uint64).

    Word t is masked from stream word start+t, so slices of the same stream
    never overlap and are reproducible piecewise.
    """
    if not 1 <= k <= MAX_WORD_LEVEL:
        raise ValueError(f"word length must lie in 1..{MAX_WORD_LEVEL}")
    return _raw_words(seed, start, count) & np.uint64((1 << k) - 1)


def write_bits(path: str | Path, sequence: PackedSequence, level: int = 0) -> None:
    """Dump a sequence in the PGL1 bit format (see module docstring)."""
    if level < 0 or level > 0xFFFFFFFF:
        raise ValueError("level tag must fit in an unsigned 32-bit field")
    header = _MAGIC + level.to_bytes(4, "little") + sequence.length.to_bytes(8, "little")
    Path(path).write_bytes(header + sequence.packed.tobytes())


def read_bits(path: str | Path) -> tuple[PackedSequence, int]:
    """Read a PGL1 bit dump; returns (sequence, level tag).

    The dump does not carry seed or schedule provenance; the loaded sequence
    is labelled by its file name with seed 0.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not a PGL1 bit dump")
    level = int.from_bytes(blob[4:8], "little")
    length = int.from_bytes(blob[8:16], "little")
    payload = np.frombuffer(blob[16:], dtype=np.uint8)
    need = (length + 7) // 8
    if payload.size != need:
        raise ValueError(f"{path}: payload is {payload.size} bytes, expected {need}")
    seq = PackedSequence(
        packed=payload.copy(),
        length=length,
        seed=0,
        schedule_label=f"file:{Path(path).name}",
    )
    return seq, level

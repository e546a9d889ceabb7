"""Bit strings, Hamming geometry, entropy bounds and seeded random streams.

Bit order is big-endian everywhere: index 0 is the leftmost bit and the
integer value of a string treats the leftmost bit as most significant.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

Rational = Union[int, Fraction]

_MASK64 = (1 << 64) - 1


class DomainError(ValueError):
    """Argument outside an operation's domain."""


class LengthMismatch(DomainError):
    """Two bit strings that must have equal length do not."""


class GuardExceeded(RuntimeError):
    """An exhaustive enumeration would exceed its desk-scale guard."""


@dataclass(frozen=True)
class BitString:
    """Immutable finite bit sequence stored as an ASCII '0'/'1' string."""

    bits: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.bits, str):
            object.__setattr__(self, "bits", "".join(str(int(b)) for b in self.bits))
        if self.bits.strip("01"):
            raise DomainError(f"not a bit string: {self.bits!r}")

    @classmethod
    def from_int(cls, value: int, length: int) -> BitString:
        if value < 0 or (length >= 0 and value >> length):
            raise DomainError(f"{value} does not fit in {length} bits")
        return cls(format(value, f"0{length}b") if length else "")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        return cls("".join("1" if b else "0" for b in bits))

    @classmethod
    def zeros(cls, length: int) -> BitString:
        return cls("0" * length)

    @classmethod
    def ones(cls, length: int) -> BitString:
        return cls("1" * length)

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self) -> Iterator[int]:
        return (1 if c == "1" else 0 for c in self.bits)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return BitString(self.bits[key])
        return 1 if self.bits[key] == "1" else 0

    def __add__(self, other: BitString) -> BitString:
        return BitString(self.bits + other.bits)

    def __str__(self) -> str:
        return self.bits

    def __repr__(self) -> str:
        return f"BitString({self.bits!r})"

    def to_int(self) -> int:
        return int(self.bits, 2) if self.bits else 0

    def restrict(self, indices: Iterable[int]) -> BitString:
        """Bits at ``indices`` taken in ascending index order."""
        return BitString("".join(self.bits[i] for i in sorted(indices)))

    def weight(self) -> int:
        return self.bits.count("1")

    def complement(self) -> BitString:
        return BitString(self.bits.translate(_FLIP))

    def xor(self, other: BitString) -> BitString:
        if len(self) != len(other):
            raise LengthMismatch(f"lengths {len(self)} and {len(other)}")
        return BitString.from_int(self.to_int() ^ other.to_int(), len(self))


_FLIP = str.maketrans("01", "10")


def as_bits(value: Union[BitString, str]) -> BitString:
    return value if isinstance(value, BitString) else BitString(value)


def all_strings(length: int) -> Iterator[BitString]:
    """Every string of ``length`` bits in lexicographic order."""
    for v in range(1 << length):
        yield BitString.from_int(v, length)


def hamming_distance(a: Union[BitString, str], b: Union[BitString, str]) -> int:
    a, b = as_bits(a), as_bits(b)
    if len(a) != len(b):
        raise LengthMismatch(f"hamming_distance on lengths {len(a)} and {len(b)}")
    return (a.to_int() ^ b.to_int()).bit_count()


def binary_entropy(p: Rational | float) -> float:
    if p < 0 or p > 1:
        raise DomainError(f"binary_entropy needs 0 <= p <= 1, got {p}")
    if p == 0 or p == 1:
        return 0.0
    p = float(p)
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def hamming_ball_volume(n: int, radius: int) -> int:
    """Exact number of length-``n`` strings within distance ``radius`` of a point."""
    if n < 1:
        raise DomainError("n must be positive")
    if radius < 0 or radius > n:
        raise DomainError(f"radius {radius} outside [0, {n}]")
    return sum(math.comb(n, i) for i in range(radius + 1))


def bad_set_bound(n: int, ell: int, dist: int) -> int:
    """Exact counting bound ``2^(ell+1) * 2n * vol(n, dist-1)`` on approximable strings.

    The strict inequality ``d_H < dist`` makes the relevant ball radius ``dist - 1``.
    """
    if n < 1 or ell < 0 or dist < 1:
        raise DomainError("need n >= 1, ell >= 0, dist >= 1")
    if dist > n:
        raise DomainError(f"dist {dist} exceeds n {n}")
    return (1 << (ell + 1)) * 2 * n * hamming_ball_volume(n, dist - 1)


def binomial_tail_below(n: int, t: int) -> Fraction:
    """P[Binomial(n, 1/2) < t] as an exact fraction."""
    if t <= 0:
        return Fraction(0)
    return Fraction(hamming_ball_volume(n, min(t - 1, n)), 1 << n)


# --- deterministic randomness -------------------------------------------------

_BLOCK_BITS = 512


def _derive_seed(seed: int, label: str) -> int:
    h = hashlib.blake2b(
        (seed & _MASK64).to_bytes(8, "big") + label.encode(), digest_size=8, person=b"nwlab-split"
    )
    return int.from_bytes(h.digest(), "big")


@dataclass
class RandomStream:
    """Counter-based bit stream: bit ``i`` is a fixed function of ``(seed, i)``.

    Sequential reads advance ``position``; ``bit_at`` gives random access, which
    the machine interpreter uses for its two-way random tape. Not thread-safe;
    hand each worker its own ``split``.
    """

    seed: int
    position: int = 0
    _blocks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.seed &= _MASK64

    def _block(self, index: int) -> int:
        block = self._blocks.get(index)
        if block is None:
            digest = hashlib.blake2b(
                self.seed.to_bytes(8, "big") + index.to_bytes(8, "big"), digest_size=64
            ).digest()
            block = int.from_bytes(digest, "big")
            if len(self._blocks) > 256:
                self._blocks.clear()
            self._blocks[index] = block
        return block

    def bit_at(self, i: int) -> int:
        if i < 0:
            raise DomainError("negative stream index")
        block, offset = divmod(i, _BLOCK_BITS)
        return (self._block(block) >> (_BLOCK_BITS - 1 - offset)) & 1

    def next_bit(self) -> int:
        b = self.bit_at(self.position)
        self.position += 1
        return b

    def next_int(self, nbits: int) -> int:
        v = 0
        for _ in range(nbits):
            v = (v << 1) | self.next_bit()
        return v

    def bits(self, length: int) -> BitString:
        return BitString.from_int(self.next_int(length), length) if length else BitString()

    def randbelow(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        if bound < 1:
            raise DomainError("bound must be positive")
        k = (bound - 1).bit_length()
        while True:
            v = self.next_int(k)
            if v < bound:
                return v

    def split(self, label: str) -> RandomStream:
        """Independent child stream named by ``label``; does not advance this one."""
        return RandomStream(_derive_seed(self.seed, label))

    def numpy_generator(self):
        import numpy as np

        return np.random.Generator(np.random.PCG64(self.next_int(64)))


def concat(parts: Sequence[BitString]) -> BitString:
    return BitString("".join(p.bits for p in parts))

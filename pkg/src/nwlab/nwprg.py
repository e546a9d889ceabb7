"""Targeted Nisan-Wigderson generator over a pluggable hard-function oracle."""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .core import BitString, DomainError, GuardExceeded, RandomStream, Rational, all_strings, as_bits
from .design import Design, _floor_pow2

MAX_ENUM_SEED_BITS = 24
# vectorized seed tables are materialized up to this seed length
MAX_TABLE_SEED_BITS = 20
# n above this many bits is reported but flagged as not enumerable
PAPER_SCALE_BITS = 64


class ConfigurationError(DomainError):
    """Generator parts that cannot work together."""


@dataclass(frozen=True)
class HardFunctionOracle:
    """Length-preserving deterministic map standing in for the hard function f."""

    evaluate: Callable[[BitString], BitString]
    description: str

    def __call__(self, x: Union[BitString, str]) -> BitString:
        x = as_bits(x)
        z = self.evaluate(x)
        if len(z) != len(x):
            raise DomainError(f"oracle {self.description!r} changed length {len(x)} -> {len(z)}")
        return z


def table_oracle(table: dict) -> HardFunctionOracle:
    """Explicit truth table keyed by input strings."""
    tab = {str(k): as_bits(v) for k, v in table.items()}

    def evaluate(x: BitString) -> BitString:
        try:
            return tab[x.bits]
        except KeyError:
            raise DomainError(f"table oracle undefined at {x.bits}") from None

    return HardFunctionOracle(evaluate, f"table[{len(tab)}]")


def planted_oracle(pattern: Union[BitString, str]) -> HardFunctionOracle:
    """Ignores x and returns ``pattern`` repeated to |x| bits."""
    pat = as_bits(pattern)
    if not len(pat):
        raise DomainError("empty planted pattern")

    def evaluate(x: BitString) -> BitString:
        reps = -(-len(x) // len(pat))
        return BitString((pat.bits * reps)[: len(x)])

    return HardFunctionOracle(evaluate, f"planted:{pat.bits}")


def seeded_oracle(seed: int) -> HardFunctionOracle:
    """Keyed pseudorandom table: f(x) is a stream split on the label x."""
    root = RandomStream(seed)

    def evaluate(x: BitString) -> BitString:
        return root.split(f"f|{len(x)}|{x.bits}").bits(len(x))

    return HardFunctionOracle(evaluate, f"seeded:{seed}")


@dataclass(frozen=True)
class ToyParams:
    m: int
    n: int
    d: int
    r: int
    s_overlap: int

    def __post_init__(self) -> None:
        if min(self.m, self.n, self.d, self.r) < 1 or self.s_overlap < 0:
            raise ConfigurationError("toy parameters must be positive")
        if not (self.d >= self.r > self.s_overlap):
            raise ConfigurationError(f"need d >= r > s_overlap, got {self.d}, {self.r}, {self.s_overlap}")
        if (1 << self.r) > self.n:
            raise ConfigurationError(f"2^r = {1 << self.r} indexes past |z| = {self.n}")

    @classmethod
    def for_design(cls, design: Design, m: Optional[int] = None, n: Optional[int] = None) -> ToyParams:
        return cls(m if m is not None else design.m, n if n is not None else 1 << design.r,
                   design.d, design.r, design.s)


@dataclass(frozen=True)
class PaperParams:
    alpha: Fraction
    m: int
    log2_n: Union[int, float]  # exact when m is a power of two
    n: int
    d: int
    r: int
    s_overlap: int
    epsilon: Fraction
    ell: Optional[int]
    dist_threshold: int
    exponent: int
    C: int
    paper_scale: bool
    notes: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        n_repr = f"{self.m}^{self.exponent}" if self.paper_scale else self.n
        return {
            "alpha": str(self.alpha), "m": self.m, "n": n_repr if isinstance(n_repr, str) else int(n_repr),
            "log2_n": self.log2_n, "d": self.d, "r": self.r, "s_overlap": self.s_overlap,
            "epsilon": str(self.epsilon),
            "ell": (f"2^{self.notes['log2_ell']}" if self.paper_scale and "log2_ell" in self.notes else self.ell),
            "dist_threshold": str(self.dist_threshold) if self.paper_scale else self.dist_threshold,
            "exponent": self.exponent, "C": self.C, "paper_scale": self.paper_scale,
            "c1": "symbolic (time exponent of leak/attacker)", "c2": "symbolic (space multiplier of leak/attacker)",
            "notes": self.notes,
        }


def derive_paper_params(m: int, alpha: Rational, C: int = 3) -> PaperParams:
    """Parameters coupled as n = m^(5/alpha^3), d = log n / alpha, ell = n^(2 alpha + alpha^3/5)."""
    alpha = Fraction(alpha)
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    if m < 2:
        raise DomainError("m must be at least 2")
    exact_exponent = 5 / alpha ** 3
    exponent = math.ceil(exact_exponent)
    notes: dict = {"exponent_exact": str(exact_exponent), "exponent_rounded": exact_exponent != exponent}
    n = m ** exponent
    if m & (m - 1) == 0:
        log2_n: Union[int, float] = exponent * (m.bit_length() - 1)
        r = log2_n
    else:
        log2_n = exponent * math.log2(m)
        r = (n - 1).bit_length()  # ceil(log2 n) for n >= 2
    d = math.ceil(r / alpha)
    assert math.floor(alpha * d) == r
    s_overlap = math.floor(2 * alpha * alpha * d)
    epsilon = 2 * alpha + alpha ** 3 / 5
    dist_threshold = math.floor((Fraction(1, 2) - Fraction(1, m * m)) * n)
    # ell = floor(n^epsilon) exactly
    ell: Optional[int]
    if m & (m - 1) == 0:
        log2_ell = epsilon * log2_n
        notes["log2_ell"] = str(log2_ell)
        ell = _floor_pow2(log2_ell) if log2_ell < 1 << 16 else None
    else:
        import gmpy2

        root, _ = gmpy2.iroot(gmpy2.mpz(n) ** epsilon.numerator, epsilon.denominator)
        ell = int(root)
    design_size_floor = _floor_pow2(alpha ** 4 * d / 5)
    notes["design_size_floor"] = design_size_floor
    notes["design_size_slack"] = design_size_floor - m
    return PaperParams(alpha, m, log2_n, n, d, r, s_overlap, epsilon, ell, dist_threshold, exponent, C,
                       n.bit_length() > PAPER_SCALE_BITS, notes)


@dataclass(frozen=True)
class TargetedPRG:
    design: Design
    oracle: HardFunctionOracle
    params: ToyParams

    def __post_init__(self) -> None:
        p = self.params
        if self.design.r != p.r or self.design.d != p.d:
            raise ConfigurationError("design (d, r) disagrees with params")
        if self.design.m < p.m:
            raise ConfigurationError(f"design has {self.design.m} sets, need {p.m}")
        if (1 << p.r) > p.n:
            raise ConfigurationError("2^r exceeds n")

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def n(self) -> int:
        return self.params.n

    def index_sets(self) -> tuple[tuple[int, ...], ...]:
        return self.design.sets[: self.params.m]

    def truth_table(self, x: Union[BitString, str]) -> BitString:
        x = as_bits(x)
        if len(x) != self.n:
            raise DomainError(f"target has {len(x)} bits, generator expects {self.n}")
        return self.oracle(x)


def expand_with_table(index_sets, z: str, seed: str) -> str:
    return "".join(z[int("".join(seed[i] for i in st), 2)] for st in index_sets)


def expand(prg: TargetedPRG, x: Union[BitString, str], seed: Union[BitString, str]) -> BitString:
    """Output bit j is z[int(seed restricted to I_j)] with z = f(x)."""
    seed = as_bits(seed)
    if len(seed) != prg.d:
        raise DomainError(f"seed has {len(seed)} bits, generator expects {prg.d}")
    z = prg.truth_table(x)
    return BitString(expand_with_table(prg.index_sets(), z.bits, seed.bits))


def enumerate_outputs(prg: TargetedPRG, x: Union[BitString, str]) -> list[tuple[BitString, BitString]]:
    """(seed, output) for every seed in lexicographic order."""
    if prg.d > MAX_ENUM_SEED_BITS:
        raise GuardExceeded(f"seed length {prg.d} exceeds enumeration guard {MAX_ENUM_SEED_BITS}")
    z = prg.truth_table(x).bits
    sets = prg.index_sets()
    return [(s, BitString(expand_with_table(sets, z, s.bits))) for s in all_strings(prg.d)]


def iter_output_bits(prg: TargetedPRG, x: Union[BitString, str]) -> Iterator[str]:
    """Outputs as raw '0'/'1' strings in seed order (inner loops)."""
    if prg.d > MAX_ENUM_SEED_BITS:
        raise GuardExceeded(f"seed length {prg.d} exceeds enumeration guard {MAX_ENUM_SEED_BITS}")
    z = prg.truth_table(x).bits
    sets = prg.index_sets()
    width = prg.d
    for v in range(1 << width):
        s = format(v, f"0{width}b") if width else ""
        yield expand_with_table(sets, z, s)


@lru_cache(maxsize=64)
def seed_index_table(index_sets: tuple[tuple[int, ...], ...], d: int) -> np.ndarray:
    """Array of shape (2^d, m): entry [v, j] is int(seed_v restricted to I_j), seeds in lex order."""
    if d > MAX_TABLE_SEED_BITS:
        raise GuardExceeded(f"seed length {d} exceeds table guard {MAX_TABLE_SEED_BITS}")
    v = np.arange(1 << d, dtype=np.int64)
    cols = []
    for st in index_sets:
        idx = np.zeros(1 << d, dtype=np.int64)
        for pos in st:
            idx = (idx << 1) | ((v >> (d - 1 - pos)) & 1)
        cols.append(idx)
    table = np.stack(cols, axis=1) if cols else np.zeros((1 << d, 0), dtype=np.int64)
    table.setflags(write=False)
    return table


def output_ints(prg: TargetedPRG, x: Union[BitString, str]) -> np.ndarray:
    """Generator outputs for every seed (lex order) as big-endian integers."""
    z = np.frombuffer(prg.truth_table(x).bits.encode(), dtype=np.uint8) - ord("0")
    table = seed_index_table(prg.index_sets(), prg.d)
    m = prg.m
    weights = np.array([1 << (m - 1 - j) for j in range(m)], dtype=np.int64)
    return z[table].astype(np.int64) @ weights if m else np.zeros(1 << prg.d, dtype=np.int64)


def output_histogram(prg: TargetedPRG, x: Union[BitString, str]) -> dict[str, int]:
    """Number of seeds producing each output string (only outputs that occur)."""
    counts = np.bincount(output_ints(prg, x), minlength=1 << prg.m)
    m = prg.m
    return {(format(c, f"0{m}b") if m else ""): int(k) for c, k in enumerate(counts) if k}

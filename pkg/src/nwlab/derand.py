"""Padding codec and seed-enumeration derandomizers for decision and search problems."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from .adversary import Distinguisher
from .core import BitString, DomainError, GuardExceeded, all_strings, as_bits
from .nwprg import TargetedPRG, output_histogram, output_ints
from .searchprob import SearchProblem

MAX_DERAND_SEED_BITS = 20


class DecodeError(DomainError):
    """Malformed padded encoding."""


@dataclass(frozen=True)
class PaddedString:
    raw: BitString

    @property
    def payload_len(self) -> int:
        return len(unpad(self.raw))


def pad(x: Union[BitString, str], k: int) -> PaddedString:
    """Write 1x_i for every bit of x, then zeros up to length k."""
    x = as_bits(x)
    if k < 0:
        raise DomainError("pad length must be non-negative")
    body = "".join("1" + c for c in x.bits)
    return PaddedString(BitString(body + "0" * max(0, k - len(body))))


def unpad(x_prime: Union[BitString, str]) -> BitString:
    """Read bit pairs while the even-position bit is 1, keeping the odd-position bit."""
    s = as_bits(x_prime).bits
    markers = s[0::2]
    pairs = markers.find("0")
    if pairs < 0:
        pairs = len(markers)
    if 2 * pairs > len(s):
        raise DecodeError(f"dangling pair marker at position {len(s) - 1}")
    return BitString(s[1:2 * pairs:2])


def pad_exponent(a: int, b: int) -> int:
    """Padding exponent for time O(k^a) and space b log k."""
    if a < 1 or b < 1:
        raise DomainError("exponents must be at least 1")
    return max(a, b)


def default_pad_target(rand_len: Callable[[int], int], k: int, a: int, b: int) -> int:
    return rand_len(k) ** pad_exponent(a, b)


def _padded_target(prg: TargetedPRG, x: BitString, pad_target: int) -> BitString:
    if prg.d > MAX_DERAND_SEED_BITS:
        raise GuardExceeded(f"seed length {prg.d} exceeds {MAX_DERAND_SEED_BITS}")
    xp = pad(x, pad_target).raw
    if len(xp) != prg.n:
        raise DomainError(f"padded target has {len(xp)} bits; generator expects {prg.n}")
    return xp


@dataclass(frozen=True)
class DecisionResult:
    answer: int
    accepting_seeds: int
    seeds_tried: int

    def to_json(self) -> dict:
        return {"answer": self.answer, "accepting_seeds": self.accepting_seeds, "seeds_tried": self.seeds_tried}


def derandomize_decision(M: Callable[[BitString, BitString], int], prg: TargetedPRG, x: Union[BitString, str],
                         pad_target: int) -> DecisionResult:
    """Run M on the generator's output for every seed; accept iff strictly more than half accept."""
    x = as_bits(x)
    xp = _padded_target(prg, x, pad_target)
    d = prg.d
    # M is evaluated once per distinct output, weighted by how many seeds produce it
    count = sum(k * (int(M(x, BitString(gamma))) & 1) for gamma, k in output_histogram(prg, xp).items())
    return DecisionResult(int(2 * count > (1 << d)), count, 1 << d)


@dataclass(frozen=True)
class SearchResult:
    witness: BitString
    seed_used: Optional[BitString]
    seeds_tried: int

    def to_json(self) -> dict:
        return {"witness": self.witness.bits, "seed_used": self.seed_used.bits if self.seed_used else None,
                "seeds_tried": self.seeds_tried}


def derandomize_search(problem: SearchProblem, prg: TargetedPRG, x: Union[BitString, str], pad_target: int,
                       exceptions: Optional[dict] = None) -> SearchResult:
    """First seed (lexicographic) whose finder candidate the exact verifier accepts.

    ``exceptions`` maps input strings to hard-coded answers; empty by default.
    """
    x = as_bits(x)
    if exceptions and x.bits in exceptions:
        return SearchResult(as_bits(exceptions[x.bits]), None, 0)
    xp = _padded_target(prg, x, pad_target)
    d, m = prg.d, prg.m
    verdicts: dict[int, bool] = {}  # per distinct output; the finder is deterministic given gamma
    for v, out in enumerate(output_ints(prg, xp).tolist()):
        ok = verdicts.get(out)
        if ok is None:
            y = problem.find(x, BitString.from_int(out, m))
            ok = verdicts[out] = bool(problem.derandomized_verify(x, y))
        if ok:
            return SearchResult(problem.find(x, BitString.from_int(out, m)), BitString.from_int(v, d), v + 1)
    return SearchResult(BitString(), None, 1 << d)


def induced_decision_distinguisher(M: Callable[[BitString, BitString], int], label: str = "M") -> Distinguisher:
    """D(m, x', gamma) = M(unpad(x'), gamma)."""
    return Distinguisher(lambda m, xp, gamma: M(unpad(xp), gamma), f"induced:{label}")


def induced_distinguisher(problem: SearchProblem, x: Optional[Union[BitString, str]] = None) -> Distinguisher:
    """D(m, x', gamma) = V(unpad(x'), F(unpad(x'), gamma)) with the exact verifier V."""

    def decide(m: int, xp: BitString, gamma: BitString) -> int:
        xx = unpad(xp)
        return problem.derandomized_verify(xx, problem.find(xx, gamma))

    return Distinguisher(decide, f"induced:{problem.label}")


# --- decision fixtures ---------------------------------------------------------

@dataclass(frozen=True)
class PromiseDecider:
    """Randomized decider M(x, gamma) with a fixed coin count; its promise answer at x is
    1 when P[M = 1] >= 2/3, 0 when <= 1/3, None otherwise."""

    M: Callable[[BitString, BitString], int]
    rand_len: int
    label: str
    notes: dict = field(default_factory=dict, compare=False)

    def acceptance(self, x: BitString) -> Fraction:
        hits = sum(int(self.M(x, g)) & 1 for g in all_strings(self.rand_len))
        return Fraction(hits, 1 << self.rand_len)

    def promise_answer(self, x: BitString) -> Optional[int]:
        p = self.acceptance(x)
        if p >= Fraction(2, 3):
            return 1
        if p <= Fraction(1, 3):
            return 0
        return None

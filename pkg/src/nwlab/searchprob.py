"""Search problems with randomized verifier/finder pairs, and the hardness search problem.

For the hardness problem an attacker pair is two machine descriptions (A, leak).
The leak reads ``r`` then ``x`` and may write at most ``ell`` bits; the attacker
reads the leak's output then ``x`` and may write at most ``n`` bits, zero-padded
to ``n``. A pair succeeds on a run when neither machine is truncated and the
padded guess is within Hamming distance ``< dist`` of ``r``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .core import (
    BitString, DomainError, GuardExceeded, RandomStream, Rational, all_strings, as_bits, bad_set_bound,
    hamming_ball_volume,
)
from .machines import (
    Machine, TruncationBudget, decode, enumerate_machines, enumerate_paths, run_truncated,
)

ORACLE_MAX_DESC_BITS = 6
ORACLE_MAX_RANDOM_BITS = 12
CENSUS_MAX_N = 14
CENSUS_MAX_RANDOM_BITS = 16


# --- generic search problems ---------------------------------------------------

@dataclass(frozen=True)
class SearchProblem:
    """Randomized verifier ``verify(x, y, omega)`` and finder ``find(x, gamma)``.

    ``rand_len`` and ``verify_rand_len`` give the coin counts for an input length.
    ``yes``/``no`` are optional exact membership predicates for toy problems;
    ``decide`` is an optional exact deterministic verifier.
    """

    verify: Callable[[BitString, BitString, BitString], int]
    find: Callable[[BitString, BitString], BitString]
    rand_len: Callable[[int], int]
    verify_rand_len: Callable[[int], int]
    label: str
    yes: Optional[Callable[[BitString, BitString], bool]] = None
    no: Optional[Callable[[BitString, BitString], bool]] = None
    decide: Optional[Callable[[BitString, BitString], int]] = None

    def verifier_acceptance(self, x: BitString, y: BitString) -> Fraction:
        k = self.verify_rand_len(len(x))
        hits = sum(self.verify(x, y, w) for w in all_strings(k))
        return Fraction(hits, 1 << k)

    def derandomized_verify(self, x: BitString, y: BitString) -> int:
        """Exact verifier: ``decide`` if given, else majority over all verifier coins."""
        if self.decide is not None:
            return int(self.decide(x, y))
        return int(self.verifier_acceptance(x, y) > Fraction(1, 2))

    def finder_success(self, x: BitString) -> Fraction:
        """P_gamma[(x, find(x, gamma)) in R_YES] by enumeration (needs ``yes``)."""
        if self.yes is None:
            raise DomainError(f"{self.label} has no exact yes-relation")
        k = self.rand_len(len(x))
        hits = sum(bool(self.yes(x, self.find(x, g))) for g in all_strings(k))
        return Fraction(hits, 1 << k)


@dataclass(frozen=True)
class ProblemCheck:
    ok: bool
    detail: str = ""


def check_search_problem(problem: SearchProblem, x: BitString, witnesses: Iterable[BitString]) -> ProblemCheck:
    """Exhaustive check of the promise-search invariants at input ``x``.

    ``witnesses`` is the candidate-y universe to scan for disjointness and the
    verifier's 2/3 - 1/3 behaviour.
    """
    x = as_bits(x)
    in_sr = False
    for y in witnesses:
        y = as_bits(y)
        is_yes = bool(problem.yes(x, y)) if problem.yes else False
        is_no = bool(problem.no(x, y)) if problem.no else False
        if is_yes and is_no:
            return ProblemCheck(False, f"({x}, {y}) is both yes and no")
        acc = problem.verifier_acceptance(x, y)
        if is_yes and acc < Fraction(2, 3):
            return ProblemCheck(False, f"verifier accepts yes pair ({x}, {y}) w.p. {acc}")
        if is_no and acc > Fraction(1, 3):
            return ProblemCheck(False, f"verifier accepts no pair ({x}, {y}) w.p. {acc}")
        in_sr = in_sr or is_yes
    if in_sr and problem.yes is not None and problem.finder_success(x) < Fraction(2, 3):
        return ProblemCheck(False, f"finder succeeds w.p. {problem.finder_success(x)} < 2/3 at {x}")
    return ProblemCheck(True, "in S_R" if in_sr else "not in S_R")


def chernoff_samples(gap: Rational, failure_prob: Rational) -> int:
    """Additive Hoeffding sizing ceil(2 ln(2/failure_prob) / gap^2)."""
    gap, failure_prob = Fraction(gap), Fraction(failure_prob)
    if not (0 < gap < 1) or not (0 < failure_prob < 1):
        raise DomainError("need 0 < gap < 1 and 0 < failure_prob < 1")
    return max(1, math.ceil(2 * math.log(2 / failure_prob) / float(gap) ** 2))


# --- the hardness search problem ---------------------------------------------

@dataclass(frozen=True)
class HardnessProblemParams:
    n: int
    c1: int
    c2: int
    ell: int
    dist_threshold: int
    max_desc_bits: Optional[int] = None  # defaults to floor(log2 n)
    sample_count: Optional[int] = None  # defaults to Chernoff sizing over all pairs
    failure_prob: Optional[Fraction] = None  # per-pair; defaults to 1/(20 * #pairs)

    def __post_init__(self) -> None:
        if self.n < 1 or self.c1 < 0 or self.c2 < 0 or self.ell < 0 or self.dist_threshold < 0:
            raise DomainError("invalid hardness parameters")
        if self.max_desc_bits is None:
            object.__setattr__(self, "max_desc_bits", self.n.bit_length() - 1)

    @property
    def budget(self) -> TruncationBudget:
        log_n = max(1, (self.n - 1).bit_length())
        return TruncationBudget(self.n ** self.c1, self.c2 * log_n)

    @property
    def num_descriptions(self) -> int:
        return (1 << (self.max_desc_bits + 1)) - 1

    @property
    def num_pairs(self) -> int:
        return self.num_descriptions ** 2

    def samples(self) -> int:
        if self.sample_count is not None:
            return self.sample_count
        fp = self.failure_prob if self.failure_prob is not None else Fraction(1, 20 * self.num_pairs)
        return chernoff_samples(Fraction(1, 4 * self.n), fp)

    def to_json(self) -> dict:
        return {"n": self.n, "c1": self.c1, "c2": self.c2, "ell": self.ell,
                "dist_threshold": self.dist_threshold, "max_desc_bits": self.max_desc_bits,
                "sample_count": self.samples()}


def _pad(out: BitString, n: int) -> int:
    return int(out.bits.ljust(n, "0"), 2) if n else 0


class PairEngine:
    """Exact outcome distributions of leak and attacker machines, cached by program.

    Probabilities are integers over ``2**max_random_bits``.
    """

    def __init__(self, params: HardnessProblemParams, max_random_bits: int = ORACLE_MAX_RANDOM_BITS) -> None:
        self.params = params
        self.budget = params.budget
        self.max_random_bits = max_random_bits
        self.scale = 1 << max_random_bits
        self._leak: dict = {}
        self._attack: dict = {}
        self._success: dict = {}

    def leak_outputs(self, leak: Machine, x: BitString, r: BitString) -> list[tuple[Optional[str], int]]:
        """[(w or None when the run fails, weight)]: failures are truncations and over-long leaks."""
        key = (leak.canonical(), x.bits, r.bits)
        hit = self._leak.get(key)
        if hit is None:
            leaves = enumerate_paths(leak, (r, x), self.budget, self.params.ell, self.max_random_bits)
            agg: dict = {}
            for leaf in leaves:
                w = leaf.outcome.output.bits if leaf.outcome.halted else None
                agg[w] = agg.get(w, 0) + (self.scale >> leaf.depth)
            hit = self._leak[key] = sorted(agg.items(), key=lambda kv: (kv[0] is None, kv[0] or ""))
        return hit

    def attacker_outputs(self, attacker: Machine, x: BitString, w: str) -> list[tuple[Optional[int], int]]:
        """[(padded guess as int or None on failure, weight)]."""
        key = (attacker.canonical(), x.bits, w)
        hit = self._attack.get(key)
        if hit is None:
            n = len(x)
            leaves = enumerate_paths(attacker, (w, x), self.budget, n, self.max_random_bits)
            agg: dict = {}
            for leaf in leaves:
                g = _pad(leaf.outcome.output, n) if leaf.outcome.halted else None
                agg[g] = agg.get(g, 0) + (self.scale >> leaf.depth)
            hit = self._attack[key] = list(agg.items())
        return hit

    def success_probability(self, attacker: Machine, leak: Machine, x: BitString, r: BitString) -> Fraction:
        """P[|leak'(x, r)| <= ell and d_H(A'(x, leak'(x, r)), r) < dist]."""
        key = (attacker.canonical(), leak.canonical(), x.bits, r.bits)
        hit = self._success.get(key)
        if hit is not None:
            return hit
        dist = self.params.dist_threshold
        rv = r.to_int()
        total = 0
        for w, lw in self.leak_outputs(leak, x, r):
            if w is None:
                continue
            good = sum(aw for g, aw in self.attacker_outputs(attacker, x, w)
                       if g is not None and (g ^ rv).bit_count() < dist)
            total += lw * good
        hit = self._success[key] = Fraction(total, self.scale * self.scale)
        return hit


def machine_pairs(max_desc_bits: int):
    """(attacker, leak) over all descriptions up to ``max_desc_bits``, attacker-major."""
    machines = list(enumerate_machines(max_desc_bits))
    return [(a, l) for a in machines for l in machines]


def distinct_pairs(max_desc_bits: int) -> list[tuple[Machine, Machine, int]]:
    """Behaviourally distinct (attacker, leak) pairs with their multiplicities."""
    groups: dict = {}
    for a, l in machine_pairs(max_desc_bits):
        key = (a.canonical(), l.canonical())
        if key in groups:
            groups[key][2] += 1
        else:
            groups[key] = [a, l, 1]
    return [tuple(v) for v in groups.values()]


@dataclass(frozen=True)
class OracleVerdict:
    verdict: str  # "yes" | "no" | "neither"
    max_probability: Fraction
    witness_pair: Optional[tuple[str, str]] = None  # (attacker bits, leak bits) attaining the max

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "max_probability": str(self.max_probability),
                "witness_pair": list(self.witness_pair) if self.witness_pair else None}


def _oracle_guard(params: HardnessProblemParams) -> None:
    if params.max_desc_bits > ORACLE_MAX_DESC_BITS:
        raise GuardExceeded(f"exact oracle supports descriptions up to {ORACLE_MAX_DESC_BITS} bits")


def hardness_yes_oracle(x: Union[BitString, str], r: Union[BitString, str], params: HardnessProblemParams,
                        engine: Optional[PairEngine] = None) -> OracleVerdict:
    """Exact membership of (x, r): yes if every pair succeeds w.p. < 1/(2n), no if
    some pair reaches 1/n (or |x| != |r|), neither otherwise."""
    x, r = as_bits(x), as_bits(r)
    if len(x) != len(r):
        return OracleVerdict("no", Fraction(1))
    _oracle_guard(params)
    engine = engine or PairEngine(params)
    n = params.n
    best, witness = Fraction(0), None
    for a, l, _ in distinct_pairs(params.max_desc_bits):
        p = engine.success_probability(a, l, x, r)
        if witness is None or p > best:
            best, witness = p, (a.description.bits.bits, l.description.bits.bits)
        if p >= Fraction(1, n):
            return OracleVerdict("no", p, witness)
    verdict = "yes" if best < Fraction(1, 2 * n) else "neither"
    return OracleVerdict(verdict, best, witness)


def _simulate_pair(attacker: Machine, leak: Machine, x: BitString, r: BitString,
                   params: HardnessProblemParams, coins: RandomStream) -> bool:
    budget = params.budget
    lo = run_truncated(leak, (r, x), coins.split("leak"), budget, params.ell)
    if not lo.halted:
        return False
    ao = run_truncated(attacker, (lo.output, x), coins.split("attacker"), budget, params.n)
    if not ao.halted:
        return False
    return (_pad(ao.output, params.n) ^ r.to_int()).bit_count() < params.dist_threshold


def estimate_pair(attacker: Machine, leak: Machine, x: BitString, r: BitString, params: HardnessProblemParams,
                  samples: int, rng: RandomStream) -> int:
    """Successes over ``samples`` independent simulated runs of the truncated pair."""
    return sum(_simulate_pair(attacker, leak, x, r, params, rng.split(f"run:{t}")) for t in range(samples))


def hardness_verifier(x: Union[BitString, str], r: Union[BitString, str], params: HardnessProblemParams,
                      rng: RandomStream, mode: str = "batched", engine: Optional[PairEngine] = None) -> int:
    """Reject (0) on the first pair whose sampled success rate exceeds 3/(4n), else accept.

    ``mode="simulate"`` runs every sample through the interpreter. ``mode="batched"``
    draws each pair's success count as Binomial(samples, p) with p from exhaustive
    path enumeration, which is the same distribution at a fraction of the cost.
    """
    x, r = as_bits(x), as_bits(r)
    if len(x) != len(r):
        return 0
    n = params.n
    samples = params.samples()
    limit = Fraction(3, 4 * n) * samples  # reject when successes > limit
    pairs = machine_pairs(params.max_desc_bits)
    if mode == "simulate":
        for t, (a, l) in enumerate(pairs):
            if estimate_pair(a, l, x, r, params, samples, rng.split(f"pair:{t}")) > limit:
                return 0
        return 1
    if mode != "batched":
        raise DomainError(f"unknown verifier mode {mode!r}")
    _oracle_guard(params)
    engine = engine or PairEngine(params)
    probs = np.array([float(engine.success_probability(a, l, x, r)) for a, l in pairs])
    counts = rng.numpy_generator().binomial(samples, probs)
    return 0 if np.any(counts > float(limit)) else 1


def hardness_finder(x: Union[BitString, str], rng: RandomStream) -> BitString:
    """A uniformly random string as long as x."""
    return rng.bits(len(as_bits(x)))


@dataclass(frozen=True)
class BadSetCensus:
    count: int
    bound: int
    n: int
    ell: int
    dist: int

    @property
    def passed(self) -> bool:
        return self.count <= self.bound

    def to_json(self) -> dict:
        return {"count": self.count, "bound": self.bound, "n": self.n, "ell": self.ell, "dist": self.dist,
                "pass": self.passed}


def _popcount_table(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)


def random_is_hard_census(attacker: Machine, leak: Machine, x: Union[BitString, str], ell: int, dist: int,
                          params: HardnessProblemParams,
                          max_random_bits: int = CENSUS_MAX_RANDOM_BITS,
                          engine: Optional[PairEngine] = None) -> BadSetCensus:
    """Count r with P_A[d_H(A(x, leak'(x, r)), r) < dist] >= 1/(2n), where leak' is the
    leak with its best random tape fixed (maximum over its enumerated paths) and
    only leak outputs of at most ``ell`` bits count."""
    x = as_bits(x)
    n = len(x)
    if n > CENSUS_MAX_N:
        raise GuardExceeded(f"census supports n <= {CENSUS_MAX_N}")
    if params.ell != ell or params.dist_threshold != dist or params.n != n:
        params = HardnessProblemParams(n, params.c1, params.c2, ell, dist, params.max_desc_bits)
    engine = engine or PairEngine(params, max_random_bits)
    bound = bad_set_bound(n, ell, dist) if dist >= 1 else 0
    if dist == 0:
        return BadSetCensus(0, bound, n, ell, dist)
    pop = _popcount_table(n)
    r_all = np.arange(1 << n, dtype=np.int64)
    success_by_w: dict = {}

    def success_vector(w: str) -> np.ndarray:
        vec = success_by_w.get(w)
        if vec is None:
            vec = np.zeros(1 << n, dtype=np.int64)
            for g, weight in engine.attacker_outputs(attacker, x, w):
                if g is not None:
                    vec += weight * (pop[r_all ^ g] < dist)
            success_by_w[w] = vec
        return vec

    # threshold: weight / scale >= 1/(2n)  <=>  2n * weight >= scale
    count = 0
    for rv in range(1 << n):
        r = BitString.from_int(rv, n)
        best = 0
        for w, _ in engine.leak_outputs(leak, x, r):
            if w is None or len(w) > ell:
                continue
            best = max(best, int(success_vector(w)[rv]))
        if 2 * n * best >= engine.scale:
            count += 1
    return BadSetCensus(count, bound, n, ell, dist)


@dataclass(frozen=True)
class FinderCensus:
    n: int
    failing: int
    fraction: Fraction
    pair_count: int
    union_bound_exact: Fraction  # pairs * bad_set_bound / 2^n
    union_bound_paper_form: Fraction  # n^2 * n * 2^ell * vol(n, dist - 1) / 2^n

    def to_json(self) -> dict:
        return {"n": self.n, "failing": self.failing, "fraction": str(self.fraction),
                "pair_count": self.pair_count, "union_bound_exact": str(self.union_bound_exact),
                "union_bound_paper_form": str(self.union_bound_paper_form),
                "pass": self.fraction < Fraction(1, 3) and self.fraction <= self.union_bound_paper_form}


def finder_failure_census(x: Union[BitString, str], params: HardnessProblemParams) -> FinderCensus:
    """Exact share of finder outputs r that are not yes-instances for x."""
    x = as_bits(x)
    n = len(x)
    engine = PairEngine(params)
    failing = sum(hardness_yes_oracle(x, r, params, engine).verdict != "yes" for r in all_strings(n))
    pairs = params.num_pairs
    dist, ell = params.dist_threshold, params.ell
    exact = Fraction(pairs * bad_set_bound(n, ell, dist), 1 << n)
    paper = Fraction(n * n * n * (1 << ell) * hamming_ball_volume(n, dist - 1), 1 << n)
    return FinderCensus(n, failing, Fraction(failing, 1 << n), pairs, exact, paper)


# --- toy search problems -------------------------------------------------------

def _noisy(bit: int, omega: BitString) -> int:
    """Flip the verdict when both coins are 1 (error 1/4)."""
    return bit ^ (omega.bits == "11")


def identity_problem() -> SearchProblem:
    """Yes iff y = x; the finder returns x outright."""
    yes = lambda x, y: y == x
    return SearchProblem(
        verify=lambda x, y, w: _noisy(int(y == x), w),
        find=lambda x, g: x,
        rand_len=lambda k: k, verify_rand_len=lambda k: 2,
        label="identity", yes=yes, no=lambda x, y: y != x,
    )


def identity_seed_problem() -> SearchProblem:
    """Yes iff y = x; the finder copies its first |x| coins."""
    return SearchProblem(
        verify=lambda x, y, w: _noisy(int(y == x), w),
        find=lambda x, g: g[: len(x)],
        rand_len=lambda k: k, verify_rand_len=lambda k: 2,
        label="identity-seed", yes=lambda x, y: y == x, no=lambda x, y: y != x,
    )


def _agreement(x: BitString, y: BitString) -> int:
    return len(x) - (x.to_int() ^ y.to_int()).bit_count() if len(x) == len(y) else -1


def agreement_problem(flip_pattern: str = "11") -> SearchProblem:
    """Find y agreeing with x on >= 2/3 of positions; no-instances agree on < 1/2.

    The finder flips bit i when coin pair i equals ``flip_pattern``.
    """
    q = len(flip_pattern)

    def find(x: BitString, g: BitString) -> BitString:
        return BitString.from_bits(
            b ^ (g.bits[q * i: q * i + q] == flip_pattern) for i, b in enumerate(x))

    yes = lambda x, y: 3 * _agreement(x, y) >= 2 * len(x)
    no = lambda x, y: 2 * _agreement(x, y) < len(x)
    return SearchProblem(
        verify=lambda x, y, w: _noisy(int(yes(x, y)), w),
        find=find, rand_len=lambda k: q * k, verify_rand_len=lambda k: 2,
        label=f"agreement:{flip_pattern}", yes=yes, no=no,
    )

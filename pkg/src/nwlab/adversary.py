"""Distinguisher-to-predictor machinery for the targeted generator.

Hybrids interpolate between uniform strings and generator outputs; ``run_leak``
and ``run_attacker`` turn a distinguisher into an approximator of the hard
function's output, and ``attack_success_census`` measures exactly how often
that approximation is good.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from .core import (
    BitString, DomainError, GuardExceeded, RandomStream, Rational, all_strings, as_bits, hamming_distance,
)
from .design import Design
from .nwprg import PaperParams, TargetedPRG, ToyParams, expand_with_table, iter_output_bits, output_histogram

MAX_EXACT_SEED_BITS = 20
MAX_EXACT_OUTPUT_BITS = 20
MAX_EXACT_AUX_BITS = 8
CENSUS_GUARD = 1 << 22


@dataclass(frozen=True)
class Distinguisher:
    """``decide(m, target, candidate)`` -> 0/1, or with ``aux_bits`` > 0 an extra
    ``aux`` BitString argument carrying the distinguisher's own coins."""

    decide: Callable[..., int]
    label: str
    aux_bits: int = 0

    def __call__(self, m: int, target: BitString, candidate: BitString, aux: Optional[BitString] = None) -> int:
        if self.aux_bits:
            if aux is None or len(aux) != self.aux_bits:
                raise DomainError(f"{self.label} needs {self.aux_bits} auxiliary bits")
            return int(self.decide(m, target, candidate, aux)) & 1
        return int(self.decide(m, target, candidate)) & 1


def constant_distinguisher(bit: int) -> Distinguisher:
    return Distinguisher(lambda m, x, c: bit, f"const:{bit}")


def bit_distinguisher(index: int) -> Distinguisher:
    return Distinguisher(lambda m, x, c: c[index], f"bit:{index}")


def equality_distinguisher(value: Union[BitString, str]) -> Distinguisher:
    value = as_bits(value)
    return Distinguisher(lambda m, x, c: int(c == value), f"equals:{value.bits}")


def parity_distinguisher(indices) -> Distinguisher:
    idx = tuple(indices)
    return Distinguisher(lambda m, x, c: sum(c[i] for i in idx) & 1, f"parity:{','.join(map(str, idx))}")


def accept_set_distinguisher(accept, label: str = "accept-set") -> Distinguisher:
    accepted = frozenset(as_bits(a).bits for a in accept)
    return Distinguisher(lambda m, x, c: int(c.bits in accepted), label)


def range_distinguisher(prg: TargetedPRG, x: Union[BitString, str]) -> Distinguisher:
    """Accepts exactly the generator's outputs on target ``x``."""
    return accept_set_distinguisher(set(iter_output_bits(prg, x)), "in-range")


@dataclass(frozen=True)
class AdvantageReport:
    p_generator: Fraction  # P_s[D(G(s)) = 1]
    p_uniform: Fraction  # P_gamma[D(gamma) = 1]
    beta_signed_b0: Fraction
    beta_signed_b1: Fraction
    beta: Fraction
    b_star: int
    mode: str = "exact"

    def to_json(self) -> dict:
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.__dict__.items()}


def _check_exact(prg: TargetedPRG) -> None:
    if prg.d > MAX_EXACT_SEED_BITS or prg.m > MAX_EXACT_OUTPUT_BITS:
        raise GuardExceeded(f"exact enumeration needs d <= {MAX_EXACT_SEED_BITS} and m <= {MAX_EXACT_OUTPUT_BITS}")


def _acceptance(D: Distinguisher, m: int, x: BitString, weighted, aux_list) -> tuple[int, int]:
    """(accepting weight, total weight) over (candidate, weight) pairs and aux strings."""
    hits = total = 0
    for cand, weight in weighted:
        c = BitString(cand)
        v = sum(D(m, x, c, a) for a in aux_list) if aux_list else D(m, x, c)
        hits += weight * v
        total += weight * (len(aux_list) if aux_list else 1)
    return hits, total


def advantage_from_probabilities(p_gen: Fraction, p_uni: Fraction, mode: str = "exact") -> AdvantageReport:
    b1 = p_gen - p_uni
    b0 = (1 - p_gen) - (1 - p_uni)
    beta = max(abs(b0), abs(b1))
    b_star = 1 if b1 >= b0 else 0
    return AdvantageReport(p_gen, p_uni, b0, b1, beta, b_star, mode)


def exact_advantage(D: Distinguisher, prg: TargetedPRG, x: Union[BitString, str],
                    rng: Optional[RandomStream] = None, samples: int = 256) -> AdvantageReport:
    """Exact acceptance gap between generator outputs and uniform strings.

    Distinguishers with more than ``MAX_EXACT_AUX_BITS`` coins have their coins
    sampled from ``rng`` (``samples`` draws, shared by both sides); the report's
    ``mode`` says which happened.
    """
    _check_exact(prg)
    x = as_bits(x)
    m = prg.m
    mode = "exact"
    aux_list: list[BitString] = []
    if D.aux_bits:
        if D.aux_bits <= MAX_EXACT_AUX_BITS:
            aux_list = list(all_strings(D.aux_bits))
        else:
            if rng is None:
                raise DomainError("sampled mode needs a RandomStream")
            aux_list = [rng.bits(D.aux_bits) for _ in range(samples)]
            mode = "sampled"
    gen_hits, gen_total = _acceptance(D, m, x, output_histogram(prg, x).items(), aux_list)
    uni_hits, uni_total = _acceptance(D, m, x, ((c.bits, 1) for c in all_strings(m)), aux_list)
    return advantage_from_probabilities(Fraction(gen_hits, gen_total), Fraction(uni_hits, uni_total), mode)


# --- hybrids ---------------------------------------------------------------

def hybrid_sample(prg: TargetedPRG, x: Union[BitString, str], j: int,
                  seed_part: Union[BitString, str], fill: Union[BitString, str]) -> BitString:
    """First j bits from the generator on seed ``seed_part``, the rest copied from ``fill``."""
    seed_part, fill = as_bits(seed_part), as_bits(fill)
    m = prg.m
    if not 0 <= j <= m:
        raise DomainError(f"hybrid index {j} outside [0, {m}]")
    if len(fill) != m - j:
        raise DomainError(f"fill has {len(fill)} bits, need {m - j}")
    if len(seed_part) != prg.d:
        raise DomainError(f"seed has {len(seed_part)} bits, need {prg.d}")
    if j == 0:
        return fill
    z = prg.truth_table(x).bits
    head = expand_with_table(prg.index_sets()[:j], z, seed_part.bits)
    return BitString(head + fill.bits)


def hybrid_acceptance(D: Distinguisher, prg: TargetedPRG, x: Union[BitString, str], j: int, b: int = 1) -> Fraction:
    """P[D(H_j) = b] over a uniform seed and uniform fill, by enumeration."""
    _check_exact(prg)
    if D.aux_bits:
        raise DomainError("hybrid enumeration supports deterministic distinguishers only")
    x = as_bits(x)
    m = prg.m
    z = prg.truth_table(x).bits
    heads: dict[str, int] = {}
    for v in range(1 << prg.d):
        s = format(v, f"0{prg.d}b") if prg.d else ""
        h = expand_with_table(prg.index_sets()[:j], z, s)
        heads[h] = heads.get(h, 0) + 1
    hits = 0
    for h, count in heads.items():
        for f in all_strings(m - j):
            hits += count * (D(m, x, BitString(h + f.bits)) == b)
    return Fraction(hits, (1 << prg.d) * (1 << (m - j)))


# --- leak and attacker -----------------------------------------------------

def _ceil_log2(m: int) -> int:
    return (m - 1).bit_length() if m > 1 else 0


@dataclass(frozen=True)
class LeakOutput:
    """Transcript written by the leak: (j, y off I_j, tables, b, w_j, w tail)."""

    j: int  # 1-based
    y_off: BitString
    tables: tuple[BitString, ...]
    b: int
    w_j: int
    w_tail: BitString
    m: int
    d: int
    r: int

    def __post_init__(self) -> None:
        if not 1 <= self.j <= self.m:
            raise DomainError(f"j={self.j} outside [1, {self.m}]")
        if len(self.y_off) != self.d - self.r:
            raise DomainError("y_off length must be d - r")
        if len(self.tables) != self.j - 1 or any(len(t) != 1 << self.r for t in self.tables):
            raise DomainError("need j-1 tables of 2^r bits each")
        if len(self.w_tail) != self.m - self.j or self.b not in (0, 1) or self.w_j not in (0, 1):
            raise DomainError("malformed b / w_j / tail")

    @property
    def serialized(self) -> BitString:
        head = BitString.from_int(self.j - 1, _ceil_log2(self.m))
        parts = [head.bits, self.y_off.bits, *(t.bits for t in self.tables),
                 str(self.b), str(self.w_j), self.w_tail.bits]
        return BitString("".join(parts))

    @staticmethod
    def serialized_length(m: int, d: int, r: int, j: int) -> int:
        return _ceil_log2(m) + (d - r) + (j - 1) * (1 << r) + 2 + (m - j)

    @classmethod
    def from_bits(cls, bits: Union[BitString, str], m: int, d: int, r: int) -> LeakOutput:
        s = as_bits(bits).bits
        w = _ceil_log2(m)
        if len(s) < w:
            raise DomainError("leak transcript too short")
        j = (int(s[:w], 2) if w else 0) + 1
        if j > m or len(s) != cls.serialized_length(m, d, r, j):
            raise DomainError("leak transcript length does not match its j field")
        pos = w
        y_off = BitString(s[pos:pos + d - r]); pos += d - r
        width = 1 << r
        tables = []
        for _ in range(j - 1):
            tables.append(BitString(s[pos:pos + width])); pos += width
        b, w_j = int(s[pos]), int(s[pos + 1]); pos += 2
        return cls(j, y_off, tuple(tables), b, w_j, BitString(s[pos:]), m, d, r)


def _full_seed(index_set, off_positions, y_off: str, k: int, r: int, d: int) -> str:
    y = [""] * d
    for pos, bit in zip(off_positions, y_off):
        y[pos] = bit
    for pos, bit in zip(index_set, format(k, f"0{r}b")):
        y[pos] = bit
    return "".join(y)


def _leak_setup(params: ToyParams, design: Design, z: BitString):
    if len(z) != params.n or params.n != 1 << params.r:
        raise DomainError(f"leak needs |z| = n = 2^r; got |z|={len(z)}, n={params.n}, r={params.r}")
    if design.r != params.r or design.d != params.d or design.m < params.m:
        raise DomainError("design does not match params")
    return design.sets[: params.m]


def build_leak(z: Union[BitString, str], params: ToyParams, design: Design, j: int,
               y_off: Union[BitString, str], b: int, w_j: int, w_tail: Union[BitString, str]) -> LeakOutput:
    """Deterministic part of the leak once its random choices are fixed."""
    z = as_bits(z)
    sets = _leak_setup(params, design, z)
    y_off = as_bits(y_off)
    d, r = params.d, params.r
    ij = sets[j - 1]
    off = [p for p in range(d) if p not in set(ij)]
    seeds = [_full_seed(ij, off, y_off.bits, k, r, d) for k in range(1 << r)]
    tables = tuple(
        BitString("".join(z.bits[int("".join(y[p] for p in sets[i]), 2)] for y in seeds)) for i in range(j - 1)
    )
    return LeakOutput(j, y_off, tables, b, w_j, as_bits(w_tail), params.m, d, r)


def run_leak(x: Union[BitString, str], z: Union[BitString, str], params: ToyParams, design: Design,
             rng: RandomStream) -> LeakOutput:
    """Sample j, y off I_j, b, w_j and the tail, then tabulate h(y_{I_i}) for i < j."""
    m, d, r = params.m, params.d, params.r
    j = 1 + rng.randbelow(m)
    y_off = rng.bits(d - r)
    b = rng.next_bit()
    w_j = rng.next_bit()
    w_tail = rng.bits(m - j)
    return build_leak(z, params, design, j, y_off, b, w_j, w_tail)


def attacker_candidate(leak_out: LeakOutput, k: int) -> BitString:
    """H_{j-1} with y_{I_j} = k: table bits, then w_j, then the tail."""
    head = "".join(t.bits[k] for t in leak_out.tables)
    return BitString(head + str(leak_out.w_j) + leak_out.w_tail.bits)


def run_attacker(x: Union[BitString, str], leak_out: LeakOutput, D: Distinguisher, params: ToyParams,
                 design: Design, _memo: Optional[dict] = None) -> BitString:
    """Bit k is D(H_{j-1}(k)) xor b xor w_j."""
    x = as_bits(x)
    if (leak_out.m, leak_out.d, leak_out.r) != (params.m, params.d, params.r):
        raise DomainError("leak transcript was produced for different parameters")
    if params.n != 1 << params.r:
        raise DomainError("attacker needs n = 2^r")
    memo = _memo if _memo is not None else {}
    flip = leak_out.b ^ leak_out.w_j
    out = []
    for k in range(1 << params.r):
        cand = attacker_candidate(leak_out, k)
        v = memo.get(cand.bits)
        if v is None:
            v = memo[cand.bits] = D(params.m, x, cand)
        out.append("1" if v ^ flip else "0")
    return BitString("".join(out))


@dataclass(frozen=True)
class CensusReport:
    beta: Fraction
    bound: Fraction  # beta / (8m)
    fraction: Fraction  # weighted share of leak choices whose attacker output is good
    agreement_needed: Fraction  # (1/2 + beta/(2m)) * n
    choices: int
    good_choices: int
    b_star: int

    @property
    def passed(self) -> bool:
        return self.fraction >= self.bound

    def to_json(self) -> dict:
        return {"beta": str(self.beta), "bound": str(self.bound), "fraction": str(self.fraction),
                "agreement_needed": str(self.agreement_needed), "choices": self.choices,
                "good_choices": self.good_choices, "b_star": self.b_star, "pass": self.passed}


def attack_success_census(D: Distinguisher, prg: TargetedPRG, x: Union[BitString, str],
                          advantage: Optional[AdvantageReport] = None) -> CensusReport:
    """Exact probability, over the leak's coins, that the attacker agrees with f(x)
    on at least (1/2 + beta/(2m)) n positions."""
    params, design = prg.params, prg.design
    m, d, r, n = params.m, params.d, params.r, params.n
    if m * (1 << (d - r + m - 1)) > CENSUS_GUARD:
        raise GuardExceeded(f"census over m*2^(d-r+m-1) = {m * (1 << (d - r + m - 1))} choices exceeds 2^22")
    x = as_bits(x)
    adv = advantage or exact_advantage(D, prg, x)
    beta = adv.beta
    z = prg.truth_table(x)
    need = (Fraction(1, 2) + beta / (2 * m)) * n
    memo: dict = {}
    total = Fraction(0)
    choices = good = 0
    for j in range(1, m + 1):
        weight = Fraction(1, m * (1 << (d - r)) * 4 * (1 << (m - j)))
        for y_off in all_strings(d - r):
            base = build_leak(z, params, design, j, y_off, 0, 0, BitString.zeros(m - j))
            for b in (0, 1):
                for w_j in (0, 1):
                    for tail in all_strings(m - j):
                        leak_out = LeakOutput(j, y_off, base.tables, b, w_j, tail, m, d, r)
                        guess = run_attacker(x, leak_out, D, params, design, memo)
                        agree = n - hamming_distance(guess, z)
                        choices += 1
                        if agree >= need:
                            good += 1
                            total += weight
    return CensusReport(beta, beta / (8 * m), total, need, choices, good, adv.b_star)


# --- leakage accounting ----------------------------------------------------

@dataclass(frozen=True)
class LeakLength:
    total: int
    index_bits: int
    off_bits: int
    tail_bits: int
    table_bits: int
    log2_table_term: Fraction  # log2(m) + s_overlap when m is a power of two
    log2_target: Union[Fraction, float]  # epsilon * log2 n
    identity_holds: bool

    def to_json(self) -> dict:
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.__dict__.items()}


def leak_bit_length(params: PaperParams) -> LeakLength:
    """Worst-case leak length log m + (d - r) + m + m 2^(2 alpha^2 d), with the
    table term checked against n^epsilon in log2."""
    m = params.m
    index_bits = _ceil_log2(m)
    off_bits = params.d - params.r
    table_bits = m << params.s_overlap
    total = index_bits + off_bits + m + table_bits
    if m & (m - 1) == 0:
        log2_table = Fraction(m.bit_length() - 1 + params.s_overlap)
        target = params.epsilon * params.log2_n
        holds = log2_table == target
    else:
        log2_table = Fraction(math.log2(m) + params.s_overlap)
        target = float(params.epsilon) * float(params.log2_n)
        holds = math.isclose(float(log2_table), target, rel_tol=1e-12)
    return LeakLength(total, index_bits, off_bits, m, table_bits, log2_table, target, holds)


def leak_exponent_identity(alpha: Rational, log2_n: Rational) -> tuple[Fraction, Fraction]:
    """(log2(m 2^(2 alpha^2 d)), epsilon log2 n) with m = n^(alpha^3/5), d = log2 n / alpha, unrounded."""
    alpha, log2_n = Fraction(alpha), Fraction(log2_n)
    log2_m = alpha ** 3 / 5 * log2_n
    d = log2_n / alpha
    lhs = log2_m + 2 * alpha ** 2 * d
    rhs = (2 * alpha + alpha ** 3 / 5) * log2_n
    return lhs, rhs


# --- hardness tester -------------------------------------------------------

@dataclass(frozen=True)
class HardnessEstimate:
    trials: int
    successes: int
    leak_violations: int
    estimate: float
    ci_low: float
    ci_high: float
    threshold: float  # 1/n
    confidence: float

    @property
    def violates(self) -> bool:
        return self.ci_low >= self.threshold

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["violates"] = self.violates
        return out


def hoeffding_halfwidth(trials: int, confidence: float) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


def test_hardness(f, attacker: Callable, leak: Callable, x: Union[BitString, str], ell: int, dist: int,
                  trials: int, rng: RandomStream, confidence: float = 0.95) -> HardnessEstimate:
    """Monte Carlo estimate of P[|leak| <= ell and d_H(A(x, leak(x, f(x))), f(x)) < dist].

    ``leak(x, z, rng)`` and ``attacker(x, w, rng)`` return BitStrings. A trial whose
    leak exceeds ``ell`` bits counts as a failure for the attacker.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    x = as_bits(x)
    n = len(x)
    z = f(x)
    wins = over = 0
    for t in range(trials):
        coins = rng.split(f"trial:{t}")
        w = as_bits(leak(x, z, coins.split("leak")))
        if len(w) > ell:
            over += 1
            continue
        guess = as_bits(attacker(x, w, coins.split("attacker")))
        if len(guess) == n and hamming_distance(guess, z) < dist:
            wins += 1
    est = wins / trials
    half = hoeffding_halfwidth(trials, confidence)
    return HardnessEstimate(trials, wins, over, est, max(0.0, est - half), min(1.0, est + half),
                            1 / n, confidence)


test_hardness.__test__ = False  # not a pytest test

"""Combinatorial designs: families of r-subsets of [d] with pairwise overlap <= s."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import DomainError, Rational


@dataclass(frozen=True)
class Design:
    d: int
    r: int
    s: int
    sets: tuple[tuple[int, ...], ...]
    # generators record shortfalls and rounding here; not part of equality
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sets", tuple(tuple(sorted(st)) for st in self.sets))

    def __len__(self) -> int:
        return len(self.sets)

    @property
    def m(self) -> int:
        return len(self.sets)

    def prefix(self, m: int) -> Design:
        return Design(self.d, self.r, self.s, self.sets[:m])

    def to_json(self) -> dict:
        return {"d": self.d, "r": self.r, "s": self.s, "sets": [list(st) for st in self.sets]}

    @classmethod
    def from_json(cls, obj: dict) -> Design:
        return cls(int(obj["d"]), int(obj["r"]), int(obj["s"]), tuple(tuple(int(i) for i in st) for st in obj["sets"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class DesignReport:
    valid: bool
    reason: str = ""
    index: Optional[int] = None  # 1-based set index for a malformed set
    pair: Optional[tuple[int, int]] = None  # 1-based (j, k) of first overlap violation

    def to_json(self) -> dict:
        return {"valid": self.valid, "reason": self.reason, "index": self.index,
                "pair": list(self.pair) if self.pair else None}


def verify_design(design: Design) -> DesignReport:
    """Check every design invariant; report the first failure in (j, k) order."""
    d, r, s = design.d, design.r, design.s
    if not (d > r > s >= 0):
        return DesignReport(False, f"parameters violate d > r > s >= 0: {(d, r, s)}")
    frozen = []
    for j, st in enumerate(design.sets, start=1):
        members = set(st)
        if len(members) != len(st) or len(members) != r:
            return DesignReport(False, f"set {j} has {len(members)} distinct elements, expected {r}", index=j)
        if any(i < 0 or i >= d for i in members):
            return DesignReport(False, f"set {j} has an element outside [0, {d})", index=j)
        frozen.append(members)
    for j in range(len(frozen)):
        for k in range(j + 1, len(frozen)):
            overlap = len(frozen[j] & frozen[k])
            if overlap > s:
                return DesignReport(False, f"sets {j + 1} and {k + 1} share {overlap} > {s}", pair=(j + 1, k + 1))
    return DesignReport(True)


def _check_params(d: int, r: int, s: int) -> None:
    if not (d > r > s >= 0):
        raise DomainError(f"need d > r > s >= 0, got d={d}, r={r}, s={s}")


def _can_pick(classes: list[tuple[tuple[int, ...], int]], caps: list[int], goal: int) -> bool:
    """Whether at least ``goal`` positions can be picked from ``classes`` (member sets,
    available count) without any kept set exceeding its remaining cap.

    This is a small integer packing problem; it goes to the MILP solver unless a
    counting bound already settles it.
    """
    if goal <= 0:
        return True
    per_class = sum(min([avail] + [caps[t] for t in mem]) for mem, avail in classes)
    if per_class < goal:
        return False
    # a greedy packing, least constrained classes first, often reaches the goal
    left = list(caps)
    got = 0
    for mem, avail in sorted(classes, key=lambda kv: len(kv[0])):
        c = min([avail] + [left[t] for t in mem])
        for t in mem:
            left[t] -= c
        got += c
    if got >= goal:
        return True
    from scipy.optimize import Bounds, LinearConstraint, milp

    k = len(caps)
    a = np.zeros((k, len(classes)))
    for col, (mem, _) in enumerate(classes):
        a[list(mem), col] = 1
    upper = np.array([avail for _, avail in classes], dtype=float)
    res = milp(c=-np.ones(len(classes)), integrality=np.ones(len(classes)),
               bounds=Bounds(np.zeros(len(classes)), upper),
               constraints=LinearConstraint(a, -np.inf, np.array(caps, dtype=float)))
    if res.status != 0:
        raise RuntimeError(f"design packing solver failed: {res.message}")
    return round(-res.fun) >= goal


def _lex_first_feasible(d: int, r: int, s: int, kept: Sequence[frozenset]) -> Optional[tuple[int, ...]]:
    """Lexicographically smallest r-subset of [d] meeting every kept set in <= s points.

    Positions with the same membership among the kept sets are interchangeable, so
    whether a partial choice can be completed is an exact packing question over class
    counts. With that test the first admissible subset is built one element at a time;
    the result equals scanning ``itertools.combinations(range(d), r)``.
    """
    membership = [tuple(t for t, st in enumerate(kept) if i in st) for i in range(d)]
    caps = [s] * len(kept)

    def completable(start: int, need: int) -> bool:
        counts: dict[tuple[int, ...], int] = {}
        for i in range(start, d):
            mem = membership[i]
            if all(caps[t] > 0 for t in mem):
                counts[mem] = counts.get(mem, 0) + 1
        free = counts.pop((), 0)
        if free >= need:
            return True
        return _can_pick(sorted(counts.items()), caps, need - free)

    if not completable(0, r):
        return None
    chosen: list[int] = []
    for i in range(d):
        need = r - len(chosen)
        if need == 0:
            break
        mem = membership[i]
        if any(caps[t] == 0 for t in mem):
            continue
        for t in mem:
            caps[t] -= 1
        if completable(i + 1, need - 1):
            chosen.append(i)
        else:
            for t in mem:
                caps[t] += 1
    return tuple(chosen)


def gen_design_greedy(d: int, r: int, s: int, m_target: int) -> Design:
    """Keep r-subsets of [d] in lexicographic order while they respect the overlap bound.

    Stops at ``m_target`` sets or when no admissible subset remains; a shortfall is
    recorded in ``notes``.
    """
    _check_params(d, r, s)
    if m_target < 0:
        raise DomainError("m_target must be non-negative")
    kept: list[frozenset] = []
    sets: list[tuple[int, ...]] = []
    while len(sets) < m_target:
        nxt = _lex_first_feasible(d, r, s, kept)
        if nxt is None:
            break
        sets.append(nxt)
        kept.append(frozenset(nxt))
    notes = {"m_target": m_target, "shortfall": m_target - len(sets)}
    return Design(d, r, s, tuple(sets), notes)


def gen_design_greedy_bruteforce(d: int, r: int, s: int, m_target: int) -> Design:
    """Reference scan over ``itertools.combinations``; exponential, tests only."""
    _check_params(d, r, s)
    sets: list[tuple[int, ...]] = []
    for cand in itertools.combinations(range(d), r):
        if len(sets) >= m_target:
            break
        cs = set(cand)
        if all(len(cs.intersection(st)) <= s for st in sets):
            sets.append(cand)
    return Design(d, r, s, tuple(sets), {"m_target": m_target, "shortfall": m_target - len(sets)})


def km_parameters(d: int, alpha: Rational) -> tuple[int, int, int, dict]:
    """Rounded (r, s, size floor) for a (d, alpha d, 2 alpha^2 d) design of size 2^(alpha^4 d / 5)."""
    alpha = Fraction(alpha)
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    r_exact = alpha * d
    s_exact = 2 * alpha * alpha * d
    r, s = math.floor(r_exact), math.floor(s_exact)
    log_size = alpha ** 4 * d / 5
    size_floor = _floor_pow2(log_size)
    notes = {
        "r_exact": str(r_exact), "s_exact": str(s_exact), "log2_size": str(log_size),
        "rounded": r_exact != r or s_exact != s,
        "integral": r_exact.denominator == 1 and s_exact.denominator == 1,
    }
    return r, s, size_floor, notes


def _floor_pow2(exponent: Fraction) -> int:
    """floor(2^exponent) for a non-negative rational exponent, computed exactly."""
    whole = math.floor(exponent)
    frac = exponent - whole
    if frac == 0:
        return 1 << whole
    # floor(2^(p/q) * 2^whole): largest v with v^q <= 2^(p + q*whole)
    import gmpy2

    p, q = frac.numerator, frac.denominator
    root, _ = gmpy2.iroot(gmpy2.mpz(1) << (p + q * whole), q)
    return int(root)


def gen_design_km(d: int, alpha: Rational) -> Design:
    r, s, size_floor, notes = km_parameters(d, alpha)
    if r <= s:
        raise DomainError(f"degenerate design parameters after rounding: r={r}, s={s}")
    if r >= d:
        raise DomainError(f"r={r} must be below d={d}")
    design = gen_design_greedy(d, r, s, size_floor)
    notes.update(size_floor=size_floor, shortfall=design.notes["shortfall"])
    return Design(d, r, s, design.sets, notes)


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


def design_from_polynomials(p: int, degree: int, m_target: int) -> Design:
    """Graphs of polynomials over GF(p): I_q = {(i, q(i))} flattened to i*p + q(i)."""
    if not _is_prime(p):
        raise DomainError(f"{p} is not prime")
    if degree < 0 or degree >= p:
        raise DomainError("need 0 <= degree < p")
    if m_target > p ** (degree + 1):
        raise DomainError(f"only {p ** (degree + 1)} polynomials of degree <= {degree}")
    sets = []
    for coeffs in itertools.islice(itertools.product(range(p), repeat=degree + 1), m_target):
        # coeffs[0] is the constant term
        sets.append(tuple(i * p + sum(c * pow(i, e, p) for e, c in enumerate(coeffs)) % p for i in range(p)))
    return Design(p * p, p, degree, tuple(sets), {"p": p, "degree": degree})

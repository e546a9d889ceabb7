"""Toy decision deciders, toy search problems and desk-scale generators.

JSON form for problems: ``{"label": ..., "kind": ..., "params": {...}}``.
"""
from __future__ import annotations

import zlib
from typing import Callable

from .core import BitString, DomainError
from .derand import PromiseDecider
from .design import gen_design_greedy
from .nwprg import TargetedPRG, ToyParams, planted_oracle, seeded_oracle
from .searchprob import SearchProblem, agreement_problem, identity_problem, identity_seed_problem


def toy_prg(m: int, r: int, d: int, s: int, oracle_seed: int = 0, planted: str | None = None) -> TargetedPRG:
    design = gen_design_greedy(d, r, s, m)
    if design.m < m:
        raise DomainError(f"greedy ({d}, {r}, {s}) design has only {design.m} sets, need {m}")
    oracle = planted_oracle(planted) if planted is not None else seeded_oracle(oracle_seed)
    return TargetedPRG(design, oracle, ToyParams.for_design(design, m=m))


def label_seed(label: str) -> int:
    return zlib.crc32(label.encode())


# --- decision deciders ----------------------------------------------------------

PREDICATES: dict[str, Callable[[BitString], int]] = {
    "parity": lambda x: x.weight() & 1,
    "majority": lambda x: int(2 * x.weight() > len(x)),
    "first-bit": lambda x: x[0] if len(x) else 0,
    "last-bit": lambda x: x[-1] if len(x) else 0,
    "has-11": lambda x: int("11" in x.bits),
    "weight-ge-2": lambda x: int(x.weight() >= 2),
    "palindrome": lambda x: int(x.bits == x.bits[::-1]),
    "ends-equal": lambda x: int(len(x) > 0 and x[0] == x[-1]),
    "all-zero": lambda x: int(x.weight() == 0),
}

NOISE: dict[str, tuple[int, Callable[[BitString], bool]]] = {
    # name -> (coins, flip event); flip probabilities 1/4 and 5/16
    "pair": (4, lambda g: g.bits[:2] == "11"),
    "low5": (4, lambda g: int(g.bits[:4], 2) < 5),
}


def noisy_decider(predicate: str, noise: str) -> PromiseDecider:
    pred = PREDICATES[predicate]
    coins, flip = NOISE[noise]
    return PromiseDecider(lambda x, g: pred(x) ^ int(flip(g)), coins, f"{predicate}/{noise}")


def sampled_bit_decider(coins: int = 5) -> PromiseDecider:
    """Reads input bit (gamma mod |x|); the promise is where the bit density is far from 1/2."""

    def M(x: BitString, g: BitString) -> int:
        return x[g.to_int() % len(x)] if len(x) else 0

    return PromiseDecider(M, coins, f"sampled-bit/{coins}")


def vote_decider(predicate: str) -> PromiseDecider:
    """Majority of three copies of the predicate, each flipped independently w.p. 1/4."""
    pred = PREDICATES[predicate]

    def M(x: BitString, g: BitString) -> int:
        v = pred(x)
        votes = sum(v ^ (g.bits[2 * i: 2 * i + 2] == "11") for i in range(3))
        return int(votes >= 2)

    return PromiseDecider(M, 6, f"{predicate}/vote3")


def decision_fixtures() -> list[PromiseDecider]:
    """Twenty deciders: nine predicates under two noise models plus two odd ones."""
    out = [noisy_decider(p, n) for n in NOISE for p in PREDICATES]
    out.append(sampled_bit_decider(5))
    out.append(vote_decider("majority"))
    return out


# --- search problems --------------------------------------------------------------

def _noisy(bit: int, omega: BitString) -> int:
    return bit ^ (omega.bits == "11")


def _same_len(x: BitString, y: BitString) -> bool:
    return len(x) == len(y)


def _problem(label: str, yes, no, find, rand_len) -> SearchProblem:
    return SearchProblem(
        verify=lambda x, y, w: _noisy(int(yes(x, y)), w), find=find, rand_len=rand_len,
        verify_rand_len=lambda k: 2, label=label, yes=yes, no=no)


def noisy_identity_problem() -> SearchProblem:
    yes = lambda x, y: y == x
    return _problem("noisy-identity", yes, lambda x, y: not yes(x, y),
                    lambda x, g: x.complement() if g.bits[:2] == "11" else x, lambda k: 2)


def complement_problem() -> SearchProblem:
    yes = lambda x, y: y == x.complement()
    return _problem("complement", yes, lambda x, y: not yes(x, y),
                    lambda x, g: x if g.bits[:3] == "111" else x.complement(), lambda k: 3)


def parity_problem() -> SearchProblem:
    yes = lambda x, y: _same_len(x, y) and (x.weight() - y.weight()) % 2 == 0
    no = lambda x, y: not yes(x, y)

    def find(x: BitString, g: BitString) -> BitString:
        if not len(x):
            return BitString()
        head = g[: len(x) - 1]
        return head + BitString(str((x.weight() - head.weight()) % 2))

    return _problem("parity", yes, no, find, lambda k: max(0, k - 1))


def prefix_problem() -> SearchProblem:
    yes = lambda x, y: _same_len(x, y) and len(x) > 0 and y[0] == x[0]
    no = lambda x, y: not yes(x, y)
    return _problem("prefix", yes, no, lambda x, g: x[:1] + g[: max(0, len(x) - 1)], lambda k: max(0, k - 1))


def weight_problem() -> SearchProblem:
    yes = lambda x, y: _same_len(x, y) and y.weight() >= x.weight()
    no = lambda x, y: not yes(x, y)
    return _problem("weight", yes, no,
                    lambda x, g: BitString.from_int(x.to_int() | g[: len(x)].to_int(), len(x)), lambda k: k)


def ball_problem() -> SearchProblem:
    """Yes within distance 1 of x, no at distance >= 3."""

    def dist(x, y):
        return (x.to_int() ^ y.to_int()).bit_count() if _same_len(x, y) else len(x) + len(y) + 3

    def find(x: BitString, g: BitString) -> BitString:
        if not len(x) or g[4] == 0:
            return x
        i = g[:4].to_int() % len(x)
        return x[:i] + BitString(str(1 - x[i])) + x[i + 1:]

    return _problem("ball", lambda x, y: dist(x, y) <= 1, lambda x, y: dist(x, y) >= 3, find, lambda k: 5)


def search_fixtures() -> list[SearchProblem]:
    return [
        identity_problem(), noisy_identity_problem(), complement_problem(), parity_problem(),
        prefix_problem(), weight_problem(), ball_problem(), agreement_problem("111"),
        agreement_problem("1111"), agreement_problem("010"),
    ]


SEARCH_KINDS: dict[str, Callable[..., SearchProblem]] = {
    "identity": identity_problem, "identity-seed": identity_seed_problem,
    "noisy-identity": noisy_identity_problem, "complement": complement_problem, "parity": parity_problem,
    "prefix": prefix_problem, "weight": weight_problem, "ball": ball_problem,
    "agreement": lambda flip_pattern="11": agreement_problem(flip_pattern),
}


def search_problem_from_json(obj: dict) -> SearchProblem:
    kind = obj.get("kind")
    if kind not in SEARCH_KINDS:
        raise DomainError(f"unknown search problem kind {kind!r}")
    return SEARCH_KINDS[kind](**obj.get("params", {}))


def decider_from_json(obj: dict) -> PromiseDecider:
    kind = obj.get("kind")
    params = obj.get("params", {})
    if kind == "noisy":
        if params.get("predicate") not in PREDICATES or params.get("noise") not in NOISE:
            raise DomainError("noisy decider needs a known predicate and noise model")
        return noisy_decider(params["predicate"], params["noise"])
    if kind == "sampled-bit":
        return sampled_bit_decider(int(params.get("coins", 5)))
    if kind == "vote":
        return vote_decider(params.get("predicate", "majority"))
    raise DomainError(f"unknown decision problem kind {kind!r}")

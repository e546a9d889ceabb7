from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from nwlab.core import BitString, GuardExceeded, RandomStream, all_strings, bad_set_bound
from nwlab.fixtures import search_fixtures
from nwlab.machines import decode, encode, run_with_tape
from nwlab.searchprob import (
    HardnessProblemParams, PairEngine, agreement_problem, chernoff_samples, check_search_problem, distinct_pairs,
    finder_failure_census, hardness_finder, hardness_verifier, hardness_yes_oracle, identity_problem,
    identity_seed_problem, machine_pairs, random_is_hard_census,
)

from . import oracles

COPIER = decode(encode(["COPY"]))  # copies its first argument
EMPTY = decode("")


def tape_success(attacker, leak, x: str, r: str, params: HardnessProblemParams, width: int) -> Fraction:
    """Pair success probability by running both machines on every pair of random tapes."""
    budget, n = params.budget, len(x)
    hits = 0
    for lt in itertools.product("01", repeat=width):
        lo = run_with_tape(leak, (r, x), "".join(lt), budget, params.ell)
        if not lo.halted:
            continue
        for at in itertools.product("01", repeat=width):
            ao = run_with_tape(attacker, (lo.output, x), "".join(at), budget, n)
            if ao.halted and oracles.hamming(ao.output.bits.ljust(n, "0"), r) < params.dist_threshold:
                hits += 1
    return Fraction(hits, 4 ** width)


class TestChernoff:
    def test_example(self):
        assert chernoff_samples(Fraction(1, 4), Fraction(1, 20)) == 119
        assert chernoff_samples(Fraction(1, 4), Fraction(1, 20)) == oracles.chernoff_ref(0.25, 0.05)

    def test_monotone(self):
        assert chernoff_samples(Fraction(1, 8), Fraction(1, 20)) > chernoff_samples(Fraction(1, 4), Fraction(1, 20))
        assert chernoff_samples(Fraction(1, 4), Fraction(1, 100)) > chernoff_samples(Fraction(1, 4), Fraction(1, 20))

    def test_default_sample_count(self):
        p = HardnessProblemParams(8, 2, 2, 2, 2, max_desc_bits=4)
        assert p.num_pairs == 31 ** 2
        assert p.samples() == oracles.chernoff_ref(1 / 32, 1 / (20 * 961))

    @pytest.mark.parametrize("gap,fp", [(0, Fraction(1, 2)), (Fraction(1, 2), 0), (1, Fraction(1, 2))])
    def test_domain(self, gap, fp):
        with pytest.raises(Exception):
            chernoff_samples(gap, fp)


class TestOracle:
    def test_length_mismatch_is_no(self):
        p = HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=2)
        assert hardness_yes_oracle("1010", "101", p).verdict == "no"

    def test_zero_threshold_is_yes(self):
        p = HardnessProblemParams(4, 1, 1, 0, 0, max_desc_bits=2)
        v = hardness_yes_oracle("1010", "0110", p)
        assert v.verdict == "yes" and v.max_probability == 0

    def test_copier_pair_is_no(self):
        # leak copies r within budget, attacker copies the leak: success 1 when ell >= n
        p = HardnessProblemParams(4, 2, 2, 4, 1, max_desc_bits=3)
        engine = PairEngine(p)
        assert engine.success_probability(COPIER, COPIER, BitString("1010"), BitString("0110")) == 1
        assert hardness_yes_oracle("1010", "0110", p, engine).verdict == "no"

    def test_empty_guess_hits_zero_string(self):
        p = HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=2)
        assert hardness_yes_oracle("1010", "0000", p).verdict == "no"

    def test_guard(self):
        with pytest.raises(GuardExceeded):
            hardness_yes_oracle("1010", "0110", HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=7))

    @pytest.mark.parametrize("x,r", [("1010", "0110"), ("0000", "1111"), ("1101", "1000")])
    def test_against_tape_enumeration(self, x, r):
        params = HardnessProblemParams(4, 1, 1, 1, 2, max_desc_bits=2)  # 4 steps, 2 work cells
        engine = PairEngine(params)
        best = Fraction(0)
        for a, l in machine_pairs(2):
            want = tape_success(a, l, x, r, params, 4)
            assert engine.success_probability(a, l, BitString(x), BitString(r)) == want
            best = max(best, want)
        verdict = "no" if best >= Fraction(1, 4) else ("yes" if best < Fraction(1, 8) else "neither")
        assert hardness_yes_oracle(x, r, params).verdict == verdict

    def test_distinct_pairs_cover_all(self):
        assert sum(k for _, _, k in distinct_pairs(3)) == 15 ** 2


class TestVerifier:
    def test_length_mismatch_rejects(self):
        p = HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=2, sample_count=10)
        assert hardness_verifier("1010", "10", p, RandomStream(0)) == 0

    def test_unknown_mode(self):
        p = HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=1, sample_count=10)
        with pytest.raises(Exception):
            hardness_verifier("1010", "0110", p, RandomStream(0), mode="bogus")

    @pytest.mark.parametrize("x", ["0000", "1010", "0111"])
    def test_modes_agree_on_clear_no(self, x):
        # the empty guess pads to 0000, so r = 0000 is hit with probability 1
        p = HardnessProblemParams(4, 1, 1, 0, 1, max_desc_bits=2, sample_count=40)
        for mode in ("batched", "simulate"):
            assert hardness_verifier(x, "0000", p, RandomStream(1), mode=mode) == 0

    def test_modes_agree_on_clear_yes(self):
        p = HardnessProblemParams(4, 1, 1, 0, 0, max_desc_bits=2, sample_count=40)
        for mode in ("batched", "simulate"):
            assert hardness_verifier("1010", "0110", p, RandomStream(1), mode=mode) == 1

    def test_reproducible(self):
        p = HardnessProblemParams(6, 1, 1, 1, 2, max_desc_bits=3, sample_count=200)
        runs = [hardness_verifier("101100", "011010", p, RandomStream(5)) for _ in range(3)]
        assert len(set(runs)) == 1


class TestFinder:
    def test_empty_input(self):
        assert hardness_finder("", RandomStream(0)) == BitString()

    def test_length_and_reproducibility(self):
        a = hardness_finder("1" * 9, RandomStream(3))
        assert len(a) == 9 and a == hardness_finder("0" * 9, RandomStream(3))

    def test_finder_census_small(self):
        params = HardnessProblemParams(6, 1, 1, 0, 1, max_desc_bits=2)
        c = finder_failure_census("101100", params)
        brute = sum(hardness_yes_oracle("101100", r, params).verdict != "yes" for r in all_strings(6))
        assert c.failing == brute and c.fraction == Fraction(brute, 64)
        assert c.union_bound_exact == Fraction(49 * bad_set_bound(6, 0, 1), 64)


class TestCensus:
    def test_constant_attacker_one_string(self):
        p = HardnessProblemParams(6, 1, 1, 0, 1, max_desc_bits=2)
        c = random_is_hard_census(EMPTY, EMPTY, "101101", 0, 1, p)
        assert c.count == 1 and c.bound == bad_set_bound(6, 0, 1) == 24 and c.passed

    def test_zero_threshold(self):
        p = HardnessProblemParams(6, 1, 1, 0, 1, max_desc_bits=2)
        assert random_is_hard_census(EMPTY, EMPTY, "101101", 0, 0, p).count == 0

    def test_prefix_leak(self):
        # the leak emits r[:2]; the copied guess r[:2] + 0000 is exact only when r ends in 0000
        p = HardnessProblemParams(6, 2, 2, 2, 1, max_desc_bits=3)
        c = random_is_hard_census(COPIER, decode(encode(["EMIT", "EMIT"])), "110010", 2, 1, p)
        assert c.count == 4 and c.count <= c.bound

    def test_copier_leak_overruns_ell(self):
        p = HardnessProblemParams(6, 2, 2, 2, 1, max_desc_bits=3)
        assert random_is_hard_census(COPIER, COPIER, "110010", 2, 1, p).count == 0
        full = random_is_hard_census(COPIER, COPIER, "110010", 6, 1, p)
        assert full.count == 64 and full.passed

    def test_guard(self):
        p = HardnessProblemParams(15, 1, 1, 0, 1, max_desc_bits=2)
        with pytest.raises(GuardExceeded):
            random_is_hard_census(EMPTY, EMPTY, "0" * 15, 0, 1, p)

    @pytest.mark.parametrize("ell,dist", [(0, 1), (1, 1), (1, 2), (2, 2)])
    def test_bound_holds_all_small_pairs(self, ell, dist):
        p = HardnessProblemParams(6, 1, 1, ell, dist, max_desc_bits=2)
        engine = PairEngine(p, 16)
        for a, l, _ in distinct_pairs(2):
            c = random_is_hard_census(a, l, "011010", ell, dist, p, engine=engine)
            assert c.passed


class TestToyProblems:
    @pytest.mark.parametrize("problem", search_fixtures(), ids=lambda p: p.label)
    def test_invariants(self, problem):
        for n in range(0, 6):
            if problem.rand_len(n) > 12:
                break
            universe = list(all_strings(n))
            for x in universe:
                assert check_search_problem(problem, x, universe).ok

    def test_agreement_11_falls_short(self):
        # flipping on "11" leaves success 9/16 at n = 2
        problem = agreement_problem("11")
        assert problem.finder_success(BitString("00")) == Fraction(9, 16)
        assert not check_search_problem(problem, BitString("00"), all_strings(2)).ok

    def test_seed_copy_finder_is_not_a_promise_problem(self):
        p = identity_seed_problem()
        assert p.finder_success(BitString("01")) == Fraction(1, 4)
        assert not check_search_problem(p, BitString("01"), all_strings(2)).ok

    def test_identity(self):
        p = identity_problem()
        assert p.finder_success(BitString("101")) == 1
        assert p.verifier_acceptance(BitString("101"), BitString("101")) == Fraction(3, 4)
        assert p.derandomized_verify(BitString("101"), BitString("100")) == 0

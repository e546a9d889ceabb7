from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nwlab.core import BitString, DomainError, GuardExceeded, RandomStream
from nwlab.design import Design, gen_design_greedy
from nwlab.nwprg import (
    ConfigurationError, TargetedPRG, ToyParams, derive_paper_params, enumerate_outputs, expand, output_histogram,
    output_ints, planted_oracle, seeded_oracle, table_oracle,
)

from . import oracles

SMALL = Design(3, 2, 1, ((0, 1), (1, 2)))


def small_prg(z: str = "0110") -> TargetedPRG:
    return TargetedPRG(SMALL, planted_oracle(z), ToyParams.for_design(SMALL))


class TestOracles:
    def test_table(self):
        f = table_oracle({"01": "10"})
        assert f("01") == BitString("10")
        with pytest.raises(DomainError):
            f("00")

    def test_length_preservation_enforced(self):
        f = table_oracle({"01": "1"})
        with pytest.raises(DomainError):
            f("01")

    def test_seeded_deterministic_and_length_preserving(self):
        f, g = seeded_oracle(3), seeded_oracle(3)
        for x in ("", "1", "0110", "1" * 40):
            assert f(x) == g(x) and len(f(x)) == len(x)
        assert seeded_oracle(3)("0" * 32) != seeded_oracle(4)("0" * 32)

    def test_planted_cycles(self):
        assert planted_oracle("10")("00000") == BitString("10101")


class TestParams:
    def test_toy_checks(self):
        with pytest.raises(ConfigurationError):
            ToyParams(m=2, n=4, d=2, r=3, s_overlap=1)
        with pytest.raises(ConfigurationError):
            ToyParams(m=2, n=4, d=4, r=3, s_overlap=1)  # 2^3 > n

    def test_prg_rejects_short_design(self):
        with pytest.raises(ConfigurationError):
            TargetedPRG(SMALL, planted_oracle("0"), ToyParams(3, 4, 3, 2, 1))

    def test_paper_example(self):
        p = derive_paper_params(2, Fraction(1, 3), 3)
        assert p.paper_scale
        assert (p.exponent, p.d, p.r, p.s_overlap) == (135, 405, 135, 90)
        assert p.n == 2 ** 135
        assert p.epsilon == Fraction(2, 3) + Fraction(1, 135)
        assert p.notes["log2_ell"] == "91"
        assert p.ell == 2 ** 91
        assert p.dist_threshold == (2 ** 135) // 4  # (1/2 - 1/4) n
        assert p.to_json()["n"] == "2^135"

    def test_rounded_exponent_noted(self):
        p = derive_paper_params(2, Fraction(2, 5), 3)
        # 5 / (8/125) = 78.125
        assert p.exponent == 79 and p.notes["exponent_rounded"]
        assert p.r == 79 and p.d == 198  # ceil(79 / (2/5)) = 198

    def test_non_power_of_two_m(self):
        p = derive_paper_params(3, Fraction(1, 2), 3)
        assert p.exponent == 40 and p.n == 3 ** 40
        assert p.r == (3 ** 40 - 1).bit_length()

    @pytest.mark.parametrize("m,alpha", [(1, Fraction(1, 3)), (2, 0), (2, 1)])
    def test_domain(self, m, alpha):
        with pytest.raises(DomainError):
            derive_paper_params(m, alpha)


class TestExpand:
    def test_example(self):
        assert expand(small_prg(), "1010", "101") == BitString("11")

    def test_zero_seed(self):
        assert expand(small_prg(), "1010", "000") == BitString("00")

    def test_constant_table(self):
        prg = small_prg("0000")
        assert all(expand(prg, "1111", s.bits) == BitString("00") for s, _ in enumerate_outputs(prg, "1111"))

    def test_length_errors(self):
        with pytest.raises(DomainError):
            expand(small_prg(), "1010", "10")
        with pytest.raises(DomainError):
            expand(small_prg(), "10", "101")

    def test_enumerate_d1(self):
        d = Design(2, 1, 0, ((0,), (1,)))
        prg = TargetedPRG(d, planted_oracle("01"), ToyParams(2, 2, 2, 1, 0))
        rows = enumerate_outputs(prg, "11")
        assert [(s.bits, o.bits) for s, o in rows] == [("00", "00"), ("01", "01"), ("10", "10"), ("11", "11")]

    def test_enumerate_guard(self):
        d = Design(25, 2, 0, ((0, 1),))
        prg = TargetedPRG(d, planted_oracle("0"), ToyParams(1, 4, 25, 2, 0))
        with pytest.raises(GuardExceeded):
            enumerate_outputs(prg, "0000")

    @pytest.mark.parametrize("d,r,s,m,seed", [(6, 3, 1, 4, 1), (8, 4, 2, 6, 2), (10, 4, 2, 8, 3), (9, 5, 3, 5, 4)])
    def test_exhaustive_against_definition(self, d, r, s, m, seed):
        design = gen_design_greedy(d, r, s, m)
        prg = TargetedPRG(design, seeded_oracle(seed), ToyParams.for_design(design, m=m))
        x = RandomStream(seed).bits(prg.n)
        z = prg.truth_table(x).bits
        rows = enumerate_outputs(prg, x)
        assert len(rows) == 1 << d
        for s_, out in rows:
            assert out.bits == oracles.nw_output(design.sets[:m], z, s_.bits)
        ints = output_ints(prg, x).tolist()
        assert [format(v, f"0{m}b") for v in ints] == [o.bits for _, o in rows]
        hist = output_histogram(prg, x)
        assert sum(hist.values()) == 1 << d
        for out, count in hist.items():
            assert count == sum(o.bits == out for _, o in rows)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32), st.data())
    def test_bit_consistency_random(self, key, data):
        design = gen_design_greedy(12, 5, 2, 6)
        prg = TargetedPRG(design, seeded_oracle(key), ToyParams.for_design(design))
        x = data.draw(st.text(alphabet="01", min_size=32, max_size=32))
        seed = data.draw(st.text(alphabet="01", min_size=12, max_size=12))
        z = prg.truth_table(x).bits
        out = expand(prg, x, seed)
        assert len(out) == prg.m
        assert out.bits == oracles.nw_output(design.sets, z, seed)

    def test_target_sensitivity(self):
        # same z => same outputs, whatever x is
        prg = small_prg("1001")
        assert [o for _, o in enumerate_outputs(prg, "0000")] == [o for _, o in enumerate_outputs(prg, "1111")]

    def test_larger_n_than_index_space(self):
        design = Design(3, 2, 1, ((0, 1), (1, 2)))
        prg = TargetedPRG(design, planted_oracle("0110"), ToyParams.for_design(design, n=8))
        assert expand(prg, "00000000", "101") == BitString("11")

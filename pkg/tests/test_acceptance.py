"""Acceptance checks A1-A12. Each prints one PASS/FAIL line, visible without ``-s``."""
from __future__ import annotations

import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from nwlab.adversary import (
    accept_set_distinguisher, attack_success_census, bit_distinguisher, equality_distinguisher, exact_advantage,
    hybrid_acceptance, leak_bit_length, leak_exponent_identity, parity_distinguisher, range_distinguisher,
)
from nwlab.core import (
    BitString, DomainError, RandomStream, all_strings, bad_set_bound, binary_entropy, hamming_ball_volume,
)
from nwlab.derand import (
    derandomize_decision, derandomize_search, induced_decision_distinguisher, induced_distinguisher, pad, unpad,
)
from nwlab.design import design_from_polynomials, gen_design_greedy, gen_design_km, km_parameters, verify_design
from nwlab.fixtures import decision_fixtures, search_fixtures, toy_prg
from nwlab.nwprg import derive_paper_params
from nwlab.searchprob import (
    HardnessProblemParams, PairEngine, check_search_problem, distinct_pairs, finder_failure_census,
    hardness_verifier, hardness_yes_oracle, random_is_hard_census,
)

from . import oracles
from .test_cli import CONFIG_RUNS

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def report(capsys):
    """report(tag, ok, detail) prints one line past pytest's capture, then asserts ok."""

    def emit(tag: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"{tag}: {detail}"

    return emit


def test_a1_design_validity(report):
    t0 = time.perf_counter()
    cases = bad = floors_checked = 0
    for d in (4, 5, 6, 8, 10, 12, 16, 20, 24, 32, 40, 48, 64):
        for r in sorted({2, 3, d // 4, d // 3, d // 2}):
            if not 2 <= r < d:
                continue
            for s in sorted({0, 1, r // 2, r - 1}):
                if not 0 <= s < r:
                    continue
                for m in (4, 12):
                    cases += 1
                    bad += not verify_design(gen_design_greedy(d, r, s, m)).valid
    for alpha in (Fraction(1, 3), Fraction(1, 4), Fraction(1, 5), Fraction(2, 7)):
        for d in range(4, 65):
            try:
                design = gen_design_km(d, alpha)
            except DomainError:
                continue  # degenerate rounding
            cases += 1
            bad += not verify_design(design).valid
            r, s, floor, notes = km_parameters(d, alpha)
            if notes["integral"]:
                floors_checked += 1
                bad += design.m < floor
    for p in (2, 3, 5, 7):
        for t in range(0, p):
            for m in sorted({1, p, p ** min(t + 1, 2)}):
                if p * p > 64 or m > p ** (t + 1):
                    continue
                cases += 1
                bad += not verify_design(design_from_polynomials(p, t, m)).valid
    dt = time.perf_counter() - t0
    report("A1", bad == 0 and cases >= 200 and floors_checked > 0 and dt < 10,
           f"{cases} designs, {floors_checked} integral km floors, {bad} failures, {dt:.2f}s")


def test_a2_padding(report):
    cases = bad = 0
    elapsed = 0.0  # library time only; the reference comparison is not part of the budget
    for n in range(13):
        for v in range(1 << n):
            x = format(v, f"0{n}b") if n else ""
            t0 = time.perf_counter()
            rows = [(k, pad(x, k).raw) for k in range(41)]
            back = [unpad(p).bits for _, p in rows]
            elapsed += time.perf_counter() - t0
            for (k, p), y in zip(rows, back):
                cases += 1
                bad += len(p) != max(k, 2 * n) or p.bits != oracles.pad_ref(x, k) or y != x
    report("A2", bad == 0 and elapsed < 5, f"{cases} (x, k) cases, {bad} failures, {elapsed:.2f}s")


def _random_toy_prg(rng: RandomStream):
    while True:
        d = 4 + rng.randbelow(7)  # 4..10
        m = 2 + rng.randbelow(7)  # 2..8
        r = 2 + rng.randbelow(min(4, d - 2))
        s = rng.randbelow(r)
        try:
            return toy_prg(m, r, d, s, planted=rng.bits(1 << r).bits)
        except DomainError:
            continue  # the greedy design is too small; draw again


def test_a3_hybrid_telescoping(report):
    t0 = time.perf_counter()
    rng = RandomStream(2024).split("a3")
    bad = 0
    for i in range(50):
        prg = _random_toy_prg(rng)
        x = rng.bits(prg.n)
        m = prg.m
        accept = {c.bits for c in all_strings(m) if rng.randbelow(2)}
        D = accept_set_distinguisher(accept)
        z = prg.truth_table(x).bits
        adv = exact_advantage(D, prg, x)
        for b in (0, 1):
            p = [hybrid_acceptance(D, prg, x, j, b) for j in range(m + 1)]
            steps = sum(p[j] - p[j - 1] for j in range(1, m + 1))
            signed = adv.beta_signed_b1 if b else adv.beta_signed_b0
            ends = p[m] == (adv.p_generator if b else 1 - adv.p_generator) and \
                p[0] == (adv.p_uniform if b else 1 - adv.p_uniform)
            bad += steps != signed or not ends
        # independent brute force for every intermediate hybrid (b = 1)
        for j in range(m + 1):
            want = oracles.hybrid_probability(lambda c: int(c in accept), prg.index_sets(), z, prg.d, j, 1)
            bad += hybrid_acceptance(D, prg, x, j, 1) != want
    dt = time.perf_counter() - t0
    report("A3", bad == 0 and dt < 30, f"50 instances, {bad} identity/oracle mismatches, {dt:.2f}s")


def test_a4_predictor_census(report):
    t0 = time.perf_counter()
    rng = RandomStream(4).split("a4")
    instances = bad = 0
    worst = None
    for d in (8, 9, 10):
        for s in (2, 3):
            for t in range(3):
                planted = rng.bits(16).bits
                prg = toy_prg(4, 4, d, s, planted=planted)
                x = rng.bits(16)
                for D in (bit_distinguisher(0), parity_distinguisher([0, 3]), range_distinguisher(prg, x),
                          equality_distinguisher(rng.bits(4))):
                    adv = exact_advantage(D, prg, x)
                    if adv.beta == 0:
                        continue
                    rep = attack_success_census(D, prg, x, adv)
                    instances += 1
                    bad += not rep.passed
                    margin = rep.fraction - rep.bound
                    worst = margin if worst is None else min(worst, margin)
                    if instances <= 2:
                        # cross-check the engine against an independent brute force
                        beta, share = oracles.attack_census(lambda c: D(4, x, BitString(c)), prg.index_sets(),
                                                            prg.truth_table(x).bits, d, 4)
                        bad += beta != rep.beta or share != rep.fraction
    dt = time.perf_counter() - t0
    report("A4", bad == 0 and instances >= 10 and dt < 300,
           f"{instances} planted instances with beta > 0, {bad} failures, min(fraction - beta/8m) = {worst}, {dt:.1f}s")


def test_a5_leak_identity(report):
    t0 = time.perf_counter()
    bad = 0
    for alpha in (Fraction(1, 3), Fraction(1, 4), Fraction(1, 5)):
        for log2_n in (135, 270, 405):
            lhs, rhs = leak_exponent_identity(alpha, log2_n)
            # independent form: m = n^(alpha^3/5), d = log2 n / alpha
            direct = alpha ** 3 / 5 * log2_n + 2 * alpha ** 2 * (Fraction(log2_n) / alpha)
            bad += not (lhs == rhs == direct == (2 * alpha + alpha ** 3 / 5) * log2_n)
    for m in (2, 4, 8):  # alpha = 1/3 gives log2 n = 135 log2 m exactly
        params = derive_paper_params(m, Fraction(1, 3))
        bad += not leak_bit_length(params).identity_holds
    eps = derive_paper_params(2, Fraction(1, 3)).epsilon
    dt = time.perf_counter() - t0
    report("A5", bad == 0 and eps < 1 and dt < 1, f"9 grid points + 3 paper-scale checks, epsilon(1/3) = {eps}, {dt:.3f}s")


def test_a6_bad_set_counting(report):
    t0 = time.perf_counter()
    pairs = distinct_pairs(4)
    censuses = violations = 0
    for n in (6, 8, 10):
        x = RandomStream(7).split(f"x{n}").bits(n)
        for ell in (0, 1, 2):
            for dist in sorted({1, n // 4}):
                params = HardnessProblemParams(n, 1, 1, ell, dist, max_desc_bits=4)
                engine = PairEngine(params, 16)
                bound = bad_set_bound(n, ell, dist)
                for a, l, _ in pairs:
                    c = random_is_hard_census(a, l, x, ell, dist, params, engine=engine)
                    censuses += 1
                    violations += c.count > bound
    dt = time.perf_counter() - t0
    report("A6", violations == 0 and dt < 600,
           f"{len(pairs)} distinct pairs x {censuses // len(pairs)} settings = {censuses} censuses, "
           f"{violations} violations, {dt:.1f}s")


def test_a7_entropy_bound(report):
    t0 = time.perf_counter()
    cases = bad = 0
    for n in range(1, 25):
        for r in range(1, n // 2 + 1):
            cases += 1
            bad += hamming_ball_volume(n, r) > 2 ** (n * binary_entropy(Fraction(r, n))) * (1 + 1e-12)
    dt = time.perf_counter() - t0
    # volumes themselves against a binomial-sum reference (enumeration is checked for n <= 12 in test_core)
    bad += sum(hamming_ball_volume(n, r) != sum(math.comb(n, i) for i in range(r + 1))
               for n in range(1, 25) for r in range(1, n // 2 + 1))
    report("A7", bad == 0 and dt < 1, f"{cases} (n, r) pairs, {bad} violations, {dt:.3f}s")


def test_a8_decision_derandomizer(report):
    t0 = time.perf_counter()
    fixtures = decision_fixtures()
    prgs = {}
    checked = excluded = mismatches = 0
    for dec in fixtures:
        m = dec.rand_len
        prg = prgs.get(m) or prgs.setdefault(m, toy_prg(m, 7, 12, 5, oracle_seed=5))
        D = induced_decision_distinguisher(dec.M, dec.label)
        for n in range(11):
            for x in all_strings(n):
                want = dec.promise_answer(x)
                if want is None:
                    continue
                xp = pad(x, prg.n).raw
                if exact_advantage(D, prg, xp).beta >= Fraction(1, 6):
                    excluded += 1
                    continue
                checked += 1
                mismatches += derandomize_decision(dec.M, prg, x, prg.n).answer != want
    dt = time.perf_counter() - t0
    report("A8", mismatches == 0 and len(fixtures) == 20 and dt < 120,
           f"{len(fixtures)} fixtures, {checked} promise inputs checked, {excluded} excluded by the advantage "
           f"premise, {mismatches} mismatches, {dt:.1f}s")


def test_a9_search_derandomizer(report):
    t0 = time.perf_counter()
    fixtures = search_fixtures()
    prgs = {}
    checked = excluded = failures = 0
    for problem in fixtures:
        for k in range(1, 7):
            m = max(1, problem.rand_len(k))
            if m > 12:
                break
            prg = prgs.get(m) or prgs.setdefault(m, toy_prg(m, 5, 10, 3, oracle_seed=77))
            universe = list(all_strings(k))
            D = induced_distinguisher(problem)
            for x in universe:
                if check_search_problem(problem, x, universe).detail != "in S_R":
                    excluded += 1
                    continue
                if exact_advantage(D, prg, pad(x, prg.n).raw).beta >= Fraction(2, 3):
                    excluded += 1
                    continue
                res = derandomize_search(problem, prg, x, prg.n)
                checked += 1
                ok = problem.derandomized_verify(x, res.witness) == 1 and not problem.no(x, res.witness)
                failures += not ok
    dt = time.perf_counter() - t0
    report("A9", failures == 0 and len(fixtures) == 10 and dt < 120,
           f"{len(fixtures)} fixtures, {checked} inputs checked, {excluded} outside the premise, "
           f"{failures} failures, {dt:.1f}s")


def test_a10_verifier_vs_oracle(report):
    t0 = time.perf_counter()
    params = HardnessProblemParams(8, 2, 2, 2, 2, max_desc_bits=4)
    engine = PairEngine(params)
    x = RandomStream(3).split("x").bits(8)
    verdicts = {r.bits: hardness_yes_oracle(x, r, params, engine).verdict for r in all_strings(8)}
    no = [r for r, v in verdicts.items() if v == "no"]
    yes = [r for r, v in verdicts.items() if v == "yes"]
    chosen = [(r, 0) for r in no] + [(r, 1) for r in yes[:: max(1, len(yes) // 32)][:32]]
    rng = RandomStream(10).split("a10")
    worst = 1.0
    for r, want in chosen:
        agree = sum(hardness_verifier(x, r, params, rng.split(f"{r}:{t}"), engine=engine) == want
                    for t in range(100))
        worst = min(worst, agree / 100)
    dt = time.perf_counter() - t0
    report("A10", len(chosen) >= 40 and worst >= 0.95 and dt < 600,
           f"{len(chosen)} instances ({len(no)} no, {len(chosen) - len(no)} yes), samples/pair {params.samples()}, "
           f"worst agreement {worst:.2f}, {dt:.1f}s")


def test_a11_finder_failure(report):
    t0 = time.perf_counter()
    params = HardnessProblemParams(10, 2, 2, 1, 2, max_desc_bits=3)
    x = RandomStream(11).split("x").bits(10)
    c = finder_failure_census(x, params)
    # n^2 * n * 2^ell * vol(n, dist - 1) / 2^n with exact volume
    union = Fraction(10 ** 3 * 2 * oracles.ball_volume(10, 1), 1 << 10)
    dt = time.perf_counter() - t0
    report("A11", c.fraction < Fraction(1, 3) and c.fraction <= union == c.union_bound_paper_form and dt < 600,
           f"failing {c.failing}/1024 = {c.fraction} vs union bound {union}, {dt:.1f}s")


def test_a12_reproducibility(report, tmp_path):
    t0 = time.perf_counter()
    differing = []
    for command, name, code in CONFIG_RUNS:
        outputs = []
        for run in ("a", "b"):
            out = tmp_path / f"{name}.{run}"
            proc = subprocess.run([sys.executable, "-m", "nwlab.cli", *command.split(), "--config",
                                   f"configs/{name}", "--out", str(out)], capture_output=True, cwd=ROOT)
            body = out.read_bytes() if out.exists() else b""
            outputs.append((proc.returncode, body, proc.stderr))
        if outputs[0] != outputs[1] or outputs[0][0] != code:
            differing.append(name)
    dt = time.perf_counter() - t0
    report("A12", not differing and dt < 60,
           f"{len(CONFIG_RUNS)} configs run twice, differing: {differing or 'none'}, {dt:.1f}s")

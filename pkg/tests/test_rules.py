"""
Delib Rules Tests
==================
AV, CC, PAV and MES committees on hand-checked elections, plus
brute-force oracles over random small elections.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from delib.rules import (
    ApprovalProfile, TieBreaker, av_committee, av_score, cc_committee, cc_max_coverage,
    compute, coverage_score, harmonic, mes_committee, min_affordable_q,
    optimal_welfare_committee, pav_committee, pav_score, social_welfare,
)
from delib.types import CcTie, InvalidInputError, MesCompletion, RuleName


def e1():
    """Four voters, four candidates: {0,1} {0,1} {2} {2,3}."""
    return ApprovalProfile([{0, 1}, {0, 1}, {2}, {2, 3}], 4)


def random_election(rng, n_max=8, m_max=6, k_max=3):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(2, m_max + 1))
    k = int(rng.integers(1, min(k_max, m) + 1))
    ballots = []
    for _ in range(n):
        size = int(rng.integers(1, m + 1))
        ballots.append(set(int(c) for c in rng.choice(m, size=size, replace=False)))
    priority = [int(c) for c in rng.permutation(m)]
    return ApprovalProfile(ballots, m), k, TieBreaker(tuple(priority))


def brute_first_optimum(profile, k, tie, key_fn):
    """Best key; ties go to the lexicographically first committee in priority order."""
    best, best_key = None, None
    for positions in combinations(range(profile.m), k):
        W = frozenset(tie.priority[p] for p in positions)
        key = key_fn(W)
        if best_key is None or key > best_key:
            best, best_key = W, key
    return best, best_key


def literal_q(budgets):
    """Smallest q with sum(min(q, b)) == 1, by trying every set of full payers."""
    n = len(budgets)
    best = None
    for r in range(n):
        for full in combinations(range(n), r):
            rest = [i for i in range(n) if i not in full]
            q = (1 - sum(budgets[i] for i in full)) / len(rest)
            if q < 0:
                continue
            if all(budgets[i] <= q for i in full) and all(budgets[i] >= q for i in rest):
                if best is None or q < best:
                    best = q
    return best


def literal_mes(profile, k, tie):
    budget = [Fraction(k, profile.n)] * profile.n
    committee = []
    while len(committee) < k:
        best_q, best_c = None, None
        for c in tie.order(range(profile.m)):
            if c in committee:
                continue
            q = literal_q([budget[i] for i in profile.supporters[c]]) if profile.supporters[c] else None
            if q is not None and (best_q is None or q < best_q):
                best_q, best_c = q, c
        if best_c is None:
            break
        for i in profile.supporters[best_c]:
            budget[i] -= min(best_q, budget[i])
        committee.append(best_c)
    return committee


# ── Profile and tie-breaking ─────────────────────────────────

def test_profile_caches():
    p = e1()
    assert p.n == 4 and p.m == 4
    assert p.scores.tolist() == [2, 2, 2, 1]
    assert [sorted(s) for s in p.supporters] == [[0, 1], [0, 1], [2, 3], [3]]
    assert p.matrix.shape == (4, 4)


def test_profile_rejects_out_of_range_candidates():
    with pytest.raises(InvalidInputError):
        ApprovalProfile([{0, 5}], 4)


def test_tiebreaker_orders_by_priority():
    tie = TieBreaker((2, 0, 3, 1))
    assert tie.rank(2) == 0 and tie.rank(1) == 3
    assert tie.order([1, 2, 3]) == [2, 3, 1]


def test_tiebreaker_rejects_non_permutation():
    with pytest.raises(InvalidInputError):
        TieBreaker((0, 0, 1))


def test_random_tiebreaker_is_permutation():
    tie = TieBreaker.random(7, np.random.default_rng(3))
    assert sorted(tie.priority) == list(range(7))


# ── Scores ───────────────────────────────────────────────────

def test_harmonic():
    assert harmonic(0) == 0.0
    assert harmonic(3) == pytest.approx(11 / 6)


def test_scores_on_e1():
    p = e1()
    assert av_score(p, {0, 2}) == 4
    assert coverage_score(p, {0, 2}) == 4
    assert coverage_score(p, {0, 1}) == 2
    assert pav_score(p, {0, 1}) == pytest.approx(3.0)
    assert pav_score(p, {2, 3}) == pytest.approx(2.5)


def test_social_welfare():
    U = np.array([[0.9, 0.1, 0.3], [0.8, 0.2, 0.1]])
    assert social_welfare(U, {0, 2}) == pytest.approx(2.1)


# ── Rules on E1 ──────────────────────────────────────────────

def test_av_e1():
    out = av_committee(e1(), 2, TieBreaker.identity(4))
    assert out.committee == frozenset({0, 1})
    assert out.score == 4


def test_av_tie_follows_priority():
    out = av_committee(e1(), 2, TieBreaker((2, 1, 0, 3)))
    assert out.committee == frozenset({2, 1})


def test_cc_e1():
    out = cc_committee(e1(), 2, TieBreaker.identity(4))
    assert out.committee == frozenset({0, 2})
    assert out.score == 4
    assert out.diagnostics["av_score"] == 4


def test_cc_prefers_higher_av_score_among_full_coverage():
    # {1,2} and {1,3} both cover everyone; {1,2} has the larger AV score
    p = ApprovalProfile([{0, 1}, {1}, {2, 3}, {1, 2}], 4)
    out = cc_committee(p, 2, TieBreaker((3, 0, 2, 1)))
    assert out.committee == frozenset({1, 2})
    assert out.diagnostics["av_score"] == 5


def test_cc_priority_tie_ignores_av_score():
    # same election; by priority alone {3,1} comes first
    p = ApprovalProfile([{0, 1}, {1}, {2, 3}, {1, 2}], 4)
    out = cc_committee(p, 2, TieBreaker((3, 0, 2, 1)), CcTie.PRIORITY)
    assert out.committee == frozenset({1, 3})
    assert out.score == 4
    assert out.diagnostics["av_score"] == 4


def test_compute_threads_cc_tie():
    p = ApprovalProfile([{0, 1}, {1}, {2, 3}, {1, 2}], 4)
    tie = TieBreaker((3, 0, 2, 1))
    assert compute(RuleName.CC, p, 2, tie).committee == frozenset({1, 2})
    assert compute(RuleName.CC, p, 2, tie, cc_tie=CcTie.PRIORITY).committee == frozenset({1, 3})


def test_cc_max_coverage():
    assert cc_max_coverage(e1(), 1) == 2
    assert cc_max_coverage(e1(), 2) == 4


def test_pav_e1():
    out = pav_committee(e1(), 2, TieBreaker.identity(4))
    assert out.committee == frozenset({0, 2})
    assert out.score == pytest.approx(4.0)


def test_pav_unanimous_large_committee():
    # scaled keys overflow int64 here
    p = ApprovalProfile([set(range(42))] * 100, 42)
    out = pav_committee(p, 41, TieBreaker.identity(42))
    assert out.committee == frozenset(range(41))
    assert out.score == pytest.approx(100 * harmonic(41))


def test_pav_large_committee_matches_brute_force():
    rng = np.random.default_rng(41)
    m, k = 43, 41
    ballots = [set(int(c) for c in rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False))
               for _ in range(10)]
    p = ApprovalProfile(ballots, m)
    tie = TieBreaker(tuple(int(c) for c in rng.permutation(m)))
    out = pav_committee(p, k, tie)
    exact = lambda W: sum(sum(Fraction(1, t) for t in range(1, len(b & W) + 1)) for b in p.ballots)
    W, best = brute_first_optimum(p, k, tie, exact)
    assert out.committee == W
    assert out.score == pytest.approx(float(best))


@pytest.mark.slow
def test_pav_near_full_committee():
    rng = np.random.default_rng(45)
    m, k = 50, 45
    ballots = [set(int(c) for c in rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False))
               for _ in range(10)]
    p = ApprovalProfile(ballots, m)
    out = pav_committee(p, k, TieBreaker.identity(m))
    assert len(out.committee) == k
    assert out.score == pytest.approx(pav_score(p, out.committee))


def test_mes_e1():
    out = mes_committee(e1(), 2, TieBreaker.identity(4))
    assert out.committee == frozenset({0, 2})
    assert out.diagnostics["q"] == [0.5, 0.5]
    assert out.diagnostics["completion"] == 0
    assert out.diagnostics["spent"] == pytest.approx(2.0)


def test_mes_completion_variants():
    # only candidate 0 is affordable; the second seat is filled by completion
    p = ApprovalProfile([{0}, {0}, {0}, {1}, {2}, {2}], 3)
    av_fill = mes_committee(p, 2, TieBreaker((1, 2, 0)), MesCompletion.AV)
    seq_fill = mes_committee(p, 2, TieBreaker((1, 2, 0)), MesCompletion.SEQ_PRIORITY)
    assert av_fill.diagnostics["completion"] == 1
    assert av_fill.committee == frozenset({0, 2})
    assert seq_fill.committee == frozenset({0, 1})


def test_min_affordable_q():
    assert min_affordable_q([Fraction(1, 2), Fraction(1, 2)]) == Fraction(1, 2)
    assert min_affordable_q([Fraction(1, 10), Fraction(1), Fraction(1)]) == Fraction(9, 20)
    assert min_affordable_q([Fraction(1, 4), Fraction(1, 4)]) is None
    assert min_affordable_q([]) is None


def test_optimal_welfare_committee():
    U = np.array([[0.9, 0.1, 0.3], [0.8, 0.2, 0.1]])
    W, value = optimal_welfare_committee(U, 2)
    assert W == frozenset({0, 2})
    assert value == pytest.approx(2.1)


def test_bad_committee_size():
    with pytest.raises(InvalidInputError):
        av_committee(e1(), 0, TieBreaker.identity(4))
    with pytest.raises(InvalidInputError):
        pav_committee(e1(), 5, TieBreaker.identity(4))


def test_compute_dispatch():
    tie = TieBreaker.identity(4)
    for rule in RuleName:
        out = compute(rule, e1(), 2, tie)
        assert out.rule is rule
        assert len(out.committee) == 2


# ── Brute-force oracles ──────────────────────────────────────

def _check_against_oracles(profile, k, tie):
    scale = profile.n * k + 1
    cc = cc_committee(profile, k, tie)
    W, key = brute_first_optimum(profile, k, tie,
                                 lambda W: coverage_score(profile, W) * scale + av_score(profile, W))
    assert cc.committee == W
    assert cc.score == key // scale

    cc_first = cc_committee(profile, k, tie, CcTie.PRIORITY)
    W, cov = brute_first_optimum(profile, k, tie, lambda W: coverage_score(profile, W))
    assert cc_first.committee == W
    assert cc_first.score == cov == cc.score

    pav = pav_committee(profile, k, tie)
    exact = lambda W: sum(sum(Fraction(1, t) for t in range(1, len(b & W) + 1)) for b in profile.ballots)
    W, best = brute_first_optimum(profile, k, tie, exact)
    assert pav.committee == W
    assert pav.score == pytest.approx(float(best))

    av = av_committee(profile, k, tie)
    _, best = brute_first_optimum(profile, k, tie, lambda W: av_score(profile, W))
    assert av_score(profile, av.committee) == best

    mes = mes_committee(profile, k, tie)
    phase_one = literal_mes(profile, k, tie)
    assert mes.committee >= frozenset(phase_one)
    assert len(mes.committee) == k
    assert mes.diagnostics["completion"] == k - len(phase_one)


def test_rules_match_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(400):
        _check_against_oracles(*random_election(rng))


@pytest.mark.slow
def test_rules_match_brute_force_many():
    rng = np.random.default_rng(77)
    for _ in range(10000):
        _check_against_oracles(*random_election(rng))


# ── Invariants ───────────────────────────────────────────────

def test_mes_budgets_and_prices():
    rng = np.random.default_rng(5)
    for _ in range(300):
        profile, k, tie = random_election(rng, n_max=10, m_max=7, k_max=4)
        out = mes_committee(profile, k, tie)
        q = out.diagnostics["q"]
        assert out.diagnostics["min_budget"] >= 0
        assert all(a <= b for a, b in zip(q, q[1:]))
        # every phase-one purchase spends exactly one unit
        assert out.diagnostics["spent"] == pytest.approx(k - out.diagnostics["completion"])
        assert len(q) == k - out.diagnostics["completion"]


def test_scores_are_monotone():
    rng = np.random.default_rng(9)
    for _ in range(200):
        profile, k, _ = random_election(rng, k_max=5)
        U = rng.random((profile.n, profile.m))
        order = [int(c) for c in rng.permutation(profile.m)]
        for size in range(1, profile.m):
            small, large = set(order[:size]), set(order[:size + 1])
            assert av_score(profile, small) <= av_score(profile, large)
            assert coverage_score(profile, small) <= coverage_score(profile, large)
            assert pav_score(profile, small) <= pav_score(profile, large) + 1e-12
            assert social_welfare(U, small) <= social_welfare(U, large) + 1e-12

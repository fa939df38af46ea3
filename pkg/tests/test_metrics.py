"""
Delib Metrics Tests
====================
Objective ratios, minority support, consensus measures and the
paired significance tests.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from scipy import stats

from delib.metrics import (
    UndefinedRatioError, committee_approval_profile, intergroup_disagreement,
    minority_preservation, minority_supported_candidates, paired_tests, representation_ratio,
    uragg, utilitarian_ratio, utility_variance, voter_satisfaction,
)
from delib.population import PopulationConfig, init_population
from delib.rules import ApprovalProfile
from delib.types import Bloc, InvalidInputError, MinorityRule

MAJ, MIN = Bloc.MAJORITY, Bloc.MINORITY

# Darwin's Zea mays height differences (cross- minus self-fertilised)
DARWIN = [6, 8, 14, 16, 23, 24, 28, 29, 41, -48, 49, 56, 60, -67, 75]


def e1():
    return ApprovalProfile([{0, 1}, {0, 1}, {2}, {2, 3}], 4)


# ── Ratios ───────────────────────────────────────────────────

def test_utilitarian_ratio():
    U = np.array([[0.9, 0.1, 0.3], [0.8, 0.2, 0.1]])
    assert utilitarian_ratio(U, {0}, 1) == pytest.approx(1.0)
    assert utilitarian_ratio(U, {1}, 1) == pytest.approx(0.3 / 1.7)


def test_utilitarian_ratio_zero_optimum():
    with pytest.raises(UndefinedRatioError):
        utilitarian_ratio(np.zeros((3, 4)), {0, 1}, 2)


def test_utilitarian_ratio_wrong_size():
    with pytest.raises(InvalidInputError):
        utilitarian_ratio(np.ones((2, 3)), {0}, 2)


def test_representation_ratio():
    assert representation_ratio(e1(), {0, 1}, 2) == pytest.approx(0.5)
    assert representation_ratio(e1(), {0, 2}, 2) == pytest.approx(1.0)
    assert representation_ratio(e1(), {1, 3}, 2, max_coverage=4) == pytest.approx(0.75)


def test_uragg():
    assert uragg(0.5, 0.8) == pytest.approx(0.4)
    with pytest.raises(InvalidInputError):
        uragg(1.2, 0.5)


def test_voter_satisfaction():
    assert voter_satisfaction(e1(), {0, 2}) == pytest.approx(1.0)
    assert voter_satisfaction(e1(), {0, 1}) == pytest.approx(1.0)
    assert voter_satisfaction(e1(), {3}) == pytest.approx(0.25)


def test_committee_approval_profile():
    assert committee_approval_profile(e1(), {3, 0}) == [1, 2]


# ── Minority support ─────────────────────────────────────────

def test_minority_supported_strict():
    blocs = [MAJ, MAJ, MAJ, MIN]
    assert minority_supported_candidates(e1(), blocs) == frozenset({2, 3})


def test_minority_supported_equal_shares():
    # candidate 1: half of each bloc approves it
    profile = ApprovalProfile([{0, 1}, {0}, {1, 2}, {2}], 3)
    blocs = [MAJ, MAJ, MIN, MIN]
    assert minority_supported_candidates(profile, blocs, MinorityRule.STRICT) == frozenset({2})
    assert minority_supported_candidates(profile, blocs, MinorityRule.WEAK) == frozenset({1, 2})


def test_minority_supported_needs_both_blocs():
    with pytest.raises(InvalidInputError):
        minority_supported_candidates(e1(), [MAJ] * 4)
    with pytest.raises(InvalidInputError):
        minority_supported_candidates(e1(), [MAJ, MIN])


def test_minority_preservation():
    assert minority_preservation({2, 3}, {0, 2}) == 1
    assert minority_preservation(set(), {0, 2}) == 0


# ── Consensus ────────────────────────────────────────────────

def test_utility_variance():
    assert utility_variance(np.array([[0.0, 1.0], [1.0, 1.0]])) == pytest.approx(0.125)


def test_utility_variance_of_population():
    pop = init_population(PopulationConfig(n_maj=6, n_min=3, m=5, k=1), np.random.default_rng(0))
    assert utility_variance(pop) == pytest.approx(pop.utility_matrix().var(axis=0).mean())


def test_intergroup_disagreement():
    assert intergroup_disagreement(e1(), [MAJ, MAJ, MAJ, MIN]) == pytest.approx(2 / 3)


def test_intergroup_disagreement_identical_ballots():
    profile = ApprovalProfile([{0, 1}, {0, 1}, {0, 1, 2}], 3)
    assert intergroup_disagreement(profile, [MAJ, MAJ, MIN]) == pytest.approx(0.0)


# ── Significance ─────────────────────────────────────────────

def test_paired_tests_darwin():
    res = paired_tests(DARWIN, [0.0] * len(DARWIN))
    assert res.t_statistic == pytest.approx(2.148, abs=1e-3)
    assert res.t_pvalue == pytest.approx(0.0497, abs=1e-4)
    assert res.wilcoxon_statistic == 24.0
    assert res.wilcoxon_pvalue == pytest.approx(0.041259765625)
    assert not res.t_degenerate and not res.wilcoxon_degenerate


def test_paired_tests_identical_samples():
    x = list(range(12))
    res = paired_tests(x, x)
    assert res.t_degenerate and res.wilcoxon_degenerate
    assert res.t_pvalue == 1.0 and res.wilcoxon_pvalue == 1.0


def test_paired_tests_constant_shift():
    x = [float(i) for i in range(12)]
    res = paired_tests([v + 1.0 for v in x], x)
    assert res.t_degenerate
    assert res.t_pvalue == 0.0
    assert res.t_statistic == float("inf")
    # twelve tied differences use the normal approximation
    assert 0.0 < res.wilcoxon_pvalue < 0.01


def test_paired_tests_need_ten_pairs():
    with pytest.raises(InvalidInputError):
        paired_tests([1, 2, 3], [1, 2, 4])
    with pytest.raises(InvalidInputError):
        paired_tests(list(range(12)), list(range(11)))


@pytest.mark.slow
def test_paired_tests_calibrated_without_shift():
    rng = np.random.default_rng(31)
    t_p, w_p = [], []
    for _ in range(400):
        a, b = rng.normal(size=30), rng.normal(size=30)
        res = paired_tests(a, b)
        t_p.append(res.t_pvalue)
        w_p.append(res.wilcoxon_pvalue)
    assert 0.02 <= np.mean(np.array(t_p) < 0.05) <= 0.09
    assert 0.02 <= np.mean(np.array(w_p) < 0.05) <= 0.09
    assert stats.kstest(t_p, "uniform").pvalue > 0.001


@pytest.mark.slow
def test_paired_tests_detect_shift():
    rng = np.random.default_rng(32)
    hits = 0
    for _ in range(100):
        a = rng.normal(size=30)
        res = paired_tests(a + 1.0 + rng.normal(scale=0.5, size=30), a)
        hits += res.t_pvalue < 0.05 and res.wilcoxon_pvalue < 0.05
    assert hits >= 95

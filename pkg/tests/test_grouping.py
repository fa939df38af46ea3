"""
Delib Grouping Tests
=====================
Partitions produced by every strategy and the repeat-meeting cost.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from delib.grouping import (
    GroupPlan, GroupingError, MeetingCounts, balanced_sizes, golfer_cost, homogeneous_split,
    make_golfer_plan, make_groups, update_meetings,
)
from delib.population import PopulationConfig, init_population
from delib.types import Bloc, InvalidInputError, Strategy


def default_population(seed=0):
    return init_population(PopulationConfig(), np.random.default_rng(seed))


def tiny_population(n_maj=3, n_min=1):
    cfg = PopulationConfig(n_maj=n_maj, n_min=n_min, m=5, phi=0.5, k=1)
    return init_population(cfg, np.random.default_rng(0))


def blocs_of(population, group):
    return {population[i].bloc for i in group}


# ── Helpers ──────────────────────────────────────────────────

def test_balanced_sizes():
    assert balanced_sizes(10, 3) == [4, 3, 3]
    assert balanced_sizes(100, 10) == [10] * 10
    assert balanced_sizes(7, 7) == [1] * 7


def test_homogeneous_split():
    assert homogeneous_split(80, 20, 10) == (8, 2)
    assert homogeneous_split(3, 1, 2) == (1, 1)
    assert homogeneous_split(95, 5, 10) == (9, 1)
    with pytest.raises(GroupingError):
        homogeneous_split(80, 20, 1)


def test_plan_validation():
    GroupPlan(((0, 1), (2,))).validate(3)
    with pytest.raises(GroupingError):
        GroupPlan(((0, 1), (1, 2))).validate(3)
    with pytest.raises(GroupingError):
        GroupPlan(((0, 1),)).validate(3)


def test_meeting_counts():
    counts = MeetingCounts(4)
    assert counts.get(0, 1) == 0
    counts = update_meetings(counts, GroupPlan(((0, 1, 2), (3,))))
    assert counts.get(0, 1) == 1 and counts.get(2, 1) == 1
    assert counts.get(0, 3) == 0
    assert counts.with_pair(0, 3, 4).get(3, 0) == 4
    with pytest.raises(InvalidInputError):
        counts.get(2, 2)


def test_golfer_cost():
    counts = MeetingCounts(4).with_pair(0, 1, 2).with_pair(2, 3, 1)
    assert golfer_cost(GroupPlan(((0, 1), (2, 3))), counts) == 5
    assert golfer_cost(GroupPlan(((0, 2), (1, 3))), counts) == 0


# ── Strategies ───────────────────────────────────────────────

@pytest.mark.parametrize("strategy", list(Strategy))
def test_every_strategy_partitions(strategy):
    pop = default_population()
    plan = make_groups(strategy, pop, 10, MeetingCounts(len(pop)), np.random.default_rng(1))
    plan.validate(len(pop))
    if strategy is Strategy.LARGE:
        assert len(plan) == 1
    else:
        assert len(plan) == 10


def test_homogeneous_groups_are_single_bloc():
    pop = default_population()
    plan = make_groups(Strategy.HOMOGENEOUS, pop, 10, MeetingCounts(len(pop)), np.random.default_rng(2))
    kinds = [blocs_of(pop, g) for g in plan.groups]
    assert all(len(k) == 1 for k in kinds)
    assert sum(1 for k in kinds if k == {Bloc.MINORITY}) == 2
    assert plan.sizes() == [10] * 10


def test_heterogeneous_groups_mirror_ratio():
    pop = default_population()
    plan = make_groups(Strategy.HETEROGENEOUS, pop, 10, MeetingCounts(len(pop)), np.random.default_rng(3))
    for group in plan.groups:
        minority = sum(1 for i in group if pop[i].bloc is Bloc.MINORITY)
        assert minority == 2
        assert len(group) == 10


def test_heterogeneous_uneven_groups():
    pop = default_population()
    plan = make_groups(Strategy.HETEROGENEOUS, pop, 7, MeetingCounts(len(pop)), np.random.default_rng(3))
    plan.validate(len(pop))
    minorities = [sum(1 for i in g if pop[i].bloc is Bloc.MINORITY) for g in plan.groups]
    assert max(minorities) - min(minorities) <= 1


def test_random_plan_is_balanced():
    pop = default_population()
    plan = make_groups(Strategy.RANDOM, pop, 7, MeetingCounts(len(pop)), np.random.default_rng(4))
    assert max(plan.sizes()) - min(plan.sizes()) <= 1


def test_large_forces_single_group():
    pop = default_population()
    plan = make_groups(Strategy.LARGE, pop, 10, MeetingCounts(len(pop)), np.random.default_rng(5))
    assert plan.sizes() == [100]


def test_too_many_groups_rejected():
    pop = tiny_population()
    with pytest.raises(InvalidInputError):
        make_groups(Strategy.RANDOM, pop, 5, MeetingCounts(len(pop)), np.random.default_rng(0))
    with pytest.raises(InvalidInputError):
        make_groups(Strategy.RANDOM, pop, 0, MeetingCounts(len(pop)), np.random.default_rng(0))


# ── Golfer ───────────────────────────────────────────────────

def test_golfer_separates_previous_partners():
    pop = tiny_population()
    counts = update_meetings(MeetingCounts(4), GroupPlan(((0, 1), (2, 3))))
    for seed in range(20):
        plan = make_golfer_plan(pop, 2, counts, np.random.default_rng(seed))
        assert golfer_cost(plan, counts) == 0
        assert plan.sizes() == [2, 2]


def test_golfer_beats_random_on_repeat_meetings():
    pop = default_population()
    rng = np.random.default_rng(6)
    golfer_counts = MeetingCounts(len(pop))
    random_counts = MeetingCounts(len(pop))
    golfer_total = random_total = 0
    for _ in range(5):
        g_plan = make_groups(Strategy.ITER_GOLFER, pop, 10, golfer_counts, rng)
        r_plan = make_groups(Strategy.ITER_RANDOM, pop, 10, random_counts, rng)
        golfer_total += golfer_cost(g_plan, golfer_counts)
        random_total += golfer_cost(r_plan, random_counts)
        golfer_counts = update_meetings(golfer_counts, g_plan)
        random_counts = update_meetings(random_counts, r_plan)
    assert golfer_total < random_total


@pytest.mark.slow
def test_golfer_dominates_random_across_replications():
    pop = default_population()
    golfer_totals, random_totals = [], []
    for rep in range(200):
        rng = np.random.default_rng(1000 + rep)
        golfer_counts = MeetingCounts(len(pop))
        random_counts = MeetingCounts(len(pop))
        g_total = r_total = 0
        for _ in range(5):
            g_plan = make_groups(Strategy.ITER_GOLFER, pop, 10, golfer_counts, rng)
            r_plan = make_groups(Strategy.ITER_RANDOM, pop, 10, random_counts, rng)
            g_total += golfer_cost(g_plan, golfer_counts)
            r_total += golfer_cost(r_plan, random_counts)
            golfer_counts = update_meetings(golfer_counts, g_plan)
            random_counts = update_meetings(random_counts, r_plan)
        golfer_totals.append(g_total)
        random_totals.append(r_total)
    wins = sum(g <= r for g, r in zip(golfer_totals, random_totals))
    assert wins >= 196
    assert np.mean(golfer_totals) < np.mean(random_totals)


def test_golfer_first_round_is_free():
    pop = default_population()
    plan = make_golfer_plan(pop, 10, MeetingCounts(len(pop)), np.random.default_rng(7))
    assert golfer_cost(plan, MeetingCounts(len(pop))) == 0
    plan.validate(len(pop))

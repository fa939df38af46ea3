"""
Delib Grouping — Deliberation Group Formation
===============================================

Partitions the population into g deliberation groups, one GroupPlan
per round:

  homogeneous     single-bloc groups, groups allotted to blocs pro rata
  heterogeneous   every group mirrors the majority:minority ratio
  random          uniform balanced partition
  large           one group holding everybody (g forced to 1)
  iter_random     a fresh uniform partition every round
  iter_golfer     greedy partition minimising repeat meetings,
                  then pairwise swaps while they lower the cost

Repeat meetings are scored as the sum over co-grouped pairs of f(a,b)^2,
f(a,b) being how often a and b already shared a group.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from delib.population import Population
from delib.types import Bloc, InvalidInputError, Strategy


class GroupingError(InvalidInputError):
    """Raised when a strategy cannot build a valid plan."""
    pass


@dataclass(frozen=True)
class GroupPlan:
    """Disjoint agent-id groups covering the population."""
    groups: Tuple[Tuple[int, ...], ...]

    def validate(self, n: int) -> "GroupPlan":
        seen = [i for group in self.groups for i in group]
        if len(seen) != n or sorted(seen) != list(range(n)):
            raise GroupingError(f"plan is not a partition of {n} agents")
        if any(len(group) == 0 for group in self.groups):
            raise GroupingError("plan contains an empty group")
        return self

    def sizes(self) -> List[int]:
        return [len(group) for group in self.groups]

    def __len__(self):
        return len(self.groups)


class MeetingCounts:
    """Symmetric counts f(a, b) of earlier co-groupings."""

    __slots__ = ("f",)

    def __init__(self, n: int = 0, f: np.ndarray = None):
        self.f = np.zeros((n, n), dtype=np.int64) if f is None else f

    @property
    def n(self) -> int:
        return self.f.shape[0]

    def get(self, a: int, b: int) -> int:
        if a == b:
            raise InvalidInputError("meeting count of an agent with itself is undefined")
        return int(self.f[a, b])

    def with_pair(self, a: int, b: int, count: int) -> "MeetingCounts":
        if a == b:
            raise InvalidInputError("meeting count of an agent with itself is undefined")
        f = self.f.copy()
        f[a, b] = f[b, a] = count
        return MeetingCounts(f=f)


def balanced_sizes(n: int, g: int) -> List[int]:
    """Sizes differing by at most one, larger groups first."""
    return [n // g + (1 if i < n % g else 0) for i in range(g)]


def _split(ids: Sequence[int], g: int) -> List[Tuple[int, ...]]:
    out, pos = [], 0
    for size in balanced_sizes(len(ids), g):
        out.append(tuple(int(i) for i in ids[pos:pos + size]))
        pos += size
    return out


def _bloc_ids(population: Population) -> Tuple[List[int], List[int]]:
    maj = [a.id for a in population if a.bloc is Bloc.MAJORITY]
    mino = [a.id for a in population if a.bloc is Bloc.MINORITY]
    return maj, mino


# ── Cost bookkeeping ─────────────────────────────────────────

def golfer_cost(plan: GroupPlan, counts: MeetingCounts) -> int:
    total = 0
    for group in plan.groups:
        idx = np.asarray(group, dtype=np.int64)
        block = counts.f[np.ix_(idx, idx)]
        total += int(np.triu(block ** 2, k=1).sum())
    return total


def update_meetings(counts: MeetingCounts, plan: GroupPlan) -> MeetingCounts:
    f = counts.f.copy()
    for group in plan.groups:
        idx = np.asarray(group, dtype=np.int64)
        f[np.ix_(idx, idx)] += 1
        f[idx, idx] -= 1
    return MeetingCounts(f=f)


# ── Strategies ───────────────────────────────────────────────

def _heterogeneous(population: Population, g: int, rng: np.random.Generator) -> GroupPlan:
    maj, mino = _bloc_ids(population)
    maj = [int(i) for i in rng.permutation(maj)]
    mino = [int(i) for i in rng.permutation(mino)]
    caps = balanced_sizes(len(population), g)
    groups: List[List[int]] = [[] for _ in range(g)]
    # minority dealt round-robin, larger groups first
    for i, agent in enumerate(mino):
        groups[i % g].append(agent)
    rest = iter(maj)
    for group, cap in zip(groups, caps):
        while len(group) < cap:
            group.append(next(rest))
    return GroupPlan(tuple(tuple(group) for group in groups))


def homogeneous_split(n_maj: int, n_min: int, g: int) -> Tuple[int, int]:
    """Number of (majority, minority) groups, pro rata with at least one each."""
    if g < 2:
        raise GroupingError("homogeneous grouping needs at least two groups")
    n = n_maj + n_min
    g_maj = min(max(math.floor(g * n_maj / n + 0.5), 1), g - 1)
    g_min = g - g_maj
    if g_maj > n_maj or g_min > n_min:
        raise GroupingError(f"cannot form {g_maj}+{g_min} single-bloc groups "
                            f"from {n_maj}+{n_min} agents")
    return g_maj, g_min


def _homogeneous(population: Population, g: int, rng: np.random.Generator) -> GroupPlan:
    maj, mino = _bloc_ids(population)
    g_maj, g_min = homogeneous_split(len(maj), len(mino), g)
    groups = _split(rng.permutation(maj), g_maj) + _split(rng.permutation(mino), g_min)
    return GroupPlan(tuple(groups))


def _random(population: Population, g: int, rng: np.random.Generator) -> GroupPlan:
    ids = [a.id for a in population]
    return GroupPlan(tuple(_split(rng.permutation(ids), g)))


def make_golfer_plan(population: Population, g: int, counts: MeetingCounts,
                     rng: np.random.Generator, swap_passes: int = 50) -> GroupPlan:
    """
    Greedy insertion in random agent order: each agent joins the open
    group with the lowest incremental cost (ties: most free seats, then a
    random group order). Steepest-descent swaps of two agents from
    different groups follow while any swap lowers the cost.
    """
    n = len(population)
    if g < 1:
        raise InvalidInputError(f"group count must be >= 1, got {g}")
    caps = np.asarray(balanced_sizes(n, g), dtype=np.int64)
    f2 = counts.f.astype(np.int64) ** 2
    np.fill_diagonal(f2, 0)
    group_rank = np.empty(g, dtype=np.int64)
    group_rank[rng.permutation(g)] = np.arange(g)

    cost_to = np.zeros((n, g), dtype=np.int64)   # cost_to[a, x] = sum of f2[a, b] over b in x
    assign = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(g, dtype=np.int64)
    for a in rng.permutation(n):
        open_groups = np.flatnonzero(sizes < caps)
        keys = np.lexsort((group_rank[open_groups],
                           sizes[open_groups] - caps[open_groups],
                           cost_to[a, open_groups]))
        x = int(open_groups[keys[0]])
        assign[a] = x
        sizes[x] += 1
        cost_to[:, x] += f2[:, a]

    for _ in range(swap_passes):
        own = cost_to[np.arange(n), assign]
        cross = cost_to[:, assign]
        delta = cross + cross.T - own[:, None] - own[None, :] - 2 * f2
        delta[assign[:, None] == assign[None, :]] = 0
        flat = int(np.argmin(delta))
        if delta.flat[flat] >= 0:
            break
        a, b = divmod(flat, n)
        xa, xb = int(assign[a]), int(assign[b])
        cost_to[:, xa] += f2[:, b] - f2[:, a]
        cost_to[:, xb] += f2[:, a] - f2[:, b]
        assign[a], assign[b] = xb, xa

    groups = tuple(tuple(int(i) for i in np.flatnonzero(assign == x)) for x in range(g))
    return GroupPlan(groups)


def make_groups(strategy: Strategy, population: Population, g: int, counts: MeetingCounts,
                rng: np.random.Generator, swap_passes: int = 50) -> GroupPlan:
    n = len(population)
    if strategy is Strategy.LARGE:
        g = 1
    if g < 1:
        raise InvalidInputError(f"group count must be >= 1, got {g}")
    if g > n:
        raise InvalidInputError(f"cannot split {n} agents into {g} groups")

    if strategy is Strategy.LARGE:
        plan = GroupPlan((tuple(a.id for a in population),))
    elif strategy is Strategy.HETEROGENEOUS:
        plan = _heterogeneous(population, g, rng)
    elif strategy is Strategy.HOMOGENEOUS:
        plan = _homogeneous(population, g, rng)
    elif strategy in (Strategy.RANDOM, Strategy.ITER_RANDOM):
        plan = _random(population, g, rng)
    elif strategy is Strategy.ITER_GOLFER:
        plan = make_golfer_plan(population, g, counts, rng, swap_passes)
    else:
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    return plan.validate(n)

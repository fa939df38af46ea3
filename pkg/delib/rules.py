"""
Delib Rules — Approval-Based Committee Voting
===============================================

Exact winners for the four rules under study plus the committees
needed as ratio denominators:

  av_committee     top-k approval scores
  cc_committee     maximum voter coverage (Chamberlin-Courant)
  pav_committee    maximum harmonic PAV score
  mes_committee    Method of Equal Shares, unit costs, budget k/n
  optimal_welfare_committee   maximum utilitarian welfare

CC and PAV are solved by depth-first branch-and-bound over candidates
in tie-breaker priority order. Both objectives are monotone submodular,
so the sum of the best remaining marginal gains bounds every
completion of a partial committee. CC works on voter bitsets and also
caps coverage by the voters the remaining candidates can still reach;
its secondary AV order is bounded separately. All comparisons are on
integers (PAV scores scaled by lcm(1..k), on Python ints once int64
could overflow), so the reported committee is the lexicographically
first optimum under the priority.

MES works in exact rational arithmetic (`fractions.Fraction`), the
way abcvoting's equal-shares implementation does.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from delib.types import CcTie, InvalidInputError, MesCompletion, RuleName

logger = logging.getLogger("delib.rules")

Committee = FrozenSet[int]


# ── Profile ──────────────────────────────────────────────────

class ApprovalProfile:
    """
    n approval ballots over candidates 0..m-1.

    Derived caches: the boolean approval matrix (n, m), approval
    scores V(c) and supporter lists N(c).
    """

    __slots__ = ("ballots", "m", "n", "matrix", "scores", "supporters")

    def __init__(self, ballots: Iterable[Iterable[int]], m: int):
        self.ballots: Tuple[FrozenSet[int], ...] = tuple(frozenset(int(c) for c in b) for b in ballots)
        self.m = int(m)
        self.n = len(self.ballots)
        if self.n == 0:
            raise InvalidInputError("profile needs at least one ballot")
        matrix = np.zeros((self.n, self.m), dtype=bool)
        for i, ballot in enumerate(self.ballots):
            if not ballot:
                raise InvalidInputError(f"ballot {i} is empty")
            if min(ballot) < 0 or max(ballot) >= self.m:
                raise InvalidInputError(f"ballot {i} names a candidate outside [0, {self.m})")
            matrix[i, sorted(ballot)] = True
        matrix.setflags(write=False)
        self.matrix = matrix
        self.scores = matrix.sum(axis=0).astype(np.int64)
        self.supporters: Tuple[Tuple[int, ...], ...] = tuple(
            tuple(int(i) for i in np.flatnonzero(matrix[:, c])) for c in range(self.m)
        )

    def approval_score(self, c: int) -> int:
        return int(self.scores[c])

    def __repr__(self):
        return f"<ApprovalProfile n={self.n} m={self.m}>"


@dataclass(frozen=True)
class TieBreaker:
    """Fixed candidate priority; earlier in `priority` wins ties."""
    priority: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.priority) != list(range(len(self.priority))):
            raise InvalidInputError("tie-breaker priority must be a permutation of 0..m-1")
        object.__setattr__(self, "_rank", {c: r for r, c in enumerate(self.priority)})

    @classmethod
    def identity(cls, m: int) -> "TieBreaker":
        return cls(tuple(range(m)))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> "TieBreaker":
        return cls(tuple(int(c) for c in rng.permutation(m)))

    def rank(self, c: int) -> int:
        return self._rank[c]

    def order(self, candidates: Iterable[int]) -> List[int]:
        return sorted(candidates, key=self._rank.__getitem__)


@dataclass
class RuleOutcome:
    """Winning committee with the rule's objective value and diagnostics."""
    rule: RuleName
    committee: Committee
    score: float
    diagnostics: Dict = field(default_factory=dict)

    def members(self) -> List[int]:
        return sorted(self.committee)


def _check_k(profile: ApprovalProfile, k: int):
    if not 1 <= k <= profile.m:
        raise InvalidInputError(f"committee size must lie in [1, {profile.m}], got {k}")


def _cols(W: Iterable[int]) -> List[int]:
    return sorted(int(c) for c in W)


def harmonic(t: int) -> float:
    """h(t) = 1 + 1/2 + ... + 1/t."""
    return float(sum(Fraction(1, i) for i in range(1, t + 1)))


# ── Scores ───────────────────────────────────────────────────

def av_score(profile: ApprovalProfile, W: Iterable[int]) -> int:
    return int(profile.scores[_cols(W)].sum())


def coverage_score(profile: ApprovalProfile, W: Iterable[int]) -> int:
    cols = _cols(W)
    if not cols:
        return 0
    return int(profile.matrix[:, cols].any(axis=1).sum())


def pav_score(profile: ApprovalProfile, W: Iterable[int]) -> float:
    cols = _cols(W)
    if not cols:
        return 0.0
    counts = profile.matrix[:, cols].sum(axis=1)
    top = int(counts.max())
    table = [Fraction(0)]
    for t in range(1, top + 1):
        table.append(table[-1] + Fraction(1, t))
    return float(sum(table[int(c)] for c in counts))


def social_welfare(utilities: np.ndarray, W: Iterable[int]) -> float:
    """Sum over agents and members of u_i(c); utilities has shape (n, m)."""
    totals = np.asarray(utilities, dtype=float).sum(axis=0)
    return float(np.sum(totals[_cols(W)]))


# ── AV ───────────────────────────────────────────────────────

def av_committee(profile: ApprovalProfile, k: int, tie: TieBreaker) -> RuleOutcome:
    _check_k(profile, k)
    ranked = sorted(range(profile.m), key=lambda c: (-profile.scores[c], tie.rank(c)))
    committee = frozenset(ranked[:k])
    return RuleOutcome(RuleName.AV, committee, float(av_score(profile, committee)))


# ── Branch and bound (PAV) ───────────────────────────────────

GainsFn = Callable[[np.ndarray], np.ndarray]

# Scaled PAV keys stay on int64 below this; above it the search runs on Python ints.
_INT64_SAFE = 2 ** 62


def _suffix_top_sums(gains: Sequence[int], start: int, r: int) -> List[int]:
    """out[j] = sum of the r largest gains[j+1:], for j >= start."""
    m = len(gains)
    out = [0] * m
    if r <= 0:
        return out
    heap: List[int] = []
    running = 0
    for j in range(m - 1, start - 1, -1):
        out[j] = running
        g = int(gains[j])
        if len(heap) < r:
            heapq.heappush(heap, g)
            running += g
        elif g > heap[0]:
            running += g - heapq.heapreplace(heap, g)
    return out


def _greedy_key(M: np.ndarray, k: int, gains_fn: GainsFn) -> int:
    counts = np.zeros(M.shape[0], dtype=np.int64)
    taken = np.zeros(M.shape[1], dtype=bool)
    key = 0
    for _ in range(k):
        gains = [(-1 if taken[j] else int(g)) for j, g in enumerate(gains_fn(counts))]
        j = max(range(len(gains)), key=lambda c: (gains[c], -c))
        key += gains[j]
        taken[j] = True
        counts = counts + M[:, j]
    return key


def _branch_and_bound(M: np.ndarray, k: int, gains_fn: GainsFn) -> Tuple[List[int], int, int]:
    """
    Maximise a monotone submodular set function given by its marginal gains.

    M holds the approval columns in priority order; the state passed to
    gains_fn is the per-voter count of approved chosen columns. Returns
    (column positions, optimal key, nodes visited).
    """
    m = M.shape[1]
    best_key = _greedy_key(M, k, gains_fn) - 1
    best: List[int] = []
    chosen: List[int] = []
    nodes = 0

    def dfs(start: int, counts: np.ndarray, key: int):
        nonlocal best_key, best, nodes
        nodes += 1
        missing = k - len(chosen)
        gains = [int(g) for g in gains_fn(counts)]
        last = m - missing
        if missing == 1:
            j = max(range(start, m), key=lambda c: (gains[c], -c))
            if key + gains[j] > best_key:
                best_key = key + gains[j]
                best = chosen + [j]
            return
        suffix = _suffix_top_sums(gains, start, missing - 1)
        for j in range(start, last + 1):
            if key + gains[j] + suffix[j] <= best_key:
                continue
            chosen.append(j)
            dfs(j + 1, counts + M[:, j], key + gains[j])
            chosen.pop()

    dfs(0, np.zeros(M.shape[0], dtype=np.int64), 0)
    return best, best_key, nodes


def _priority_matrix(profile: ApprovalProfile, tie: TieBreaker) -> Tuple[np.ndarray, np.ndarray]:
    order = np.asarray(tie.priority, dtype=np.int64)
    if len(order) != profile.m:
        raise InvalidInputError("tie-breaker covers a different number of candidates than the profile")
    return order, profile.matrix[:, order].astype(np.int64)


# ── CC ───────────────────────────────────────────────────────

def _voter_masks(profile: ApprovalProfile, order: Sequence[int]) -> List[int]:
    """Supporters of each candidate as an int bitset, in priority order."""
    masks = []
    for c in order:
        mask = 0
        for i in profile.supporters[c]:
            mask |= 1 << i
        masks.append(mask)
    return masks


def _cc_search(masks: Sequence[int], V: Sequence[int], k: int,
               full: int) -> Tuple[List[int], Tuple[int, int], int]:
    """
    Lexicographic (coverage, V-sum) maximum over size-k position sets.

    Coverage of a completion is capped by the voters the remaining
    candidates can still reach; the V part is bounded by static suffix
    top-r sums. Returns (positions, (coverage, V-sum), nodes visited).
    """
    m = len(masks)
    union = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        union[j] = union[j + 1] | masks[j]
    top_v = [_suffix_top_sums(V, 0, r) for r in range(k)]

    # greedy incumbent, lowered by one so an equal optimum earlier in priority still wins
    uncovered, cov, av, taken = full, 0, 0, set()
    for _ in range(k):
        j = max((c for c in range(m) if c not in taken),
                key=lambda c: ((masks[c] & uncovered).bit_count(), V[c], -c))
        cov += (masks[j] & uncovered).bit_count()
        av += V[j]
        uncovered &= ~masks[j]
        taken.add(j)
    best_value = (cov, av - 1)
    best: List[int] = []
    chosen: List[int] = []
    nodes = 0

    def dfs(start: int, uncovered: int, cov: int, av: int):
        nonlocal best_value, best, nodes
        nodes += 1
        missing = k - len(chosen)
        gains = [0] * start + [(masks[j] & uncovered).bit_count() for j in range(start, m)]
        if missing == 1:
            j = max(range(start, m), key=lambda c: (gains[c], V[c], -c))
            value = (cov + gains[j], av + V[j])
            if value > best_value:
                best_value = value
                best = chosen + [j]
            return
        r = missing - 1
        suffix = _suffix_top_sums(gains, start, r)
        for j in range(start, m - missing + 1):
            reach = (uncovered & (masks[j] | union[j + 1])).bit_count()
            bound = (cov + min(gains[j] + suffix[j], reach), av + V[j] + top_v[r][j])
            if bound <= best_value:
                continue
            chosen.append(j)
            dfs(j + 1, uncovered & ~masks[j], cov + gains[j], av + V[j])
            chosen.pop()

    dfs(0, full, 0, 0)
    return best, best_value, nodes


def cc_committee(profile: ApprovalProfile, k: int, tie: TieBreaker,
                 secondary: CcTie = CcTie.AV) -> RuleOutcome:
    """Maximum coverage; ties by higher AV score then priority, or by priority alone."""
    _check_k(profile, k)
    if len(tie.priority) != profile.m:
        raise InvalidInputError("tie-breaker covers a different number of candidates than the profile")
    order = list(tie.priority)
    if secondary is CcTie.AV:
        V = [int(profile.scores[c]) for c in order]
    elif secondary is CcTie.PRIORITY:
        V = [0] * profile.m
    else:
        raise InvalidInputError(f"unknown CC tie rule {secondary!r}")
    positions, (coverage, _), nodes = _cc_search(_voter_masks(profile, order), V, k,
                                                  (1 << profile.n) - 1)
    committee = frozenset(order[p] for p in positions)
    logger.debug("cc: %d nodes, coverage=%d", nodes, coverage)
    return RuleOutcome(RuleName.CC, committee, float(coverage),
                       {"nodes": nodes, "av_score": av_score(profile, committee)})


def cc_max_coverage(profile: ApprovalProfile, k: int) -> int:
    """Exact maximum coverage over all size-k committees."""
    return int(cc_committee(profile, k, TieBreaker.identity(profile.m), CcTie.PRIORITY).score)


# ── PAV ──────────────────────────────────────────────────────

def pav_committee(profile: ApprovalProfile, k: int, tie: TieBreaker) -> RuleOutcome:
    _check_k(profile, k)
    order, M = _priority_matrix(profile, tie)
    lcm = math.lcm(*range(1, k + 1))
    # marginal weight of an approver who already has t approved members
    weights = [lcm // (t + 1) for t in range(k)] + [0]
    if profile.n * lcm * k < _INT64_SAFE:
        table, G = np.array(weights, dtype=np.int64), M
    else:
        table, G = np.array(weights, dtype=object), M.astype(object)

    def gains(counts):
        return table[np.minimum(counts, k)] @ G

    positions, key, nodes = _branch_and_bound(M, k, gains)
    committee = frozenset(int(order[p]) for p in positions)
    logger.debug("pav: %d nodes", nodes)
    return RuleOutcome(RuleName.PAV, committee, float(Fraction(key, lcm)), {"nodes": nodes})


# ── MES ──────────────────────────────────────────────────────

def min_affordable_q(budgets: Sequence[Fraction]) -> Optional[Fraction]:
    """
    Smallest q >= 0 with sum(min(q, b)) == 1, or None if unaffordable.

    Water-filling over ascending budgets: supporters poorer than the
    current equal share pay their whole budget, the rest split the
    remainder equally.
    """
    if not budgets or sum(budgets) < 1:
        return None
    ordered = sorted(budgets)
    paid = Fraction(0)
    for j, b in enumerate(ordered):
        q = (1 - paid) / (len(ordered) - j)
        if q <= b:
            return q
        paid += b
    return None


def mes_committee(profile: ApprovalProfile, k: int, tie: TieBreaker,
                  completion: MesCompletion = MesCompletion.AV) -> RuleOutcome:
    _check_k(profile, k)
    budget = [Fraction(k, profile.n)] * profile.n
    committee: List[int] = []
    qs: List[Fraction] = []
    remaining = tie.order(range(profile.m))

    while len(committee) < k:
        best_q, best_c = None, None
        for c in remaining:
            q = min_affordable_q([budget[i] for i in profile.supporters[c]])
            if q is not None and (best_q is None or q < best_q):
                best_q, best_c = q, c
        if best_c is None:
            break
        for i in profile.supporters[best_c]:
            budget[i] -= min(best_q, budget[i])
        committee.append(best_c)
        remaining.remove(best_c)
        qs.append(best_q)

    phase_one = len(committee)
    missing = k - phase_one
    if missing:
        if completion is MesCompletion.AV:
            fill = sorted(remaining, key=lambda c: (-profile.scores[c], tie.rank(c)))
        elif completion is MesCompletion.SEQ_PRIORITY:
            fill = remaining
        else:
            raise InvalidInputError(f"unknown MES completion {completion!r}")
        committee.extend(fill[:missing])

    spent = Fraction(k) - sum(budget)
    diagnostics = {
        "q": [float(q) for q in qs],
        "completion": missing,
        "spent": float(spent),
        "min_budget": float(min(budget)),
    }
    members = frozenset(committee)
    return RuleOutcome(RuleName.MES, members, float(av_score(profile, members)), diagnostics)


# ── Welfare optimum ──────────────────────────────────────────

def optimal_welfare_committee(utilities: np.ndarray, k: int,
                              tie: Optional[TieBreaker] = None) -> Tuple[Committee, float]:
    """Welfare is additive over members, so the top-k column totals win."""
    U = np.asarray(utilities, dtype=float)
    m = U.shape[1]
    if not 1 <= k <= m:
        raise InvalidInputError(f"committee size must lie in [1, {m}], got {k}")
    totals = U.sum(axis=0)
    rank = tie.rank if tie is not None else (lambda c: c)
    ranked = sorted(range(m), key=lambda c: (-totals[c], rank(c)))
    committee = frozenset(ranked[:k])
    return committee, social_welfare(U, committee)


# ── Dispatch ─────────────────────────────────────────────────

def compute(rule: RuleName, profile: ApprovalProfile, k: int, tie: TieBreaker,
            mes_completion: MesCompletion = MesCompletion.AV,
            cc_tie: CcTie = CcTie.AV) -> RuleOutcome:
    if rule is RuleName.AV:
        return av_committee(profile, k, tie)
    if rule is RuleName.CC:
        return cc_committee(profile, k, tie, cc_tie)
    if rule is RuleName.PAV:
        return pav_committee(profile, k, tie)
    if rule is RuleName.MES:
        return mes_committee(profile, k, tie, mes_completion)
    raise InvalidInputError(f"unknown rule {rule!r}")

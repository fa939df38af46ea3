"""
Delib Axioms — EJR / PJR Verification
=======================================

Exact checks of Extended and Proportional Justified Representation
with violation witnesses.

A group N' is T-cohesive when |N'| >= T*n/k and its members share at
least T approved candidates. Size thresholds are compared as integers
(|N'| * k >= T * n), never as floats.

Voter sets are Python int bitsets; a search for T common candidates
walks candidates in decreasing support among the eligible voters and
abandons a branch as soon as the running intersection drops below
ceil(T*n/k) voters.

The PJR search enumerates the represented subsets W' of the
committee, so it is exponential in k (k = 5 gives at most 5 subsets
per T) but exact.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from delib.rules import ApprovalProfile
from delib.types import InvalidInputError


@dataclass(frozen=True)
class CohesivenessWitness:
    """A T-cohesive voter group that the committee under-represents."""
    T: int
    common_candidates: FrozenSet[int]
    voters: FrozenSet[int]
    # PJR only: the members W' that cover every voter's represented set
    represented_by: Optional[FrozenSet[int]] = None


@dataclass(frozen=True)
class AxiomVerdict:
    satisfied: bool
    witness: Optional[CohesivenessWitness] = None

    def __bool__(self):
        return self.satisfied


def _need(T: int, n: int, k: int) -> int:
    """Smallest integer group size s with s * k >= T * n."""
    return -(-T * n // k)


def _candidate_masks(profile: ApprovalProfile) -> List[int]:
    masks = []
    for supporters in profile.supporters:
        mask = 0
        for i in supporters:
            mask |= 1 << i
        masks.append(mask)
    return masks


def _voters_of(mask: int) -> FrozenSet[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _find_cohesive(cand_masks: Sequence[int], eligible: int, T: int,
                   need: int) -> Optional[Tuple[Tuple[int, ...], int]]:
    """Return (candidates, voter mask) for T candidates jointly approved by >= need eligible voters."""
    if eligible.bit_count() < need:
        return None
    pool = []
    for c, mask in enumerate(cand_masks):
        support = (mask & eligible).bit_count()
        if support >= need:
            pool.append((support, c, mask & eligible))
    if len(pool) < T:
        return None
    pool.sort(key=lambda item: (-item[0], item[1]))

    chosen: List[int] = []

    def search(start: int, common: int) -> Optional[int]:
        if len(chosen) == T:
            return common
        for idx in range(start, len(pool) - (T - len(chosen)) + 1):
            _, c, mask = pool[idx]
            joint = common & mask
            if joint.bit_count() < need:
                continue
            chosen.append(c)
            found = search(idx + 1, joint)
            if found is not None:
                return found
            chosen.pop()
        return None

    found = search(0, eligible)
    if found is None:
        return None
    return tuple(chosen), found


def is_t_cohesive(profile: ApprovalProfile, voters: Iterable[int], T: int, k: int) -> bool:
    group = frozenset(voters)
    if not group:
        raise InvalidInputError("voter set must be nonempty")
    if T < 1:
        raise InvalidInputError(f"T must be >= 1, got {T}")
    common = frozenset.intersection(*(profile.ballots[i] for i in group))
    return len(common) >= T and len(group) * k >= T * profile.n


def _check_committee(profile: ApprovalProfile, W: Iterable[int], k: int) -> FrozenSet[int]:
    committee = frozenset(int(c) for c in W)
    if len(committee) != k:
        raise InvalidInputError(f"committee has {len(committee)} members, expected {k}")
    return committee


def satisfies_ejr(profile: ApprovalProfile, W: Iterable[int], k: int) -> AxiomVerdict:
    committee = _check_committee(profile, W, k)
    masks = _candidate_masks(profile)
    represented = [len(b & committee) for b in profile.ballots]
    for T in range(1, k + 1):
        eligible = 0
        for i, r in enumerate(represented):
            if r < T:
                eligible |= 1 << i
        found = _find_cohesive(masks, eligible, T, _need(T, profile.n, k))
        if found is not None:
            cands, voters = found
            return AxiomVerdict(False, CohesivenessWitness(T, frozenset(cands), _voters_of(voters)))
    return AxiomVerdict(True)


def satisfies_pjr(profile: ApprovalProfile, W: Iterable[int], k: int) -> AxiomVerdict:
    committee = _check_committee(profile, W, k)
    masks = _candidate_masks(profile)
    everyone = (1 << profile.n) - 1
    members = sorted(committee)
    for T in range(1, k + 1):
        need = _need(T, profile.n, k)
        # a larger W' only admits more voters, so |W'| = T-1 covers every smaller choice
        for subset in combinations(members, min(T - 1, len(members))):
            eligible = everyone
            for c in committee.difference(subset):
                eligible &= ~masks[c]
            found = _find_cohesive(masks, eligible, T, need)
            if found is not None:
                cands, voters = found
                return AxiomVerdict(False, CohesivenessWitness(
                    T, frozenset(cands), _voters_of(voters), frozenset(subset)))
    return AxiomVerdict(True)

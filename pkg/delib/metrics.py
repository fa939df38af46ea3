"""
Delib Metrics — Objectives, Consensus and Significance
========================================================

Per-committee objectives:
  UR     achieved welfare / maximum welfare over size-k committees
  RR     achieved voter coverage / maximum coverage
  URagg  UR * RR
  VS     mean number of approved members per voter
  minority preservation and the committee's sorted approval scores

Consensus diagnostics:
  utility variance          mean over candidates of the population
                            variance (divide by N) of utilities
  inter-group disagreement  mean over (minority, majority) voter pairs of
                            1 - |A_min & A_maj| / min(|A_min|, |A_maj|)

Significance: paired t-test and Wilcoxon signed-rank test via scipy.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from delib.rules import ApprovalProfile, cc_max_coverage, optimal_welfare_committee, social_welfare
from delib.types import Bloc, DelibError, InvalidInputError, MinorityRule

# Largest sample for which the Wilcoxon p-value is exact (ties force the normal approximation).
WILCOXON_EXACT_MAX_N = 25
MIN_PAIRED_SAMPLES = 10


class UndefinedRatioError(DelibError):
    """Raised when a ratio's denominator is zero."""
    pass


@dataclass
class ObjectiveScores:
    ur: float
    rr: float
    uragg: float
    vs: float
    ejr_ok: bool
    pjr_ok: bool
    minority_preserved: int
    committee_approvals: List[int] = field(default_factory=list)


@dataclass
class ConsensusStats:
    utility_variance: float
    intergroup_disagreement: float


@dataclass
class PairedTestResult:
    t_statistic: float
    t_pvalue: float
    wilcoxon_statistic: float
    wilcoxon_pvalue: float
    n: int = 0
    # zero-variance differences (t) / all differences zero (Wilcoxon)
    t_degenerate: bool = False
    wilcoxon_degenerate: bool = False


def _check_size(W: FrozenSet[int], k: int):
    if len(W) != k:
        raise InvalidInputError(f"committee has {len(W)} members, expected {k}")


# ── Committee objectives ─────────────────────────────────────

def utilitarian_ratio(utilities: np.ndarray, W: Iterable[int], k: int,
                      optimum: Optional[float] = None) -> float:
    committee = frozenset(W)
    _check_size(committee, k)
    if optimum is None:
        _, optimum = optimal_welfare_committee(utilities, k)
    if optimum <= 0.0:
        raise UndefinedRatioError("maximum social welfare is zero")
    return min(1.0, social_welfare(utilities, committee) / optimum)


def representation_ratio(profile: ApprovalProfile, W: Iterable[int], k: int,
                         max_coverage: Optional[int] = None) -> float:
    committee = frozenset(W)
    _check_size(committee, k)
    if max_coverage is None:
        max_coverage = cc_max_coverage(profile, k)
    if max_coverage <= 0:
        raise UndefinedRatioError("maximum coverage is zero")
    covered = int(profile.matrix[:, sorted(committee)].any(axis=1).sum())
    return covered / max_coverage


def uragg(ur: float, rr: float) -> float:
    if not (0.0 <= ur <= 1.0 and 0.0 <= rr <= 1.0):
        raise InvalidInputError(f"ratios must lie in [0, 1], got ur={ur}, rr={rr}")
    return ur * rr


def voter_satisfaction(profile: ApprovalProfile, W: Iterable[int]) -> float:
    cols = sorted(W)
    if not cols:
        return 0.0
    return float(profile.matrix[:, cols].sum()) / profile.n


def committee_approval_profile(profile: ApprovalProfile, W: Iterable[int]) -> List[int]:
    """Members' approval scores in increasing order."""
    return sorted(int(profile.scores[c]) for c in W)


# ── Minority support ─────────────────────────────────────────

def _split_blocs(profile: ApprovalProfile, blocs: Sequence[Bloc]):
    if len(blocs) != profile.n:
        raise InvalidInputError("need one bloc label per voter")
    minority = np.array([b is Bloc.MINORITY for b in blocs])
    if minority.all() or not minority.any():
        raise InvalidInputError("both blocs must be nonempty")
    return profile.matrix[minority], profile.matrix[~minority]


def minority_supported_candidates(initial_profile: ApprovalProfile, blocs: Sequence[Bloc],
                                  rule: MinorityRule = MinorityRule.STRICT) -> FrozenSet[int]:
    """Candidates whose approval share is higher among minority voters."""
    mino, maj = _split_blocs(initial_profile, blocs)
    v_min = mino.sum(axis=0).astype(np.int64)
    v_maj = maj.sum(axis=0).astype(np.int64)
    # V_min / n_min vs V_maj / n_maj, cross-multiplied
    lhs = v_min * maj.shape[0]
    rhs = v_maj * mino.shape[0]
    if rule is MinorityRule.WEAK:
        mask = (lhs >= rhs) & (v_min > 0)
    else:
        mask = lhs > rhs
    return frozenset(int(c) for c in np.flatnonzero(mask))


def minority_preservation(minority_set: Iterable[int], W: Iterable[int]) -> int:
    return len(frozenset(minority_set) & frozenset(W))


# ── Consensus ────────────────────────────────────────────────

def utility_variance(population: Union["Population", np.ndarray]) -> float:
    U = population if isinstance(population, np.ndarray) else population.utility_matrix()
    if U.shape[0] == 0:
        raise InvalidInputError("population must be nonempty")
    return float(np.var(U, axis=0).mean())


def intergroup_disagreement(profile: ApprovalProfile, blocs: Sequence[Bloc]) -> float:
    mino, maj = _split_blocs(profile, blocs)
    mino = mino.astype(np.int64)
    maj = maj.astype(np.int64)
    common = mino @ maj.T
    smaller = np.minimum.outer(mino.sum(axis=1), maj.sum(axis=1))
    return float(np.mean(1.0 - common / smaller))


# ── Significance ─────────────────────────────────────────────

def paired_tests(sample_a: Sequence[float], sample_b: Sequence[float]) -> PairedTestResult:
    """Two-sided paired t-test and Wilcoxon signed-rank test (zero differences dropped)."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("paired samples must be 1-d and of equal length")
    if len(a) < MIN_PAIRED_SAMPLES:
        raise InvalidInputError(f"paired tests need at least {MIN_PAIRED_SAMPLES} pairs, got {len(a)}")
    d = a - b
    result = PairedTestResult(0.0, 1.0, 0.0, 1.0, n=len(a))

    if np.all(d == d[0]):
        result.t_degenerate = True
        mean = float(d[0])
        if mean != 0.0:
            result.t_statistic = float(np.copysign(np.inf, mean))
            result.t_pvalue = 0.0
    else:
        t = stats.ttest_rel(a, b)
        result.t_statistic, result.t_pvalue = float(t.statistic), float(t.pvalue)

    nonzero = d[d != 0.0]
    if nonzero.size == 0:
        result.wilcoxon_degenerate = True
        return result
    magnitudes = np.abs(nonzero)
    tied = np.unique(magnitudes).size < magnitudes.size
    method = "exact" if nonzero.size <= WILCOXON_EXACT_MAX_N and not tied else "asymptotic"
    w = stats.wilcoxon(nonzero, zero_method="wilcox", correction=False,
                       alternative="two-sided", method=method)
    result.wilcoxon_statistic, result.wilcoxon_pvalue = float(w.statistic), float(w.pvalue)
    return result

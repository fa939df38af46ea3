"""
Delib Harness — Monte-Carlo Experiment Driver
===============================================

One replication:

  1. draw populations until the initial profile passes the
     eligibility filter: RR(AV) < threshold and UR(CC) < threshold
  2. record every rule on the initial profile (strategy "initial")
  3. for each strategy: clone the initial population, deliberate,
     rebuild rankings and ballots, record every rule again

Randomness comes from delib.streams keyed by (master_seed,
replication, phase), so a replication's records do not depend on
which other strategies run or on how replications are scheduled.

run_experiment runs all replications (inline or in a process pool),
sorts the records canonically, aggregates them into means, standard
errors and paired significance tests, and persists everything.
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from delib.axioms import satisfies_ejr, satisfies_pjr
from delib.config import ExperimentConfig
from delib.dynamics import run_deliberation
from delib.metrics import (
    MIN_PAIRED_SAMPLES, PairedTestResult, committee_approval_profile, intergroup_disagreement,
    minority_preservation, minority_supported_candidates, paired_tests, representation_ratio,
    uragg, utilitarian_ratio, utility_variance, voter_satisfaction,
)
from delib.population import Population, init_population, rerank_from_utilities
from delib.records import RunRecord, canonical_sort, persist_records
from delib.rules import (
    ApprovalProfile, RuleOutcome, TieBreaker, av_committee, cc_committee, cc_max_coverage, compute,
    coverage_score, optimal_welfare_committee,
)
from delib.streams import stream
from delib.types import INITIAL, STRATEGY_ORDER, CcTie, DelibError, RuleName, Strategy, TiePolicy

logger = logging.getLogger("delib.harness")

OBJECTIVES = ["ur", "rr", "uragg", "vs", "ejr", "pjr", "minority_preserved",
              "variance", "disagreement"]

# Objectives compared pairwise across strategies.
TESTED_OBJECTIVES = ["ur", "rr", "uragg", "vs", "minority_preserved", "variance", "disagreement"]

INSUFFICIENT_DATA = "insufficient-data"


class EligibilityExhaustedError(DelibError):
    """Raised when no eligible initial profile turns up within the attempt cap."""
    pass


# ── Eligibility ──────────────────────────────────────────────

@dataclass
class EligibilityCheck:
    """Outcome of the eligibility filter on one drawn profile."""
    eligible: bool
    rr_av: float
    ur_cc: Optional[float] = None   # None when the CC search was skipped
    cc: Optional[RuleOutcome] = None
    cc_seconds: float = 0.0


def is_eligible(population: Population, profile: ApprovalProfile, k: int,
                threshold: float, tie: TieBreaker, cc_tie: CcTie = CcTie.AV) -> EligibilityCheck:
    """
    RR(AV) < threshold and UR(CC) < threshold.

    Maximum coverage never exceeds n, so covered/n is a lower bound on
    RR(AV); when it already reaches the threshold the profile is
    rejected without running the CC search, and rr_av holds that bound.
    """
    av = av_committee(profile, k, tie).committee
    covered = coverage_score(profile, av)
    if covered / profile.n >= threshold:
        return EligibilityCheck(False, covered / profile.n)
    t0 = time.perf_counter()
    cc = cc_committee(profile, k, tie, cc_tie)
    seconds = time.perf_counter() - t0
    rr_av = representation_ratio(profile, av, k, max_coverage=int(cc.score))
    U = population.utility_matrix()
    _, optimum = optimal_welfare_committee(U, k)
    ur_cc = utilitarian_ratio(U, cc.committee, k, optimum=optimum)
    return EligibilityCheck(rr_av < threshold and ur_cc < threshold, rr_av, ur_cc, cc, seconds)


def _eligible_instance(cfg: ExperimentConfig, replication: int,
                       tie: TieBreaker) -> Tuple[Population, ApprovalProfile, int, EligibilityCheck]:
    for attempt in range(1, cfg.eligibility_cap + 1):
        rng = stream(cfg.master_seed, replication, f"population:{attempt}")
        population = init_population(cfg.population, rng)
        profile = ApprovalProfile(population.ballots(), cfg.population.m)
        check = is_eligible(population, profile, cfg.k, cfg.eligibility_threshold, tie, cfg.cc_tie)
        if check.ur_cc is None:
            logger.debug("replication %d attempt %d: rr(av)>=%.4f rejected",
                         replication, attempt, check.rr_av)
        else:
            logger.debug("replication %d attempt %d: rr(av)=%.4f ur(cc)=%.4f%s", replication,
                         attempt, check.rr_av, check.ur_cc, "" if check.eligible else " rejected")
        if check.eligible:
            return population, profile, attempt, check
    raise EligibilityExhaustedError(
        f"replication {replication}: no eligible profile in {cfg.eligibility_cap} attempts "
        f"(threshold {cfg.eligibility_threshold}, phi {cfg.population.phi})")


def generate_eligible_instance(cfg: ExperimentConfig, replication: int,
                               tie: TieBreaker) -> Tuple[Population, ApprovalProfile, int]:
    """Resample whole populations until one is eligible; returns (population, profile, attempts)."""
    population, profile, attempts, _ = _eligible_instance(cfg, replication, tie)
    return population, profile, attempts


def make_tiebreaker(cfg: ExperimentConfig, replication: int) -> TieBreaker:
    m = cfg.population.m
    if cfg.tie_policy is TiePolicy.IDENTITY:
        return TieBreaker.identity(m)
    return TieBreaker.random(m, stream(cfg.master_seed, replication, "tiebreak"))


# ── One replication ──────────────────────────────────────────

def _evaluate(cfg: ExperimentConfig, replication: int, strategy: str, population: Population,
              profile: ApprovalProfile, tie: TieBreaker, minority_set: FrozenSet[int],
              attempts: int, setup_seconds: float = 0.0,
              known: Optional[Dict[RuleName, Tuple[RuleOutcome, float]]] = None) -> List[RunRecord]:
    """Records for every rule; `known` carries outcomes (and their seconds) already computed."""
    k = cfg.k
    known = known or {}
    U = population.utility_matrix()
    blocs = population.blocs()
    _, optimum = optimal_welfare_committee(U, k)
    variance = utility_variance(U)
    disagreement = intergroup_disagreement(profile, blocs)

    outcomes, seconds = {}, {}
    for rule in cfg.rules:
        if rule in known:
            outcomes[rule], seconds[rule] = known[rule]
            continue
        t0 = time.perf_counter()
        outcomes[rule] = compute(rule, profile, k, tie, cfg.mes_completion, cfg.cc_tie)
        seconds[rule] = time.perf_counter() - t0
    if RuleName.CC in outcomes:
        max_coverage = int(outcomes[RuleName.CC].score)
    else:
        max_coverage = cc_max_coverage(profile, k)

    records = []
    for rule in cfg.rules:
        W = outcomes[rule].committee
        ur = utilitarian_ratio(U, W, k, optimum=optimum)
        rr = representation_ratio(profile, W, k, max_coverage=max_coverage)
        ms = round((setup_seconds + seconds[rule]) * 1000) if cfg.record_timing else 0
        records.append(RunRecord(
            replication=replication, strategy=strategy, rule=rule.value,
            ur=ur, rr=rr, uragg=uragg(ur, rr), vs=voter_satisfaction(profile, W),
            ejr=satisfies_ejr(profile, W, k).satisfied,
            pjr=satisfies_pjr(profile, W, k).satisfied,
            minority_preserved=minority_preservation(minority_set, W),
            variance=variance, disagreement=disagreement, attempts=attempts, ms=ms,
            committee=sorted(W), q=list(outcomes[rule].diagnostics.get("q", [])),
            approvals=committee_approval_profile(profile, W),
        ))
    return records


def deliberate(cfg: ExperimentConfig, replication: int, strategy: Strategy,
               initial: Population) -> Tuple[Population, ApprovalProfile]:
    """Deliberate on a clone of the initial population and rebuild its ballots."""
    rng = stream(cfg.master_seed, replication, f"schedule:{strategy.value}")
    population, _ = run_deliberation(initial.clone(), strategy, cfg.g, cfg.rounds, rng,
                                     cfg.speech_mode, cfg.golfer_swap_passes)
    for agent in population:
        agent.ranking = rerank_from_utilities(agent)
    return population, ApprovalProfile(population.ballots(), cfg.population.m)


def run_replication(cfg: ExperimentConfig, replication: int) -> List[RunRecord]:
    tie = make_tiebreaker(cfg, replication)
    initial, profile, attempts, check = _eligible_instance(cfg, replication, tie)
    minority_set = minority_supported_candidates(profile, initial.blocs(), cfg.minority_rule)

    records = _evaluate(cfg, replication, INITIAL, initial, profile, tie, minority_set, attempts,
                        known={RuleName.CC: (check.cc, check.cc_seconds)})
    for strategy in cfg.strategies:
        t0 = time.perf_counter()
        population, after = deliberate(cfg, replication, strategy, initial)
        records.extend(_evaluate(cfg, replication, strategy.value, population, after, tie,
                                 minority_set, attempts, time.perf_counter() - t0))
    return records


def run_replications(cfg: ExperimentConfig) -> List[RunRecord]:
    cfg.validate()
    total = cfg.replications
    step = max(1, total // 10)
    results: List[List[RunRecord]] = []

    def progress(done: int):
        if done % step == 0 or done == total:
            logger.info("replications: %d/%d", done, total)

    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(run_replication, cfg, r) for r in range(total)]
            for done, future in enumerate(futures, start=1):
                results.append(future.result())
                progress(done)
    else:
        for r in range(total):
            results.append(run_replication(cfg, r))
            progress(r + 1)
    return canonical_sort(record for batch in results for record in batch)


# ── Aggregation ──────────────────────────────────────────────

@dataclass
class Summary:
    mean: float
    stderr: float
    count: int

    def to_dict(self) -> Dict:
        return {"mean": self.mean, "stderr": self.stderr, "count": self.count}


def summarize(values: Sequence[float]) -> Summary:
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return Summary(float("nan"), float("nan"), 0)
    stderr = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return Summary(float(x.mean()), stderr, int(x.size))


def objective_value(record: RunRecord, objective: str) -> float:
    return float(getattr(record, objective))


@dataclass
class AggregateReport:
    replications: int
    total_attempts: int
    # keyed (strategy, rule) then objective
    cells: Dict[Tuple[str, str], Dict[str, Summary]] = field(default_factory=dict)
    # keyed rule, objective, (strategy_a, strategy_b); None when data is insufficient
    significance: Dict[str, Dict[str, Dict[Tuple[str, str], Optional[PairedTestResult]]]] = \
        field(default_factory=dict)
    significance_status: str = "ok"
    config: Dict = field(default_factory=dict)

    @property
    def acceptance_rate(self) -> float:
        return self.replications / self.total_attempts if self.total_attempts else float("nan")

    def mean(self, strategy: str, rule: str, objective: str) -> float:
        return self.cells[(strategy, rule)][objective].mean

    def to_dict(self) -> Dict:
        significance = {}
        for rule, by_objective in self.significance.items():
            significance[rule] = {}
            for objective, pairs in by_objective.items():
                significance[rule][objective] = {
                    f"{a}|{b}": (None if res is None else {
                        "t": _finite(res.t_statistic), "t_p": res.t_pvalue,
                        "w": res.wilcoxon_statistic, "w_p": res.wilcoxon_pvalue,
                        "t_degenerate": res.t_degenerate,
                        "wilcoxon_degenerate": res.wilcoxon_degenerate,
                    })
                    for (a, b), res in pairs.items()
                }
        return {
            "replications": self.replications,
            "total_attempts": self.total_attempts,
            "acceptance_rate": self.acceptance_rate,
            "config": self.config,
            "cells": {f"{s}|{r}": {o: summ.to_dict() for o, summ in objectives.items()}
                      for (s, r), objectives in self.cells.items()},
            "significance_status": self.significance_status,
            "significance": significance,
        }


def _finite(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def present_strategies(records: Sequence[RunRecord]) -> List[str]:
    names = {r.strategy for r in records}
    ordered = [s for s in STRATEGY_ORDER if s in names]
    return ordered + sorted(names - set(ordered))


def present_rules(records: Sequence[RunRecord]) -> List[str]:
    names = {r.rule for r in records}
    ordered = [r.value for r in RuleName if r.value in names]
    return ordered + sorted(names - set(ordered))


def group_cells(records: Sequence[RunRecord]) -> Dict[Tuple[str, str], List[RunRecord]]:
    by_cell: Dict[Tuple[str, str], List[RunRecord]] = {}
    for record in records:
        by_cell.setdefault((record.strategy, record.rule), []).append(record)
    return by_cell


def summarize_cells(by_cell: Dict[Tuple[str, str], List[RunRecord]]) -> Dict[Tuple[str, str], Dict[str, Summary]]:
    return {cell: {o: summarize([objective_value(r, o) for r in rows]) for o in OBJECTIVES}
            for cell, rows in by_cell.items()}


def aggregate(records: Sequence[RunRecord], config: Optional[Dict] = None) -> AggregateReport:
    records = canonical_sort(records)
    replications = sorted({r.replication for r in records})
    attempts = {r.replication: r.attempts for r in records}
    report = AggregateReport(len(replications), sum(attempts.values()), config=config or {})

    by_cell = group_cells(records)
    report.cells = summarize_cells(by_cell)

    strategies = present_strategies(records)
    sufficient = len(replications) >= MIN_PAIRED_SAMPLES
    if not sufficient:
        report.significance_status = INSUFFICIENT_DATA
    for rule in present_rules(records):
        report.significance[rule] = {}
        for objective in TESTED_OBJECTIVES:
            pairs = {}
            for a, b in combinations(strategies, 2):
                rows_a = {r.replication: objective_value(r, objective) for r in by_cell.get((a, rule), [])}
                rows_b = {r.replication: objective_value(r, objective) for r in by_cell.get((b, rule), [])}
                shared = sorted(set(rows_a) & set(rows_b))
                if not sufficient or len(shared) < MIN_PAIRED_SAMPLES:
                    pairs[(a, b)] = None
                    continue
                pairs[(a, b)] = paired_tests([rows_a[i] for i in shared], [rows_b[i] for i in shared])
            report.significance[rule][objective] = pairs
    return report


def write_report(report: AggregateReport, path: str) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("wrote aggregate report to %s", path)
    return path


@dataclass
class ExperimentResult:
    records: List[RunRecord]
    report: AggregateReport
    records_path: Optional[str] = None
    report_path: Optional[str] = None


def run_experiment(cfg: ExperimentConfig, persist: bool = True) -> ExperimentResult:
    """Run, aggregate and (unless persist is False) write records.csv/.jsonl and report.json."""
    records = run_replications(cfg)
    report = aggregate(records, cfg.to_dict())
    logger.info("eligibility acceptance rate: %.4f (%d replications, %d attempts)",
                report.acceptance_rate, report.replications, report.total_attempts)
    result = ExperimentResult(records, report)
    if persist:
        try:
            result.records_path = persist_records(records, os.path.join(cfg.out_dir, "records.csv"))
            result.report_path = write_report(report, os.path.join(cfg.out_dir, "report.json"))
        except OSError as err:
            raise OSError(err.errno, f"cannot write results to {cfg.out_dir}: {err.strerror}") from err
    return result

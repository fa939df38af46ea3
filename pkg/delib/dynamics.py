"""
Delib Dynamics — Bounded-Confidence Deliberation
==================================================

Agents deliberate in groups. In a round every group member speaks
once, in a fresh uniformly random order; after each speech every other
member of the group updates each candidate utility independently:

  u_l <- (1 - w) * u_l + w * u_s    if |u_l - u_s| <= delta_l
  u_l unchanged                      otherwise

w is the listener's alpha for a same-bloc speaker and its beta for a
speaker from the other bloc. Updates take effect immediately, so later
speakers report already-updated utilities (speech_mode = immediate);
the batched mode has every speaker report its round-start utilities.

Single-round strategies run one round on one plan; iterative
strategies draw a new plan each round and track who has met whom.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from delib.grouping import GroupPlan, MeetingCounts, make_groups, update_meetings
from delib.metrics import utility_variance
from delib.population import Agent, Population
from delib.types import Bloc, InvalidInputError, SpeechMode, Strategy


@dataclass
class SpeakerSchedule:
    """Per round: the plan and each group's speaker order."""
    rounds: List[Tuple[GroupPlan, List[Tuple[int, ...]]]] = field(default_factory=list)


@dataclass
class DeliberationTrace:
    """Population utility variance before deliberation and after every round."""
    variances: List[float] = field(default_factory=list)
    schedule: SpeakerSchedule = field(default_factory=SpeakerSchedule)


def influence_weight(listener: Agent, speaker: Agent) -> float:
    if listener.id == speaker.id:
        raise InvalidInputError(f"agent {listener.id} cannot listen to itself")
    return listener.alpha if listener.bloc is speaker.bloc else listener.beta


def bc_update(listener: Agent, speaker_utilities: np.ndarray, w: float, delta: float) -> np.ndarray:
    """Return the listener's utilities after hearing one report."""
    if not 0.0 <= w <= 1.0:
        raise InvalidInputError(f"influence weight must lie in [0, 1], got {w}")
    if not 0.0 <= delta <= 1.0:
        raise InvalidInputError(f"confidence bound must lie in [0, 1], got {delta}")
    own = listener.utilities
    report = np.asarray(speaker_utilities, dtype=float)
    moved = np.clip((1.0 - w) * own + w * report, 0.0, 1.0)
    return np.where(np.abs(own - report) <= delta, moved, own)


def speaker_order(group: Sequence[int], rng: np.random.Generator) -> Tuple[int, ...]:
    if len(set(group)) != len(group):
        raise InvalidInputError("group contains duplicate agent ids")
    return tuple(int(i) for i in rng.permutation(np.asarray(group, dtype=np.int64)))


def run_speeches(order: Sequence[int], population: Population,
                 mode: SpeechMode = SpeechMode.IMMEDIATE) -> Population:
    """Let the agents in `order` speak in turn; only they are touched."""
    if len(set(order)) != len(order):
        raise InvalidInputError("group contains duplicate agent ids")
    if len(order) < 2:
        return population
    agents = [population[i] for i in order]
    U = np.vstack([a.utilities for a in agents])
    alpha = np.array([a.alpha for a in agents])
    beta = np.array([a.beta for a in agents])
    delta = np.array([a.delta for a in agents])[:, None]
    minority = np.array([a.bloc is Bloc.MINORITY for a in agents])
    start = U.copy() if mode is SpeechMode.BATCHED else None

    everyone = np.arange(len(agents))
    for s in everyone:
        report = start[s] if start is not None else U[s].copy()
        listeners = everyone != s
        w = np.where(minority == minority[s], alpha, beta)[listeners][:, None]
        own = U[listeners]
        moved = np.clip((1.0 - w) * own + w * report, 0.0, 1.0)
        U[listeners] = np.where(np.abs(own - report) <= delta[listeners], moved, own)

    for row, agent in enumerate(agents):
        agent.utilities = U[row].copy()
    return population


def run_group_round(group: Sequence[int], population: Population, rng: np.random.Generator,
                    mode: SpeechMode = SpeechMode.IMMEDIATE) -> Population:
    if not group:
        raise InvalidInputError("group must be nonempty")
    return run_speeches(speaker_order(group, rng), population, mode)


def run_deliberation(population: Population, strategy: Strategy, g: int, R: int,
                     rng: np.random.Generator, mode: SpeechMode = SpeechMode.IMMEDIATE,
                     swap_passes: int = 50) -> Tuple[Population, DeliberationTrace]:
    """Deliberate in place; utilities are final once this returns."""
    if R < 0:
        raise InvalidInputError(f"round count must be >= 0, got {R}")
    rounds = R if strategy.iterative else min(R, 1)
    trace = DeliberationTrace([utility_variance(population)])
    counts = MeetingCounts(len(population))
    plan = None
    for _ in range(rounds):
        if plan is None or strategy.iterative:
            plan = make_groups(strategy, population, g, counts, rng, swap_passes)
        orders = []
        for group in plan.groups:
            order = speaker_order(group, rng)
            run_speeches(order, population, mode)
            orders.append(order)
        counts = update_meetings(counts, plan)
        trace.schedule.rounds.append((plan, orders))
        trace.variances.append(utility_variance(population))
    return population, trace

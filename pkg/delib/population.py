"""
Delib Population — Synthetic Two-Bloc Voters
==============================================

Generates the agent population of one replication:

  - Mallows rankings around a per-bloc reference ranking
    (repeated-insertion sampler, exact for every phi in [0, 1])
  - cardinal utilities consistent with each ranking
  - bounded-confidence parameters (delta, alpha >= beta)
  - ballot sizes drawn around twice the committee size

Ballots are always prefixes of an agent's *current* ranking; after
deliberation the ranking is rebuilt from the evolved utilities with a
stable tie rule (`rerank_from_utilities`).

Rankings are tuples of candidate ids, most preferred first.
Utilities are float arrays indexed by candidate id.
"""

import math
from dataclasses import dataclass, field
from typing import Hashable, List, Sequence, Tuple

import numpy as np
from scipy.stats import truncnorm

from delib.types import Bloc, ConfigError, InvalidInputError, ParamSampling

Ranking = Tuple[int, ...]

NORMAL_MEAN = 0.5
NORMAL_STD = 0.15


@dataclass
class Agent:
    """A voter that deliberates and then votes."""
    id: int
    bloc: Bloc
    ranking: Ranking
    utilities: np.ndarray
    delta: float
    alpha: float
    beta: float
    ballot_size: int

    def __post_init__(self):
        if self.beta > self.alpha:
            raise InvalidInputError(f"agent {self.id}: beta={self.beta} exceeds alpha={self.alpha}")
        if not 1 <= self.ballot_size <= len(self.ranking):
            raise InvalidInputError(f"agent {self.id}: ballot size {self.ballot_size} outside [1, m]")

    def clone(self) -> "Agent":
        return Agent(
            id=self.id, bloc=self.bloc, ranking=tuple(self.ranking),
            utilities=self.utilities.copy(), delta=self.delta,
            alpha=self.alpha, beta=self.beta, ballot_size=self.ballot_size,
        )

    def __repr__(self):
        return (f"<Agent:{self.id} {self.bloc.value} b={self.ballot_size} "
                f"delta={self.delta:.2f} alpha={self.alpha:.2f} beta={self.beta:.2f}>")


@dataclass
class PopulationConfig:
    """Shape of the synthetic electorate (defaults follow the published setup)."""
    n_maj: int = 80
    n_min: int = 20
    m: int = 50
    phi: float = 0.2
    k: int = 5
    param_sampling: ParamSampling = ParamSampling.UNIFORM

    @property
    def n(self) -> int:
        return self.n_maj + self.n_min

    def validate(self) -> "PopulationConfig":
        if not self.n_maj > self.n_min > 0:
            raise ConfigError(f"need n_maj > n_min > 0, got n_maj={self.n_maj}, n_min={self.n_min}")
        if not 0.0 <= self.phi <= 1.0:
            raise ConfigError(f"phi must lie in [0, 1], got {self.phi}")
        if not 1 <= self.k <= self.m:
            raise ConfigError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")
        if not isinstance(self.param_sampling, ParamSampling):
            raise ConfigError(f"unknown param_sampling {self.param_sampling!r}")
        return self


@dataclass
class Population:
    """Agents of one replication plus the two reference rankings."""
    agents: List[Agent]
    reference_maj: Ranking
    reference_min: Ranking
    m: int = field(default=0)

    def __post_init__(self):
        if not self.m and self.agents:
            self.m = len(self.agents[0].ranking)

    def clone(self) -> "Population":
        return Population([a.clone() for a in self.agents],
                          self.reference_maj, self.reference_min, self.m)

    def __len__(self):
        return len(self.agents)

    def __iter__(self):
        return iter(self.agents)

    def __getitem__(self, idx: int) -> Agent:
        return self.agents[idx]

    def utility_matrix(self) -> np.ndarray:
        """Stacked utilities, shape (n, m)."""
        return np.vstack([a.utilities for a in self.agents])

    def blocs(self) -> List[Bloc]:
        return [a.bloc for a in self.agents]

    def ballots(self) -> List[frozenset]:
        return [derive_ballot(a) for a in self.agents]


# ── Rankings ─────────────────────────────────────────────────

def kendall_tau(r1: Sequence[Hashable], r2: Sequence[Hashable]) -> int:
    """Number of candidate pairs the two rankings order differently."""
    if len(r1) != len(r2):
        raise InvalidInputError(f"rankings differ in length ({len(r1)} vs {len(r2)})")
    pos2 = {c: i for i, c in enumerate(r2)}
    if len(pos2) != len(r2) or set(r1) != set(pos2):
        raise InvalidInputError("rankings are not permutations of the same candidate set")
    seq = np.fromiter((pos2[c] for c in r1), dtype=np.int64, count=len(r1))
    # pairs i < j with seq[i] > seq[j]
    return int(np.triu(seq[:, None] > seq[None, :], k=1).sum())


def sample_mallows(reference: Sequence[int], phi: float, rng: np.random.Generator) -> Ranking:
    """
    Draw a ranking with probability phi^d(r, reference) / Z.

    Repeated insertion: the i-th reference item (1-indexed) goes to
    position j <= i with probability phi^(i-j) / (1 + phi + ... + phi^(i-1)).
    """
    if not 0.0 <= phi <= 1.0:
        raise InvalidInputError(f"phi must lie in [0, 1], got {phi}")
    out: List[int] = []
    for i, item in enumerate(reference, start=1):
        weights = np.power(phi, np.arange(i - 1, -1, -1, dtype=float))
        pos = int(rng.choice(i, p=weights / weights.sum()))
        out.insert(pos, int(item))
    return tuple(out)


def assign_utilities(ranking: Sequence[int], draws: Sequence[float]) -> np.ndarray:
    """Map draws, sorted descending, onto candidates in ranking order."""
    if len(ranking) != len(draws):
        raise InvalidInputError("need one draw per candidate")
    u = np.empty(len(ranking), dtype=float)
    u[np.asarray(ranking, dtype=np.int64)] = np.sort(np.asarray(draws, dtype=float))[::-1]
    return u


def generate_utilities(ranking: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    return assign_utilities(ranking, rng.random(len(ranking)))


def round_ballot_size(x: float, m: int) -> int:
    """Round half up, then clamp to [1, m]."""
    return int(min(max(math.floor(x + 0.5), 1), m))


def sample_ballot_size(k: int, m: int, rng: np.random.Generator) -> int:
    return round_ballot_size(rng.normal(2 * k, 1.0), m)


def derive_ballot(agent: Agent) -> frozenset:
    """The agent's ballot_size most-preferred candidates."""
    return frozenset(agent.ranking[:agent.ballot_size])


def rerank_from_utilities(agent: Agent) -> Ranking:
    """Sort by utility, descending; exact ties keep the previous ranking order."""
    u = agent.utilities
    return tuple(sorted(agent.ranking, key=lambda c: -u[c]))


# ── Parameters ───────────────────────────────────────────────

def _truncated_normal(lo: float, hi: float, mean: float, std: float,
                      rng: np.random.Generator) -> float:
    if hi <= lo or std <= 0.0:
        return lo
    a, b = (lo - mean) / std, (hi - mean) / std
    return float(truncnorm.rvs(a, b, loc=mean, scale=std, random_state=rng))


def sample_bc_params(sampling: ParamSampling, rng: np.random.Generator) -> Tuple[float, float, float]:
    """Return (delta, alpha, beta) with alpha >= beta, all in [0, 1]."""
    if sampling is ParamSampling.NORMAL:
        delta = _truncated_normal(0.0, 1.0, NORMAL_MEAN, NORMAL_STD, rng)
        alpha = _truncated_normal(0.0, 1.0, NORMAL_MEAN, NORMAL_STD, rng)
        beta = _truncated_normal(0.0, alpha, NORMAL_MEAN * alpha, NORMAL_STD * alpha, rng)
        return delta, alpha, min(beta, alpha)
    delta = float(rng.uniform(0.0, 1.0))
    alpha = float(rng.uniform(0.0, 1.0))
    beta = float(rng.uniform(0.0, alpha)) if alpha > 0.0 else 0.0
    return delta, alpha, beta


def init_population(cfg: PopulationConfig, rng: np.random.Generator) -> Population:
    """Build n_maj majority agents (ids first) followed by n_min minority agents."""
    cfg.validate()
    reference_maj = tuple(int(c) for c in rng.permutation(cfg.m))
    reference_min = tuple(int(c) for c in rng.permutation(cfg.m))

    agents = []
    blocs = [Bloc.MAJORITY] * cfg.n_maj + [Bloc.MINORITY] * cfg.n_min
    for agent_id, bloc in enumerate(blocs):
        reference = reference_maj if bloc is Bloc.MAJORITY else reference_min
        ranking = sample_mallows(reference, cfg.phi, rng)
        utilities = generate_utilities(ranking, rng)
        delta, alpha, beta = sample_bc_params(cfg.param_sampling, rng)
        agents.append(Agent(
            id=agent_id, bloc=bloc, ranking=ranking, utilities=utilities,
            delta=delta, alpha=alpha, beta=beta,
            ballot_size=sample_ballot_size(cfg.k, cfg.m, rng),
        ))
    return Population(agents, reference_maj, reference_min, cfg.m)

"""
Delib Shared Types
===================

Enumerations and base errors shared by every simulator module:
voter blocs, group-formation strategies, voting rules and the
policy switches exposed through the experiment config.

The strategy and rule values double as the identifiers written to
record files, config files and the command line.
"""

from enum import Enum


class DelibError(Exception):
    """Base class for every error raised by the simulator."""
    pass


class InvalidInputError(DelibError, ValueError):
    """Raised when an operation receives arguments outside its domain."""
    pass


class ConfigError(DelibError):
    """Raised when a population or experiment configuration is invalid."""
    pass


class Bloc(Enum):
    """Public group membership of an agent."""
    MAJORITY = "majority"
    MINORITY = "minority"


class Strategy(Enum):
    """How agents are divided into deliberation groups."""
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"
    RANDOM = "random"
    LARGE = "large"
    ITER_RANDOM = "iter_random"
    ITER_GOLFER = "iter_golfer"

    @property
    def iterative(self) -> bool:
        return self in (Strategy.ITER_RANDOM, Strategy.ITER_GOLFER)

    @property
    def label(self) -> str:
        return STRATEGY_LABELS[self.value]


# Pseudo-strategy for the pre-deliberation baseline.
INITIAL = "initial"

STRATEGY_LABELS = {
    INITIAL: "Initial",
    "homogeneous": "Homogeneous",
    "heterogeneous": "Heterogeneous",
    "random": "Random",
    "large": "Large Group",
    "iter_random": "Iterative Random",
    "iter_golfer": "Iterative Golfer",
}

# Display order used by reports and plots.
STRATEGY_ORDER = [INITIAL, "homogeneous", "random", "heterogeneous",
                  "iter_random", "iter_golfer", "large"]


class RuleName(Enum):
    """Approval-based multi-winner voting rules under study."""
    AV = "av"
    CC = "cc"
    PAV = "pav"
    MES = "mes"

    @property
    def label(self) -> str:
        return self.value.upper()


class ParamSampling(Enum):
    """Distribution family for the bounded-confidence parameters."""
    UNIFORM = "uniform"
    NORMAL = "normal"


class MesCompletion(Enum):
    """How MES fills seats left open once no candidate is affordable."""
    AV = "av"
    SEQ_PRIORITY = "seq-priority"


class CcTie(Enum):
    """Secondary order among coverage-optimal CC committees."""
    AV = "av"                # higher AV score, then priority
    PRIORITY = "priority"    # priority only


class TiePolicy(Enum):
    """Where the per-replication candidate priority comes from."""
    RANDOM = "random"        # seeded permutation from the tiebreak stream
    IDENTITY = "identity"    # candidate ids in ascending order


class MinorityRule(Enum):
    """Comparison used to call a candidate minority-supported."""
    STRICT = "strict"   # V_min/n_min >  V_maj/n_maj
    WEAK = "weak"       # V_min/n_min >= V_maj/n_maj


class SpeechMode(Enum):
    """Whether speakers report live or round-start utilities."""
    IMMEDIATE = "immediate"
    BATCHED = "batched"


def parse_strategy(name: str) -> Strategy:
    """Resolve a strategy identifier, accepting dashes for underscores."""
    try:
        return Strategy(name.strip().lower().replace("-", "_"))
    except ValueError:
        valid = ", ".join(s.value for s in Strategy)
        raise InvalidInputError(f"unknown strategy '{name}' (expected one of: {valid})")


def parse_rule(name: str) -> RuleName:
    try:
        return RuleName(name.strip().lower())
    except ValueError:
        valid = ", ".join(r.value for r in RuleName)
        raise InvalidInputError(f"unknown rule '{name}' (expected one of: {valid})")

"""
Delib Random Streams
=====================

Counter-based, splittable random streams keyed by
(master seed, replication index, phase tag).

Every phase of a replication draws from its own Philox stream, so
switching a strategy on or off never shifts the draws of another
phase. Phase tags are plain strings:

  population:<attempt>      -- one per eligibility attempt
  tiebreak                  -- candidate priority for the replication
  schedule:<strategy>       -- grouping and speaker order of a strategy
"""

import hashlib

import numpy as np

from delib.types import InvalidInputError

_MAX_SEED = 2 ** 64


def phase_key(phase: str) -> int:
    """Stable 64-bit key for a phase tag (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(phase.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, replication: int, phase: str) -> np.random.Generator:
    """Return the generator for one (seed, replication, phase) triple."""
    if not 0 <= master_seed < _MAX_SEED:
        raise InvalidInputError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    if replication < 0:
        raise InvalidInputError(f"replication index must be >= 0, got {replication}")
    seq = np.random.SeedSequence(entropy=master_seed,
                                 spawn_key=(replication, phase_key(phase)))
    return np.random.Generator(np.random.Philox(seq))

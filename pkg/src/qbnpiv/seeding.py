"""Deterministic derivation of per-replication seeds.

Every study is a pure function of (config, master seed).  Replication seeds
come from ``SeedSequence((master, *indices))`` where the indices identify
the grid cell and replication counter, so parallel replications use
disjoint, reproducible streams.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_seed"]


def derive_seed(master: int, *indices: int) -> int:
    """A stable 64-bit seed for the replication identified by ``indices``."""
    state = np.random.SeedSequence((int(master),) + tuple(int(i) for i in indices)).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)

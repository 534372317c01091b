"""Session fixtures: the shared random-instance family and its oracle answers."""

from __future__ import annotations

import numpy as np
import pytest

from compseq import ConstraintSet, oracle_compressed_distribution, table_forward
from helpers import random_instance, uniform_model

FAMILY_SEED = 20260822
REPS_PER_CELL = 17  # 2 state counts x 6 lengths x 17 = 204 instances


@pytest.fixture(scope="session")
def instance_family():
    """204 random instances with M in {2,3}, T in 2..7, weights U[-2,2]."""
    rng = np.random.default_rng(FAMILY_SEED)
    instances = []
    for m in (2, 3):
        for t in range(2, 8):
            for _ in range(REPS_PER_CELL):
                instances.append(random_instance(rng, m, t))
    return instances


@pytest.fixture(scope="session")
def oracle_family(instance_family):
    """The same instances paired with their enumerated collapsed posteriors."""
    out = []
    for model, obs in instance_family:
        dist = oracle_compressed_distribution(model, obs)
        out.append((model, obs, dist))
    return out


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger kernel compilation once so timed tests measure only the math."""
    model = uniform_model(2, 2)
    obs = np.zeros(3, dtype=np.int64)
    table_forward(model, obs, ConstraintSet.full_table(2, 2))
    from compseq.compressed import _final_slices

    masks = np.ones((2, 2, 2), dtype=np.bool_)
    _final_slices(model, obs, masks)
    return True

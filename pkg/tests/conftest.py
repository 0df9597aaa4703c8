import numpy as np
import pytest

import hksim


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jitted kernels once so timed tests measure runtime only."""
    state = hksim.OpinionState(np.array([0.0, 0.5, 1.0]))
    hksim.step(state)
    hksim.step_naive(state)
    hksim.is_fixed_point(state)
    hksim.run_to_fixed_point(state)


def random_state(rng, max_n=200, span=6.0, weighted=True):
    n = int(rng.integers(1, max_n + 1))
    x = np.sort(rng.uniform(0.0, span, n))
    w = rng.uniform(0.1, 3.0, n) if weighted else None
    return hksim.OpinionState(x, w)

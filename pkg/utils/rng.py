"""
Reproducible random streams
"""

import numpy as np


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, *keys); same inputs give the same stream"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


# Stream identifiers for the pipeline stages
STREAM_SIMULATE = 1
STREAM_MASK = 2
STREAM_SPLIT = 3
STREAM_IMPUTE = 5
STREAM_PREDICT = 6

"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
(seed, context, purpose), where context is a rung index (0 = run level)
and purpose says what the stream feeds.  Streams are independent, so a
sampler's draws for one purpose do not shift another's, and runs are
reproducible for a fixed seed regardless of how work is scheduled.
"""

import numpy as np

PRIOR = 0      # prior draws (initial ensembles, replica-exchange rung 1)
RESAMPLE = 1   # weighted resampling picks
CHAIN = 2      # Metropolis proposals and acceptance uniforms
EXCHANGE = 3   # partner shuffles and exchange acceptance uniforms
PILOT = 4      # pilot step-size tuning and ladder pilots
DATA = 5       # synthetic dataset generation


def stream(seed: int, context: int, purpose: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence((seed, context, purpose)))
    )

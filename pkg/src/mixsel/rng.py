"""Named random sub-streams derived from one master seed."""

import numpy as np

STREAMS = {
    "init": 0,
    "shuffle": 1,
    "lambda": 2,
    "partner": 3,
    "box": 4,
    "data": 5,
    "subsample": 6,
}


def stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, name, *keys)``.

    Adding a new consumer never shifts the draws of an existing one, since
    each stream is seeded from its own entropy tuple.
    """
    return np.random.default_rng([int(seed), STREAMS[name], *(int(k) for k in keys)])

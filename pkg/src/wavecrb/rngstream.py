"""Counter-based random streams.

Every stochastic operation in the library draws from a Philox generator
keyed by ``(master seed, domain tag, stream index)``. Streams are therefore
independent of execution order and thread schedule: the same key always
produces the same draws, which is what makes Monte Carlo results bitwise
reproducible and symbol streams pairable across waveforms.
"""
import numpy as np

# Domain tags occupy the top byte of the second key word so that symbol
# streams (indexed by trial) can never collide with other uses of a seed.
DOMAIN_SYMBOLS = 0
DOMAIN_SCENARIO = 1
DOMAIN_DIRECTION = 2
DOMAIN_BULK = 3
DOMAIN_BASIS = 4

_INDEX_BITS = 56


def stream(seed: int, domain: int, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, domain, index) stream."""
    if index < 0 or index >= (1 << _INDEX_BITS):
        raise ValueError(f"stream index out of range: {index}")
    key = np.array(
        [np.uint64(seed % (1 << 64)), np.uint64((domain << _INDEX_BITS) | index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))

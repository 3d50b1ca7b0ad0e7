import numpy as _np


def random_engine(seed, stream=0):
    """
    Returns a counter-based random generator for the stream `stream` of the
    master seed `seed`.

    Streams with different indices are statistically independent and the
    generator of a given `(seed, stream)` pair is always the same, no matter
    in which order streams are created.

    Args:
        seed: Non-negative master seed (64-bit).
        stream: Non-negative stream index, e.g. a trajectory number, or a
            tuple of indices for a nested family of streams.

    Examples:
        Two generators of the same stream produce identical draws.

        ```python
        >>> from lindket.utils import random_engine
        >>> a = random_engine(1234, stream=7).random()
        >>> b = random_engine(1234, stream=7).random()
        >>> a == b
        True
        ```
    """
    if isinstance(stream, tuple):
        key = tuple(int(s) for s in stream)
    else:
        key = (int(stream),)
    sequence = _np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return _np.random.Generator(_np.random.Philox(sequence))


def complex_gaussian(rng, shape):
    """Draws a complex array with independent standard normal real and
    imaginary parts."""
    return rng.standard_normal(shape) + 1.0j * rng.standard_normal(shape)

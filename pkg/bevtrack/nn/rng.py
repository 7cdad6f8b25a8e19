import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """
    Named 64-bit random stream.

    Streams with different names are independent; the same (seed, name)
    always yields the same sequence.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, zlib.crc32(name.encode("utf-8"))])))


def uniform_init(seed: int, name: str, shape, fan_in: int, scale: float = 1.0) -> np.ndarray:
    """Uniform(-scale/sqrt(fan_in), +scale/sqrt(fan_in)) drawn from the stream `name`."""
    bound = scale / np.sqrt(fan_in)
    return stream(seed, name).uniform(-bound, bound, size=shape)

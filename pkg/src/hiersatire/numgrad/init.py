import numpy as np


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def small_uniform(rng: np.random.Generator, shape, scale: float = 0.05) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)

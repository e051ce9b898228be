"""
ANASTAARS Stochastic Oracle Module
Noisy objective abstraction, shot-averaged estimates and synthetic test oracles
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class Estimate:
    """Shot-averaged objective value at one point"""
    mean: float
    std: float       # sample standard deviation, 0 when shots == 1
    shots: int
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_samples(cls, samples: np.ndarray, keep_samples: bool = True) -> 'Estimate':
        samples = np.asarray(samples, dtype=float)
        shots = samples.size
        if shots < 1:
            raise ValueError("An estimate needs at least one shot")
        mean = float(np.mean(samples))
        std = float(np.std(samples, ddof=1)) if shots > 1 else 0.0
        return cls(mean=mean, std=std, shots=shots, samples=samples if keep_samples else None)


class StochasticOracle(ABC):
    """A noisy function f_theta(x) whose expectation is the objective.

    `shots_consumed` counts every per-shot sample drawn, so callers can
    audit their shot accounting.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.shots_consumed = 0

    def sample(self, x: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Return `shots` independent realizations of f_theta(x)"""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"Oracle expects a point in R^{self.dim}, got shape {x.shape}")
        if shots < 1:
            raise ValueError(f"Shot count must be at least 1, got {shots}")
        values = self._draw(x, shots, rng)
        self.shots_consumed += shots
        return values

    @abstractmethod
    def _draw(self, x: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
        ...

    def true_value(self, x: np.ndarray) -> Optional[float]:
        """Exact expectation, for diagnostics only; None when unknown"""
        return None


def estimate_at(oracle: StochasticOracle,
                x: np.ndarray,
                shots: int,
                rng: np.random.Generator,
                keep_samples: bool = True) -> Estimate:
    """Average `shots` oracle samples at x"""
    return Estimate.from_samples(oracle.sample(x, shots, rng), keep_samples=keep_samples)


class GaussianNoiseOracle(StochasticOracle):
    """base(x) plus homoscedastic Gaussian noise"""

    def __init__(self, base: Callable[[np.ndarray], float], sigma: float, dim: int):
        if sigma < 0:
            raise ValueError(f"Noise level must be nonnegative, got sigma={sigma}")
        super().__init__(dim)
        self.base = base
        self.sigma = sigma

    def _draw(self, x, shots, rng):
        z = rng.standard_normal(shots)
        return float(self.base(x)) + self.sigma * z

    def true_value(self, x):
        return float(self.base(np.asarray(x, dtype=float)))


def gaussian_noise_oracle(base: Callable[[np.ndarray], float], sigma: float, dim: int) -> GaussianNoiseOracle:
    return GaussianNoiseOracle(base, sigma, dim)


def shifted_sphere(center: np.ndarray) -> Callable[[np.ndarray], float]:
    """f(x) = ||x - center||^2"""
    center = np.asarray(center, dtype=float)

    def f(x: np.ndarray) -> float:
        diff = np.asarray(x, dtype=float) - center
        return float(diff @ diff)

    return f

"""
SYSTEM GENERATOR MODULE
-----------------------
Generates seeded random systems for the sign configurations studied by the toolkit.

Key Features:
* Spectra: positive, decreasing, with gaps drawn from GENERATOR settings.
* Configurations: dominant-root, interlacing, qualifying-bounds and
  anomaly-exclusion sign patterns, plus convergent valuation cases.
* Reproducibility: every builder takes a numpy Generator; generate_systems
  derives it from a seed.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

import config
from modules.model import CanonicalSystem, ReducedSpectrum, Signs
from modules.spectra import eigenvalues
from modules.valuation import InitialState

logger = logging.getLogger(__name__)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_spectrum(rng: np.random.Generator, n: int) -> ReducedSpectrum:
    """lambda_n = spectrum_low, consecutive gaps uniform in [min_gap, max_gap]."""
    settings = config.GENERATOR
    gaps = rng.uniform(settings['min_gap'], settings['max_gap'], size=n - 1)
    ascending = settings['spectrum_low'] + np.concatenate([[0.0], np.cumsum(gaps)])
    return ReducedSpectrum(tuple(ascending[::-1]))


def random_signs(rng: np.random.Generator, n: int) -> Signs:
    return Signs(tuple(rng.choice([-1, 1], size=n)))


def random_system(rng: np.random.Generator, n: int,
                  omega_scale: Optional[float] = None) -> CanonicalSystem:
    """Unconstrained signs and policy; beta uniform in (0, lambda_1)."""
    scale = config.GENERATOR['omega_scale'] if omega_scale is None else omega_scale
    spectrum = random_spectrum(rng, n)
    omegas = rng.uniform(-scale, scale, size=n)
    beta = rng.uniform(0.0, spectrum.lambdas[0])
    return CanonicalSystem.from_arrays(spectrum.lambdas, random_signs(rng, n).deltas,
                                       omegas, beta)


def _magnitudes(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    return rng.uniform(0.2 * scale, scale, size=n)


def dominance_system(rng: np.random.Generator, n: int, scale: float = 1e-3) -> CanonicalSystem:
    """
    delta_1 = -1, delta_j = +1 otherwise, small positive omegas, beta < lambda_2.

    kappa_1 sits just below lambda_1, above every other root.
    """
    spectrum = random_spectrum(rng, n)
    deltas = [-1] + [1] * (n - 1)
    beta = rng.uniform(0.05, spectrum.lambdas[1] - 0.1)
    return CanonicalSystem.from_arrays(spectrum.lambdas, deltas,
                                       _magnitudes(rng, n, scale), beta)


def interlacing_system(rng: np.random.Generator, n: int, scale: float = 1e-3) -> CanonicalSystem:
    """delta_1 omega_1 < 0, delta_j omega_j > 0 for j >= 2, beta below lambda_n."""
    spectrum = random_spectrum(rng, n)
    deltas = rng.choice([-1, 1], size=n)
    signs = np.ones(n)
    signs[0] = -1.0
    omegas = deltas * signs * _magnitudes(rng, n, scale)
    beta = rng.uniform(0.05, spectrum.lambdas[-1] - 0.1)
    return CanonicalSystem.from_arrays(spectrum.lambdas, deltas, omegas, beta)


def qualifying_bounds_system(rng: np.random.Generator, n: int,
                             epsilon: float) -> CanonicalSystem:
    """delta_j omega_j >= 0, sum |omega_j| <= epsilon, beta <= lambda_n."""
    spectrum = random_spectrum(rng, n)
    deltas = rng.choice([-1, 1], size=n)
    weights = rng.dirichlet(np.ones(n)) * rng.uniform(0.1, 1.0) * epsilon
    beta = spectrum.lambdas[-1] - rng.uniform(0.0, 1.0)
    return CanonicalSystem.from_arrays(spectrum.lambdas, deltas, deltas * weights, beta)


def anomaly_excluded_system(rng: np.random.Generator, n: int,
                            omega1: float = 0.0) -> CanonicalSystem:
    """delta_1 = -1 and beta above 2 lambda_2 - lambda_1, with a nonzero first-order asymptote."""
    spectrum = random_spectrum(rng, n)
    lambdas = spectrum.lambdas
    deltas = np.append(-1, rng.choice([-1, 1], size=n - 1))
    others = deltas[1:] * _magnitudes(rng, n - 1, 0.05)
    beta = 2.0 * lambdas[1] - lambdas[0] + rng.uniform(0.2, 0.5)
    return CanonicalSystem.from_arrays(lambdas, deltas, np.append(omega1, others), beta)


def random_initial_state(rng: np.random.Generator, n: int) -> InitialState:
    return InitialState(tuple(rng.standard_normal(n)), float(rng.uniform(0.5, 1.5)))


def convergent_case(rng: np.random.Generator, n: int,
                    margin: float = 1.25) -> Tuple[CanonicalSystem, InitialState, float]:
    """A random system, initial state and a rate comfortably above |kappa_max|."""
    sys = random_system(rng, n)
    rate = margin * eigenvalues(sys).max_modulus + 0.1
    return sys, random_initial_state(rng, n), float(rate)


def generate_systems(count: int, n: int, seed: int,
                     builder: Callable[..., CanonicalSystem] = random_system,
                     **kwargs) -> List[CanonicalSystem]:
    """count systems of order n from one seeded stream."""
    rng = make_rng(seed)
    logger.debug(f"Generating {count} systems of order {n} with {builder.__name__}")
    return [builder(rng, n, **kwargs) for _ in range(count)]

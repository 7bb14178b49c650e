"""
ZERO PLACEMENT MODULE
---------------------
Inverse problem: recover the policy (omega, beta) that gives a system a
prescribed monic characteristic polynomial.

Key Responsibilities:
* Symmetric Functions: a_0..a_n of the reduced spectrum.
* Affine Solve: beta = p_0 - a_1; the remaining equations are row-reduced to
  the alternant V in -lambda_1..-lambda_n by a convolution recurrence and
  solved with the closed-form inverse of V.
* Forward Check: the placed system's coefficients are compared with the
  target and refined; failure raises IllConditioned with the residual.
* Inclusion Radius: Cauchy's bound on root moduli and the Cauchy polytope
  membership test.

Target coefficients t_0 = 1, t_1, ..., t_{n+1} relate to p_0..p_n by
t_{s+1} = (-1)^{s+1} p_s.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import optimize

import config
from modules import validator
from modules.charpoly import (Polynomial, charpoly_coeffs, leave_one_out_symmetric,
                              symmetric_functions)
from modules.model import CanonicalSystem, Policy, ReducedSpectrum, Signs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SymFuncs:
    """Elementary symmetric functions a_0..a_n of the reduced spectrum."""

    a: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'a', tuple(float(x) for x in self.a))
        if self.a[0] != 1.0:
            raise validator.ValidationError(f"a_0 must be 1, got {self.a[0]}")

    def values(self) -> np.ndarray:
        return np.array(self.a)


@dataclass(frozen=True)
class PlacementResult:
    """Placed policy with the forward-check residual."""

    policy: Policy
    residual: float
    refinements: int

    def to_dict(self):
        return {
            'omegas': list(self.policy.omegas),
            'beta': self.policy.beta,
            'residual': self.residual,
            'refinements': self.refinements,
        }


def elementary_symmetric(spectrum: ReducedSpectrum) -> SymFuncs:
    return SymFuncs(tuple(symmetric_functions(spectrum.lambdas)))


def vandermonde(spectrum: ReducedSpectrum) -> np.ndarray:
    """Alternant V with V[i][k] = (-lambda_k)^i."""
    return np.vander(-spectrum.values(), increasing=True).T


def vandermonde_inverse(spectrum: ReducedSpectrum) -> np.ndarray:
    """
    Closed-form inverse of the alternant in -lambda_1..-lambda_n.

    Entry (k, i) is a_bar_{n-1-i}(k) / prod_{l != k} (lambda_l - lambda_k),
    where a_bar_s(k) omits lambda_k from the symmetric function a_s.

    Args:
        spectrum: Distinct reduced spectrum

    Returns:
        n x n matrix
    """
    lambdas = spectrum.values()
    partial = leave_one_out_symmetric(lambdas)
    differences = lambdas[None, :] - lambdas[:, None]
    np.fill_diagonal(differences, 1.0)
    denominators = np.prod(differences, axis=1)
    return partial[::-1, :].T / denominators[:, None]


def target_p(target: Polynomial) -> np.ndarray:
    """Convert target coefficients to p_0..p_n."""
    t = target.coeffs
    s = np.arange(t.size - 1)
    return (-1.0) ** (s + 1) * t[1:]


def _solve(a: np.ndarray, p: np.ndarray, inverse: np.ndarray,
           homogeneous: bool = False) -> Tuple[float, np.ndarray]:
    """
    Solve for beta and the couplings c_j = delta_j omega_j.

    Row m of the coupled equations reads
        sum_j a_bar_m(j) c_j = a_{m+2} + beta a_{m+1} - p_{m+1},
    and a_bar_m(j) = sum_i a_{m-i} (-lambda_j)^i, so a forward recurrence in
    the a's reduces the system to V c = h. With homogeneous=True the
    spectrum-only terms are dropped (used for refinement steps).
    """
    n = a.size - 1
    padded = np.append(a, 0.0)
    if homogeneous:
        beta = p[0]
        rhs = beta * padded[1:n + 1] - p[1:]
    else:
        beta = p[0] - a[1]
        rhs = padded[2:n + 2] + beta * padded[1:n + 1] - p[1:]

    h = np.empty(n)
    for m in range(n):
        h[m] = rhs[m] - np.dot(a[m:0:-1], h[:m])
    return beta, inverse @ h


def place_zeros(spectrum: ReducedSpectrum, signs: Signs, target: Polynomial) -> PlacementResult:
    """
    Policy whose characteristic polynomial is the target.

    Args:
        spectrum: Reduced spectrum
        signs: Significance coefficients
        target: Monic real polynomial of degree n+1

    Returns:
        PlacementResult with the policy and forward-check residual

    Raises:
        IllConditioned: coefficients of the placed system miss the target
    """
    n = spectrum.n
    validator.check_monic(target.coeffs, degree=n + 1)
    tol = config.TOLERANCES['placement_residual']

    a = elementary_symmetric(spectrum).values()
    inverse = vandermonde_inverse(spectrum)
    deltas = signs.values()
    p = target_p(target)

    beta, couplings = _solve(a, p, inverse)
    residual, delta_t = _forward_check(spectrum, signs, beta, couplings, target)
    refinements = 0

    while residual > 1e-3 * tol and refinements < 3:
        delta_p = (-1.0) ** (np.arange(n + 1) + 1) * delta_t
        step_beta, step_couplings = _solve(a, delta_p, inverse, homogeneous=True)
        trial_beta, trial_couplings = beta + step_beta, couplings + step_couplings
        trial_residual, trial_delta = _forward_check(spectrum, signs, trial_beta,
                                                     trial_couplings, target)
        refinements += 1
        if not trial_residual < residual:
            break
        beta, couplings, residual, delta_t = trial_beta, trial_couplings, trial_residual, trial_delta

    if not residual <= tol:
        error_msg = (f"placement forward check failed: residual {residual:.3g} "
                     f"exceeds {tol:g}")
        logger.error(error_msg)
        raise validator.IllConditioned(error_msg, residual=residual)

    logger.debug(f"Placed zeros with residual {residual:.3g} after {refinements} refinement(s)")
    policy = Policy(tuple(couplings / deltas), beta)
    return PlacementResult(policy, float(residual), refinements)


def _forward_check(spectrum: ReducedSpectrum, signs: Signs, beta: float,
                   couplings: np.ndarray, target: Polynomial) -> Tuple[float, np.ndarray]:
    if not (np.isfinite(beta) and np.all(np.isfinite(couplings))):
        return np.inf, np.zeros(target.coeffs.size - 1)
    placed = CanonicalSystem(spectrum, signs, Policy(tuple(couplings / signs.values()), beta))
    coeffs = charpoly_coeffs(placed).coeffs
    delta_t = target.coeffs[1:] - coeffs[1:]
    residual = float(np.max(np.abs(delta_t) / (1.0 + np.abs(target.coeffs[1:]))))
    return residual, delta_t


def _inclusion_terms(p: Polynomial) -> np.ndarray:
    """|t_1|..|t_d| with trailing zeros removed (those only add roots at zero)."""
    terms = np.abs(p.coeffs[1:])
    nonzero = np.flatnonzero(terms)
    return terms[:nonzero[-1] + 1] if nonzero.size else terms[:0]


def cauchy_radius(p: Polynomial) -> float:
    """
    Cauchy inclusion radius: the unique positive root of
    r^d - |t_1| r^(d-1) - ... - |t_d|.

    The root is bracketed by [0, 1 + max|t_s|]. All roots of p have modulus
    at most this radius.
    """
    terms = _inclusion_terms(p)
    if terms.size == 0:
        return 0.0
    q = np.concatenate([[1.0], -terms])
    hi = 1.0 + float(np.max(terms))
    return float(optimize.brentq(lambda r: np.polyval(q, r), 0.0, hi,
                                 xtol=1e-15 * hi, rtol=4.0 * np.finfo(float).eps))


def in_cauchy_polytope(p: Polynomial, lambda1: float) -> bool:
    """|t_d| + |t_{d-1}| lambda_1 + ... + |t_1| lambda_1^(d-1) < lambda_1^d."""
    terms = np.abs(p.coeffs[1:])
    degree = terms.size
    powers = lambda1 ** np.arange(degree - 1, -1, -1)
    return bool(np.sum(terms * powers) < lambda1 ** degree)

"""
CHARACTERISTIC POLYNOMIAL MODULE
--------------------------------
Equivalent forms of the characteristic equation of a canonical system.

Key Responsibilities:
* Coefficients: expands chi(kappa) = det(kappa I - H) through elementary
  symmetric functions of the reduced spectrum (O(n^2), no determinants).
* Polar Forms: residuals of the partial-fraction forms with poles at the
  reduced eigenvalues, one per policy coordinate.
* Level Functions: value and first three derivatives of the function that
  maps a root kappa to the coordinate value producing it.

All evaluators are vectorized over kappa. Residuals vanish exactly at
eigenvalues and relate to chi by
    polar_j = -chi / prod_{h != j} (kappa - lambda_h)
    polar_beta = -chi / prod_h (kappa - lambda_h)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

import config
from modules import validator
from modules.model import CanonicalSystem

logger = logging.getLogger(__name__)

Scalar = Union[float, complex]


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Monic real polynomial, coefficients in degree-descending order."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        validator.check_monic(coeffs)
        object.__setattr__(self, 'coeffs', coeffs.astype(float))

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> 'Polynomial':
        """Monic polynomial with the given (conjugate-closed) roots."""
        coeffs = np.poly(np.asarray(roots))
        if np.iscomplexobj(coeffs):
            coeffs = coeffs.real
        return cls(coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return np.polyval(self.coeffs, z)

    def to_list(self):
        return self.coeffs.tolist()


def symmetric_functions(values: Sequence[float]) -> np.ndarray:
    """
    Elementary symmetric functions e_0..e_m of the given values.

    Uses the product recurrence e_s <- e_s + v * e_{s-1}, one value at a time.
    """
    values = np.asarray(values, dtype=float)
    e = np.zeros(values.size + 1)
    e[0] = 1.0
    for count, v in enumerate(values, start=1):
        e[1:count + 1] = e[1:count + 1] + v * e[:count]
    return e


def leave_one_out_symmetric(values: Sequence[float]) -> np.ndarray:
    """
    Partial symmetric functions a_bar_s(k), with the k-th value omitted.

    Returns:
        Array of shape (m, m): column k holds a_bar_0(k)..a_bar_{m-1}(k)
    """
    values = np.asarray(values, dtype=float)
    m = values.size
    table = np.empty((m, m))
    for k in range(m):
        table[:, k] = symmetric_functions(np.delete(values, k))
    return table


def _signed(e: np.ndarray) -> np.ndarray:
    """Coefficients of prod (kappa - v) from the symmetric functions of v."""
    return e * (-1.0) ** np.arange(e.size)


def charpoly_coeffs(sys: CanonicalSystem) -> Polynomial:
    """
    Monic characteristic polynomial of H(omega).

    chi = prod_j (kappa - lambda_j)(kappa - beta) - sum_j c_j prod_{h != j}(kappa - lambda_h)
    with c_j = omega_j delta_j.

    Args:
        sys: Canonical system

    Returns:
        Polynomial of degree n+1
    """
    lambdas = sys.lambdas
    product = _signed(symmetric_functions(lambdas))
    coeffs = np.convolve(product, [1.0, -sys.beta])

    partial = leave_one_out_symmetric(lambdas)
    signs = (-1.0) ** np.arange(sys.n)
    coupled = (partial * signs[:, None]) @ sys.couplings
    coeffs[2:] -= coupled
    return Polynomial(coeffs)


def _pole_guard(sys: CanonicalSystem, kappa: np.ndarray,
                exclude: Optional[int] = None) -> None:
    tol = config.TOLERANCES['pole_proximity']
    lambdas = sys.lambdas
    distance = np.abs(np.asarray(kappa)[..., None] - lambdas)
    too_close = distance < tol * (1.0 + np.abs(lambdas))
    if exclude is not None:
        too_close[..., exclude - 1] = False
    if np.any(too_close):
        poles = sorted({int(k) + 1 for k in np.nonzero(too_close)[-1]})
        error_msg = f"evaluation point within {tol:g} of pole(s) lambda_{poles}"
        logger.debug(error_msg)
        raise validator.PoleProximity(error_msg, poles=poles)


def charpoly_value(sys: CanonicalSystem, kappa):
    """
    chi(kappa) in product form, vectorized over kappa.

    Leave-one-out products come from prefix and suffix cumulative products,
    so the value stays accurate near the roots where the expanded
    coefficients cancel.
    """
    z = np.asarray(kappa, dtype=complex)
    diffs = z[..., None] - sys.lambdas
    ones = np.ones(diffs.shape[:-1] + (1,), dtype=complex)
    prefix = np.concatenate([ones, np.cumprod(diffs, axis=-1)], axis=-1)
    suffix = np.concatenate([np.cumprod(diffs[..., ::-1], axis=-1)[..., ::-1], ones], axis=-1)
    leave_one_out = prefix[..., :-1] * suffix[..., 1:]
    full = prefix[..., -1]
    value = full * (z - sys.beta) - np.sum(leave_one_out * sys.couplings, axis=-1)
    return value[()] if value.ndim == 0 else value


def eval_polar_j(sys: CanonicalSystem, kappa, j: int):
    """
    Residual of the polar form for coordinate j <= n.

    sum_h c_h - (kappa - lambda_j)(kappa - beta)
        - sum_{h != j} c_h (lambda_j - lambda_h) / (kappa - lambda_h)

    Raises:
        PoleProximity: kappa too close to lambda_h for some h != j
    """
    if not 1 <= j <= sys.n:
        raise validator.ValidationError(f"polar index must lie in 1..{sys.n}, got {j}")
    z = np.asarray(kappa, dtype=complex)
    _pole_guard(sys, z, exclude=j)
    lambdas, couplings = sys.lambdas, sys.couplings
    lam_j = lambdas[j - 1]
    others = np.arange(sys.n) != j - 1
    weights = couplings[others] * (lam_j - lambdas[others])
    pole_terms = np.sum(weights / (z[..., None] - lambdas[others]), axis=-1)
    value = np.sum(couplings) - (z - lam_j) * (z - sys.beta) - pole_terms
    return value[()] if value.ndim == 0 else value


def eval_polar_beta(sys: CanonicalSystem, kappa):
    """Residual of beta = kappa - sum_j c_j / (kappa - lambda_j)."""
    z = np.asarray(kappa, dtype=complex)
    _pole_guard(sys, z)
    pole_terms = np.sum(sys.couplings / (z[..., None] - sys.lambdas), axis=-1)
    value = sys.beta - z + pole_terms
    return value[()] if value.ndim == 0 else value


def eval_f(sys: CanonicalSystem, kappa):
    """f(kappa), with f(kappa) = -omega_1 delta_1 exactly at eigenvalues (poles lambda_2..lambda_n)."""
    return eval_polar_j(sys, kappa, 1) - sys.couplings[0]


def level_jet(sys: CanonicalSystem, kappa: Scalar,
              coordinate: int) -> Tuple[Scalar, Scalar, Scalar, Scalar]:
    """
    Level function F of a coordinate and its first three derivatives at kappa.

    F(kappa) is the value of the coordinate for which kappa is an eigenvalue,
    all other coordinates held fixed. It does not depend on the current value
    of that coordinate.

    Args:
        sys: Canonical system
        kappa: Evaluation point off the poles
        coordinate: 1..n for omega_k, n+1 for beta

    Returns:
        (F, F', F'', F''')
    """
    validator.check_coordinate(coordinate, sys.n)
    lambdas, couplings = sys.lambdas, sys.couplings
    z = complex(kappa)

    if coordinate == sys.n + 1:
        _pole_guard(sys, np.asarray(z))
        inv = 1.0 / (z - lambdas)
        value = z - np.sum(couplings * inv)
        first = 1.0 + np.sum(couplings * inv ** 2)
        second = -2.0 * np.sum(couplings * inv ** 3)
        third = 6.0 * np.sum(couplings * inv ** 4)
        return _real_if_real(kappa, (value, first, second, third))

    k = coordinate - 1
    _pole_guard(sys, np.asarray(z), exclude=coordinate)
    others = np.arange(sys.n) != k
    lam_k, beta = lambdas[k], sys.beta
    weights = couplings[others] * (lam_k - lambdas[others])
    inv = 1.0 / (z - lambdas[others])
    f = (z - lam_k) * (z - beta) - np.sum(couplings[others]) + np.sum(weights * inv)
    f1 = (2.0 * z - lam_k - beta) - np.sum(weights * inv ** 2)
    f2 = 2.0 + 2.0 * np.sum(weights * inv ** 3)
    f3 = -6.0 * np.sum(weights * inv ** 4)
    delta = sys.deltas[k]
    return _real_if_real(kappa, (delta * f, delta * f1, delta * f2, delta * f3))


def _real_if_real(kappa, values):
    if np.isrealobj(kappa) or complex(kappa).imag == 0.0:
        return tuple(float(complex(v).real) for v in values)
    return tuple(complex(v) for v in values)


def level_derivative_numerator(sys: CanonicalSystem, coordinate: int) -> np.ndarray:
    """
    Polynomial whose real roots are the stationary points of the level function.

    For omega_k this is f_k' * prod_{h != k} (kappa - lambda_h)^2; for beta it is
    prod_h (kappa - lambda_h)^2 + sum_j c_j prod_{h != j} (kappa - lambda_h)^2.
    """
    validator.check_coordinate(coordinate, sys.n)
    lambdas, couplings = sys.lambdas, sys.couplings

    if coordinate == sys.n + 1:
        full = np.poly(lambdas)
        result = np.polymul(full, full)
        for j in range(sys.n):
            partial = np.poly(np.delete(lambdas, j))
            result = np.polyadd(result, couplings[j] * np.polymul(partial, partial))
        return np.atleast_1d(result)

    k = coordinate - 1
    others = np.delete(lambdas, k)
    other_couplings = np.delete(couplings, k)
    rest = np.poly(others)
    result = np.polymul(np.polymul(rest, rest), [2.0, -(lambdas[k] + sys.beta)])
    for h, lam_h in enumerate(others):
        partial = np.poly(np.delete(others, h))
        term = other_couplings[h] * (lambdas[k] - lam_h) * np.polymul(partial, partial)
        result = np.polysub(result, term)
    return np.atleast_1d(result)

"""
SENSITIVITY MODULE
------------------
First-order derivatives of the labeled eigenvalues with respect to the policy.

Key Features:
* Closed Form: d kappa_h / d omega_k = delta_k P_k(kappa_h) / prod_{i != h}(kappa_h - kappa_i)
  and d kappa_h / d beta = P(kappa_h) / prod_{i != h}(kappa_h - kappa_i), with
  P = prod_j (kappa - lambda_j) and P_k omitting lambda_k.
* Validity Mask: rows of non-real roots are masked (reported as NaN, never zeroed).
* Finite Differences: central differences on labeled roots for verification.
* Sign Predictions: the sign patterns for the dominant root and for
  interlaced roots, checked against the computed matrix.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from modules import validator
from modules.model import CanonicalSystem, coordinate_name
from modules.spectra import RootLabeling, label_roots

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SensitivityMatrix:
    """d[h-1][k-1] = d kappa_h / d omega_k; column n+1 is d/d beta."""

    d: np.ndarray
    valid_mask: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        size = self.d.shape[0]
        n = size - 1
        rows = []
        for h in range(size):
            for k in range(size):
                rows.append({
                    'h': h + 1,
                    'k': k + 1,
                    'coordinate': coordinate_name(k + 1, n),
                    'value': self.d[h, k] if self.valid_mask[h, k] else np.nan,
                    'valid': bool(self.valid_mask[h, k]),
                })
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class SignClaim:
    corollary: int
    h: int
    k: int
    predicted: int
    computed: int


@dataclass(frozen=True)
class SignReport:
    """Predicted against computed signs for every applicable corollary."""

    corollaries: Tuple[int, ...]
    claims: Tuple[SignClaim, ...]
    mismatches: Tuple[SignClaim, ...] = field(default=())

    def to_dict(self) -> Dict:
        def claim(c: SignClaim) -> Dict:
            return {'corollary': c.corollary, 'h': c.h, 'k': c.k,
                    'predicted': c.predicted, 'computed': c.computed}
        return {
            'corollaries': list(self.corollaries),
            'claims': [claim(c) for c in self.claims],
            'mismatches': [claim(c) for c in self.mismatches],
        }


def dkappa(sys: CanonicalSystem, labeling: RootLabeling) -> SensitivityMatrix:
    """
    Closed-form sensitivity matrix at the labeled roots.

    Args:
        sys: Canonical system
        labeling: Labeled roots of sys

    Returns:
        SensitivityMatrix; rows of non-real roots are masked

    Raises:
        CriticalPoint: two labeled roots closer than the critical gap
    """
    roots = labeling.as_array()
    size = roots.size
    diff = roots[:, None] - roots[None, :]
    distance = np.abs(diff)
    np.fill_diagonal(distance, np.inf)
    i, j = np.unravel_index(np.argmin(distance), distance.shape)
    if distance[i, j] <= config.TOLERANCES['critical_gap']:
        pair = tuple(sorted((int(i) + 1, int(j) + 1)))
        error_msg = (f"roots kappa_{pair[0]} and kappa_{pair[1]} nearly coincide "
                     f"(gap {distance[i, j]:.3g}); derivatives are unbounded")
        logger.error(error_msg)
        raise validator.CriticalPoint(error_msg, pair=pair)

    np.fill_diagonal(diff, 1.0)
    denominators = np.prod(diff, axis=1)

    lambdas = sys.lambdas
    pole_diffs = roots[:, None] - lambdas[None, :]
    matrix = np.empty((size, size), dtype=complex)
    for k in range(sys.n):
        partial = np.prod(np.delete(pole_diffs, k, axis=1), axis=1)
        matrix[:, k] = sys.deltas[k] * partial / denominators
    matrix[:, sys.n] = np.prod(pole_diffs, axis=1) / denominators

    valid = np.repeat(labeling.real_mask[:, None], size, axis=1)
    values = np.where(valid, matrix.real, np.nan)
    return SensitivityMatrix(values, valid)


def finite_difference_dkappa(sys: CanonicalSystem, labeling: RootLabeling,
                             coordinate: int) -> np.ndarray:
    """
    Central-difference column d kappa / d coordinate.

    Step size is fd_step * (1 + |coordinate value|); perturbed roots are
    matched to the labeling.
    """
    value = sys.coordinate_value(coordinate)
    step = config.SENSITIVITY['fd_step'] * (1.0 + abs(value))
    forward = label_roots(sys.with_coordinate(coordinate, value + step), anchor=labeling)
    backward = label_roots(sys.with_coordinate(coordinate, value - step), anchor=labeling)
    return (forward.as_array() - backward.as_array()) / (2.0 * step)


def _sign(x: float) -> int:
    return int(np.sign(x))


def _corollary_two(sys: CanonicalSystem, roots: np.ndarray) -> Optional[List[Tuple[int, int, int]]]:
    """Dominant real root between lambda_3 and lambda_1 (lambda_3 = -inf for n = 2)."""
    if sys.n < 2 or roots[0].imag != 0.0:
        return None
    lambdas, deltas = sys.lambdas, sys.deltas
    kappa = roots[0].real
    others = roots[1:]
    if np.any(others[others.imag == 0.0].real >= kappa):
        return None
    lower = lambdas[2] if sys.n >= 3 else -np.inf
    if not lower < kappa < lambdas[0]:
        return None

    side = _sign(kappa - lambdas[1])
    claims = [(1, 1, _sign(deltas[0]) * side), (1, 2, -_sign(deltas[1]))]
    claims += [(1, j + 1, -_sign(deltas[j]) * side) for j in range(2, sys.n)]
    claims.append((1, sys.n + 1, -side))
    return claims


def _corollary_three(sys: CanonicalSystem, roots: np.ndarray,
                     h: int) -> Optional[List[Tuple[int, int, int]]]:
    """Interlaced real root lambda_h < kappa_h < lambda_{h-1} with ordered neighbours."""
    if roots[h - 1].imag != 0.0:
        return None
    lambdas, deltas = sys.lambdas, sys.deltas
    kappa = roots[h - 1].real
    if not lambdas[h - 1] < kappa < lambdas[h - 2]:
        return None

    for i, z in enumerate(roots, start=1):
        if i == h:
            continue
        if z.imag == 0.0:
            if (i < h and not z.real > kappa) or (i > h and not z.real < kappa):
                return None
        else:
            partner = int(np.argmin(np.abs(roots - np.conj(z)))) + 1
            if (i < h) != (partner < h):
                return None

    own = _sign(kappa - lambdas[h - 1])
    claims = []
    for k in range(1, sys.n + 1):
        if k == h:
            claims.append((h, k, _sign(deltas[k - 1])))
        else:
            claims.append((h, k, _sign(deltas[k - 1]) * own * _sign(kappa - lambdas[k - 1])))
    claims.append((h, sys.n + 1, own))
    return claims


def sign_check(sys: CanonicalSystem, labeling: RootLabeling,
               corollary: Optional[int] = None) -> SignReport:
    """
    Compare predicted derivative signs with the computed sensitivity matrix.

    Args:
        sys: Canonical system
        labeling: Labeled roots of sys
        corollary: 2 (dominant root), 3 (interlaced roots) or None for both

    Returns:
        SignReport with the claims made and any mismatches

    Raises:
        HypothesesNotMet: no requested corollary applies
    """
    roots = labeling.as_array()
    applicable: Dict[int, List[Tuple[int, int, int]]] = {}

    if corollary in (None, 2):
        claims = _corollary_two(sys, roots)
        if claims:
            applicable[2] = claims
    if corollary in (None, 3):
        claims = []
        for h in range(2, sys.n + 1):
            claims += _corollary_three(sys, roots, h) or []
        if claims:
            applicable[3] = claims

    if not applicable:
        requested = 'any sign corollary' if corollary is None else f'corollary {corollary}'
        error_msg = f"hypotheses of {requested} do not hold at the labeled roots"
        logger.warning(f"  ⚠ {error_msg}")
        raise validator.HypothesesNotMet(error_msg, corollary=corollary)

    matrix = dkappa(sys, labeling)
    results, mismatches = [], []
    for number, claims in sorted(applicable.items()):
        for h, k, predicted in claims:
            if predicted == 0:
                continue
            value = matrix.d[h - 1, k - 1]
            computed = _sign(value) if abs(value) > 1e-12 else 0
            claim = SignClaim(number, h, k, predicted, computed)
            results.append(claim)
            if computed != predicted:
                mismatches.append(claim)

    if mismatches:
        logger.warning(f"  ⚠ {len(mismatches)} sign prediction(s) contradicted")
    else:
        logger.info(f"  ✓ {len(results)} sign prediction(s) confirmed")
    return SignReport(tuple(sorted(applicable)), tuple(results), tuple(mismatches))

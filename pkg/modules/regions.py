"""
REGIONS MODULE
--------------
Geometric containment tests for the eigenvalues of H(omega).

Key Features:
* Vertical Strip: beta <= Re(z) <= lambda_1 for non-real roots.
* K(epsilon): real interval whose endpoints solve (z - beta)(z - lambda) = epsilon.
* Star Region: points from which K subtends an angle of at least pi/(n+1).
* Gerschgorin: row discs of H and column discs (rows of H^T), with the
  tighter containing disc reported per root.
* Annulus: buckets roots by modulus against lambda_2 < |z| < lambda_1.
* Composite Bounds: K(epsilon) with its lower endpoint at lambda_n and the
  rectangle [beta, lambda_1] x [-max|omega|, max|omega|].

Strip and K are closed; the annulus is open. Comparisons use the boundary
tolerance, scaled by the magnitude of the bound.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

import config
from modules import validator
from modules.model import CanonicalSystem
from modules.spectra import RootLabeling, RootSet

logger = logging.getLogger(__name__)

Roots = Union[RootSet, RootLabeling, Sequence[complex], np.ndarray]

INSIDE = 'inside-disc-lambda2'
ANNULUS = 'in-annulus'
OUTSIDE = 'outside'


def _as_roots(roots: Roots) -> np.ndarray:
    if hasattr(roots, 'as_array'):
        return roots.as_array()
    return np.asarray(roots, dtype=complex).ravel()


def _tol(bound: float) -> float:
    return config.TOLERANCES['boundary'] * (1.0 + abs(bound))


# ============================================================
# INTERVALS AND STAR REGIONS
# ============================================================

@dataclass(frozen=True)
class KInterval:
    lo: float
    hi: float
    epsilon: float

    def contains(self, x: float) -> bool:
        return self.lo - _tol(self.lo) <= x <= self.hi + _tol(self.hi)


@dataclass(frozen=True)
class StarRegion:
    """Points from which the segment k subtends an angle of at least pi/order."""

    k: KInterval
    order: int

    def subtended_angle(self, z: complex) -> float:
        lo, hi = self.k.lo, self.k.hi
        if z == lo or z == hi:
            return np.pi
        return float(abs(np.angle((hi - z) * np.conj(lo - z))))

    def contains(self, z: complex) -> bool:
        z = complex(z)
        if abs(z.imag) <= _tol(z.real) and self.k.contains(z.real):
            return True
        return self.subtended_angle(z) >= np.pi / self.order - config.TOLERANCES['boundary']


def k_interval(beta: float, lambda1: float, epsilon: float,
               lambda_low: Optional[float] = None) -> KInterval:
    """
    K(epsilon) = [beta - eta, lambda_1 + eta].

    The upper endpoint is the larger root of (z - beta)(z - lambda_1) = epsilon;
    the lower endpoint is the smaller root of (z - beta)(z - lambda_low) = epsilon,
    with lambda_low defaulting to lambda_1.

    Raises:
        NegativeDiscriminant: epsilon < -(lambda - beta)^2 / 4
    """
    lambda_low = lambda1 if lambda_low is None else lambda_low
    upper = (lambda1 - beta) ** 2 + 4.0 * epsilon
    lower = (lambda_low - beta) ** 2 + 4.0 * epsilon
    floor = -config.TOLERANCES['boundary'] * (1.0 + (lambda1 - beta) ** 2)
    if upper < floor or lower < floor:
        error_msg = (f"epsilon={epsilon:g} below -(lambda - beta)^2/4; "
                     f"K(epsilon) has no real endpoints")
        logger.error(error_msg)
        raise validator.NegativeDiscriminant(error_msg, epsilon=epsilon)
    lo = 0.5 * ((beta + lambda_low) - np.sqrt(max(lower, 0.0)))
    hi = 0.5 * ((beta + lambda1) + np.sqrt(max(upper, 0.0)))
    return KInterval(float(lo), float(hi), float(epsilon))


def star_region(k: KInterval, order: int) -> StarRegion:
    validator.check_samples(order, minimum=1, name='order')
    return StarRegion(k, order)


def strip_test(roots: Roots, beta: float, lambda1: float) -> List[Optional[bool]]:
    """Per-root flag beta <= Re(z) <= lambda_1 for non-real roots; None for real roots."""
    flags: List[Optional[bool]] = []
    for z in _as_roots(roots):
        if z.imag == 0.0:
            flags.append(None)
        else:
            flags.append(bool(beta - _tol(beta) <= z.real <= lambda1 + _tol(lambda1)))
    return flags


def star_test(roots: Roots, region: StarRegion) -> List[bool]:
    return [region.contains(z) for z in _as_roots(roots)]


# ============================================================
# GERSCHGORIN
# ============================================================

@dataclass(frozen=True)
class Disc:
    center: float
    radius: float

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) <= self.radius + _tol(self.radius + abs(self.center))

    def to_dict(self) -> Dict:
        return {'center': self.center, 'radius': self.radius}


@dataclass(frozen=True)
class GerschgorinReport:
    row_discs: tuple
    column_discs: tuple

    def membership(self, roots: Roots) -> List[Dict]:
        """Per root: containment in each union and the smallest disc containing it."""
        result = []
        for z in _as_roots(roots):
            in_rows = [d for d in self.row_discs if d.contains(z)]
            in_columns = [d for d in self.column_discs if d.contains(z)]
            candidates = in_rows + in_columns
            tightest = min(candidates, key=lambda d: d.radius) if candidates else None
            result.append({
                'root': z,
                'in_rows': bool(in_rows),
                'in_columns': bool(in_columns),
                'tightest': tightest.to_dict() if tightest else None,
            })
        return result

    def to_dict(self) -> Dict:
        return {
            'row_discs': [d.to_dict() for d in self.row_discs],
            'column_discs': [d.to_dict() for d in self.column_discs],
        }


def gerschgorin(sys: CanonicalSystem) -> GerschgorinReport:
    """
    Gerschgorin discs of H and of H^T.

    Rows of H give |z - lambda_j| <= 1 and |z - beta| <= sum|omega|; rows of
    H^T give |z - lambda_j| <= |omega_j| and |z - beta| <= n. Each union
    contains every eigenvalue.
    """
    lambdas, omegas = sys.lambdas, sys.omegas
    rows = tuple(Disc(float(lam), 1.0) for lam in lambdas) + \
        (Disc(sys.beta, float(np.sum(np.abs(omegas)))),)
    columns = tuple(Disc(float(lam), float(abs(w))) for lam, w in zip(lambdas, omegas)) + \
        (Disc(sys.beta, float(sys.n)),)
    return GerschgorinReport(rows, columns)


# ============================================================
# ANNULUS
# ============================================================

@dataclass(frozen=True)
class AnnulusReport:
    buckets: tuple
    any_in_annulus: bool
    all_in_disc_lambda1: bool

    def to_dict(self) -> Dict:
        return {
            'buckets': list(self.buckets),
            'any_in_annulus': self.any_in_annulus,
            'all_in_disc_lambda1': self.all_in_disc_lambda1,
        }


def annulus_report(roots: Roots, lambda2: float, lambda1: float) -> AnnulusReport:
    """
    Bucket roots by modulus against the open annulus lambda_2 < |z| < lambda_1.

    Moduli within the boundary tolerance of lambda_2 count as inside the disc;
    those within tolerance of lambda_1 count as outside.
    """
    if not lambda2 < lambda1:
        raise validator.ValidationError(f"annulus needs lambda2 < lambda1, got {lambda2}, {lambda1}")
    buckets = []
    moduli = np.abs(_as_roots(roots))
    for m in moduli:
        if m <= lambda2 + _tol(lambda2):
            buckets.append(INSIDE)
        elif m >= lambda1 - _tol(lambda1):
            buckets.append(OUTSIDE)
        else:
            buckets.append(ANNULUS)
    all_inside = bool(np.all(moduli < lambda1 - _tol(lambda1)))
    return AnnulusReport(tuple(buckets), ANNULUS in buckets, all_inside)


# ============================================================
# COMPOSITE BOUNDS
# ============================================================

@dataclass(frozen=True)
class BoundsReport:
    k: KInterval
    height: float
    hypotheses_hold: bool
    rows: tuple
    violations: int

    def to_dict(self) -> Dict:
        return {
            'k_interval': [self.k.lo, self.k.hi],
            'epsilon': self.k.epsilon,
            'height': self.height,
            'hypotheses_hold': self.hypotheses_hold,
            'rows': list(self.rows),
            'violations': self.violations,
        }


def eigenvalue_bounds(sys: CanonicalSystem, roots: Roots,
                      epsilon: Optional[float] = None) -> BoundsReport:
    """
    Real roots in K(epsilon), non-real roots in [beta, lambda_1] x [-h, h].

    K takes its lower endpoint at lambda_n and h = max|omega_j|. The bounds
    are guaranteed when delta_j omega_j >= 0, beta <= lambda_n and
    sum(omega_j delta_j) <= epsilon; violations are counted either way.

    Args:
        sys: Canonical system
        roots: Its eigenvalues
        epsilon: Defaults to sum |omega_j|
    """
    couplings = sys.couplings
    lambdas = sys.lambdas
    epsilon = float(np.sum(np.abs(sys.omegas))) if epsilon is None else float(epsilon)
    k = k_interval(sys.beta, float(lambdas[0]), epsilon, lambda_low=float(lambdas[-1]))
    height = float(np.max(np.abs(sys.omegas)))
    hypotheses = bool(np.all(couplings >= 0) and sys.beta <= lambdas[-1]
                      and np.sum(couplings) <= epsilon)

    rows, violations = [], 0
    for z in _as_roots(roots):
        if z.imag == 0.0:
            inside = k.contains(z.real)
            region = 'K'
        else:
            inside = (sys.beta - _tol(sys.beta) <= z.real <= lambdas[0] + _tol(lambdas[0])
                      and abs(z.imag) <= height + _tol(height))
            region = 'rectangle'
        violations += not inside
        rows.append({'root': z, 'region': region, 'inside': bool(inside)})

    if violations and hypotheses:
        logger.warning(f"  ⚠ {violations} root(s) outside the bounds despite qualifying hypotheses")
    return BoundsReport(k, height, hypotheses, tuple(rows), violations)


def region_rows(sys: CanonicalSystem, roots: Roots, epsilon: Optional[float] = None) -> List[Dict]:
    """Per-root summary of every containment test, for the regions report."""
    values = _as_roots(roots)
    epsilon = float(np.sum(np.abs(sys.omegas))) if epsilon is None else float(epsilon)
    k = k_interval(sys.beta, float(sys.lambdas[0]), epsilon, lambda_low=float(sys.lambdas[-1]))
    strip = strip_test(values, sys.beta, float(sys.lambdas[0]))
    star = star_test(values, star_region(k, sys.n + 1))
    discs = gerschgorin(sys).membership(values)
    if sys.n >= 2:
        buckets = annulus_report(values, float(sys.lambdas[1]), float(sys.lambdas[0])).buckets
    else:
        buckets = (None,) * values.size
    return [
        {'root': z, 'strip': s, 'star': st, 'gerschgorin': g['in_rows'] and g['in_columns'],
         'annulus': b}
        for z, s, st, g, b in zip(values, strip, star, discs, buckets)
    ]

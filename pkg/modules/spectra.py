"""
SPECTRA MODULE
--------------
Eigenvalues of H(omega) by two independent methods, and stable root labels.

Key Features:
* Dual Solve: dense eigen-solve of H cross-checked against an Aberth-Ehrlich
  root find of the characteristic polynomial (companion-matrix fallback).
* Conjugate Symmetrization: roots are paired with their conjugates,
  averaged, and snapped to the real axis below tolerance.
* Labeling: kappa_1..kappa_{n+1} are tied to lambda_1..lambda_n, beta at
  omega = 0 and carried along a homotopy by minimal-total-distance
  assignment with recursive step halving.
* Crossings: when halving reaches its depth limit at a real/conjugate
  bifurcation, the pair is labeled by convention (lower label takes Im > 0,
  or the larger real part) and the change of status is recorded. A pair that
  meets without changing status raises LabelCollision.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

import config
from modules import validator
from modules.charpoly import charpoly_coeffs, charpoly_value
from modules.model import CanonicalSystem, build_h

logger = logging.getLogger(__name__)

REAL_TO_CONJUGATE = 'real-pair-to-conjugate'
CONJUGATE_TO_REAL = 'conjugate-to-real-pair'


# ============================================================
# ROOT CONTAINERS
# ============================================================

@dataclass(frozen=True, eq=False)
class RootSet:
    """Unlabeled eigenvalues, conjugate-symmetrized."""

    roots: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.array(self.roots, dtype=complex)

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    @property
    def real_mask(self) -> np.ndarray:
        return np.asarray(self.roots).imag == 0.0

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.roots)))


@dataclass(frozen=True, eq=False)
class RootLabeling:
    """Roots in label order: entry j-1 holds kappa_j."""

    roots: np.ndarray

    @property
    def labeled(self) -> Dict[int, complex]:
        return {j: complex(z) for j, z in enumerate(self.roots, start=1)}

    @property
    def is_real(self) -> Dict[int, bool]:
        return {j: bool(z.imag == 0.0) for j, z in enumerate(self.roots, start=1)}

    @property
    def real_mask(self) -> np.ndarray:
        return np.asarray(self.roots).imag == 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self.roots, dtype=complex)

    def __getitem__(self, index: int) -> complex:
        return complex(self.roots[index - 1])

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class Crossing:
    """A labeled pair changed real/complex status inside a halving interval."""

    parameter_value: float
    indices: Tuple[int, int]
    kind: str


# ============================================================
# POLYNOMIAL ROOTS
# ============================================================

def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    """Points on a circle around the root centroid, radius from the shifted coefficients."""
    degree = coeffs.size - 1
    center = -coeffs[1] / degree

    shifted = coeffs.astype(complex)
    for i in range(degree):
        for j in range(1, degree + 1 - i):
            shifted[j] += center * shifted[j - 1]

    powers = np.arange(1, degree + 1)
    radius = float(np.max(np.abs(shifted[1:]) ** (1.0 / powers)))
    radius = max(radius, 1e-8 * (1.0 + abs(center)))

    angles = 2.0 * np.pi * np.arange(degree) / degree + config.ROOT_FINDER['angle_offset']
    return center + radius * np.exp(1j * angles)


def aberth_ehrlich(coeffs, evaluate: Optional[Callable] = None,
                   max_iter: Optional[int] = None,
                   tol: Optional[float] = None) -> Tuple[np.ndarray, bool]:
    """
    Simultaneous Aberth-Ehrlich iteration for all roots of a polynomial.

    Args:
        coeffs: Degree-descending coefficients
        evaluate: Optional structured evaluator of p(z); the derivative always
            comes from the coefficients
        max_iter: Iteration cap
        tol: Relative correction size at which a root is frozen

    Returns:
        Tuple of (roots, converged)
    """
    max_iter = config.ROOT_FINDER['max_iter'] if max_iter is None else max_iter
    tol = config.ROOT_FINDER['tol'] if tol is None else tol

    c = np.asarray(coeffs, dtype=complex)
    c = c / c[0]
    degree = c.size - 1
    if degree < 1:
        raise validator.ValidationError("polynomial must have degree >= 1")
    if degree == 1:
        return np.array([-c[1]]), True

    derivative = np.polyder(c)
    value = evaluate if evaluate is not None else (lambda z: np.polyval(c, z))
    z = _initial_guesses(c)
    active = np.ones(degree, dtype=bool)

    for _ in range(max_iter):
        p = np.asarray(value(z), dtype=complex)
        dp = np.polyval(derivative, z)
        with np.errstate(divide='ignore', invalid='ignore'):
            newton = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = np.sum(1.0 / diff, axis=1)
            step = newton / (1.0 - newton * repulsion)
        step[~np.isfinite(step)] = 0.0
        step[~active] = 0.0
        z = z - step
        active &= np.abs(step) > tol * (1.0 + np.abs(z))
        if not active.any():
            return z, True

    return z, False


def polynomial_roots(coeffs, evaluate: Optional[Callable] = None) -> np.ndarray:
    """All roots of a polynomial: Aberth-Ehrlich, falling back to the companion matrix."""
    roots, converged = aberth_ehrlich(coeffs, evaluate=evaluate)
    if converged and np.all(np.isfinite(roots)):
        return roots
    logger.debug("Aberth-Ehrlich did not converge, using companion matrix")
    return np.roots(np.asarray(coeffs))


def symmetrize(roots: np.ndarray) -> np.ndarray:
    """
    Pair each root with its conjugate partner and average the pair.

    Roots whose imaginary part is below the real-root tolerance are snapped to
    the real axis, so real roots compare exactly.
    """
    roots = np.asarray(roots, dtype=complex)
    cost = np.abs(roots[:, None] - np.conj(roots)[None, :])
    _, partner = linear_sum_assignment(cost)
    result = 0.5 * (roots + np.conj(roots[partner]))
    tol = config.TOLERANCES['real_root']
    real = np.abs(result.imag) <= tol * (1.0 + np.abs(result))
    result[real] = result[real].real
    return result


def _sorted(roots: np.ndarray) -> np.ndarray:
    return roots[np.lexsort((-roots.imag, -roots.real))]


def eigenvalues(sys: CanonicalSystem) -> RootSet:
    """
    Eigenvalues of H(omega), verified by an independent polynomial root find.

    Raises:
        MethodDisagreement: the two result sets pair up farther apart than
            the agreement tolerance
    """
    dense = np.linalg.eigvals(build_h(sys))
    found = polynomial_roots(charpoly_coeffs(sys).coeffs,
                             evaluate=lambda z: charpoly_value(sys, z))

    row, col = linear_sum_assignment(np.abs(dense[:, None] - found[None, :]))
    distance = float(np.max(np.abs(dense[row] - found[col])))
    scale = 1.0 + float(np.max(np.abs(dense)))
    if not distance <= config.TOLERANCES['method_agreement'] * scale:
        error_msg = (f"eigen-solve and polynomial roots disagree by {distance:.3g} "
                     f"(scale {scale:.3g})")
        logger.error(error_msg)
        raise validator.MethodDisagreement(error_msg, dense=dense, polynomial=found,
                                           distance=distance)

    return RootSet(_sorted(symmetrize(dense)))


# ============================================================
# LABELING
# ============================================================

def min_gap(roots: np.ndarray) -> float:
    """Minimum pairwise distance within a root set."""
    roots = np.asarray(roots)
    if roots.size < 2:
        return np.inf
    diff = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(np.min(diff))


def match_roots(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Reorder current so entry i is its minimal-total-distance partner of previous[i]."""
    _, col = linear_sum_assignment(np.abs(previous[:, None] - current[None, :]))
    return current[col]


def _order_pair(u: complex, v: complex) -> Tuple[complex, complex]:
    """Lower label takes the root with Im > 0, or the larger real part."""
    if (u.imag, u.real) >= (v.imag, v.real):
        return u, v
    return v, u


def _pair_status(a: complex, b: complex) -> str:
    if a.imag == 0.0 and b.imag == 0.0:
        return 'real'
    if a == np.conj(b):
        return 'conjugate'
    return 'complex'


def _status_near(system_at: Callable[[float], CanonicalSystem], value: float,
                 centre: complex) -> str:
    """Status of the two roots nearest the centre at one parameter value."""
    roots = eigenvalues(system_at(value)).as_array()
    a, b = roots[np.argsort(np.abs(roots - centre), kind='stable')[:2]]
    return _pair_status(a, b)


def _resolve_crossing(system_at: Callable[[float], CanonicalSystem], start: float,
                      stop: float, roots0: np.ndarray,
                      roots1: np.ndarray) -> Tuple[np.ndarray, Optional[Crossing]]:
    """
    Label across a root coincidence that halving could not separate.

    The pair's status is read one offset outside the interval on each side,
    so a coincidence sitting exactly on an endpoint is classified the same
    way as one strictly inside.

    Raises:
        LabelCollision: the pair keeps its status across the coincidence, or
            the coincidence involves non-conjugate complex roots
    """
    parameter = 0.5 * (start + stop)
    size = roots0.size
    diff = np.abs(roots0[:, None] - roots0[None, :])
    np.fill_diagonal(diff, np.inf)
    i, j = sorted(np.unravel_index(np.argmin(diff), diff.shape))
    centre = 0.5 * (roots0[i] + roots0[j])

    nearest = np.argsort(np.abs(roots1 - centre), kind='stable')
    u, v = roots1[nearest[0]], roots1[nearest[1]]

    rest0 = np.delete(roots0, [i, j])
    rest1 = np.delete(roots1, nearest[:2])
    result = np.empty(size, dtype=complex)

    if rest0.size:
        aligned = match_roots(rest0, rest1)
        bound = config.HOMOTOPY['gap_fraction'] * min_gap(np.append(rest0, centre))
        pair_reach = 0.5 * float(np.min(np.abs(rest0 - centre)))
        if (np.max(np.abs(aligned - rest0)) > bound
                or max(abs(u - centre), abs(v - centre)) > pair_reach):
            raise validator.LabelCollision(
                f"cannot separate roots near {centre:.6g} at parameter {parameter:.12g}",
                parameter=parameter, roots=roots1)
        result[np.delete(np.arange(size), [i, j])] = aligned

    offset = max(abs(stop - start),
                 config.HOMOTOPY['status_offset'] * (1.0 + abs(parameter)))
    direction = 1.0 if stop >= start else -1.0
    before = _status_near(system_at, start - direction * offset, centre)
    after = _status_near(system_at, stop + direction * offset, centre)
    if 'complex' in (before, after):
        raise validator.LabelCollision(
            f"two non-conjugate complex roots coincide near {centre:.6g} "
            f"at parameter {parameter:.12g}",
            parameter=parameter, indices=[i + 1, j + 1])
    if before == after:
        # Same status on both sides: the pair passes through itself.
        error_msg = (f"roots {i + 1} and {j + 1} coincide near {centre:.6g} at parameter "
                     f"{parameter:.12g} and stay {after}")
        logger.error(error_msg)
        raise validator.LabelCollision(error_msg, parameter=parameter, pair=[i + 1, j + 1])

    result[i], result[j] = _order_pair(u, v)

    kind = REAL_TO_CONJUGATE if before == 'real' else CONJUGATE_TO_REAL
    return result, Crossing(parameter, (i + 1, j + 1), kind)


def merge_crossings(crossings: List[Crossing]) -> List[Crossing]:
    """
    Drop repeats of one event.

    A coincidence on a sample point is resolved from both neighbouring
    intervals and reported twice within a few offsets.
    """
    merged: List[Crossing] = []
    for crossing in crossings:
        if merged:
            last = merged[-1]
            width = 4.0 * config.HOMOTOPY['status_offset'] * (1.0 + abs(last.parameter_value))
            if (last.indices == crossing.indices and last.kind == crossing.kind
                    and abs(last.parameter_value - crossing.parameter_value) <= width):
                continue
        merged.append(crossing)
    return merged


def _advance(system_at: Callable[[float], CanonicalSystem], start: float,
             roots0: np.ndarray, stop: float, depth: int,
             steps: List[Tuple[float, np.ndarray]], crossings: List[Crossing]) -> np.ndarray:
    roots1 = eigenvalues(system_at(stop)).as_array()
    candidate = match_roots(roots0, roots1)

    if np.max(np.abs(candidate - roots0)) <= config.HOMOTOPY['gap_fraction'] * min_gap(roots0):
        steps.append((stop, candidate))
        return candidate

    if depth >= config.HOMOTOPY['max_depth']:
        candidate, crossing = _resolve_crossing(system_at, start, stop, roots0, roots1)
        logger.debug(f"Crossing {crossing.kind} of {crossing.indices} "
                     f"at {crossing.parameter_value:.12g}")
        crossings.append(crossing)
        steps.append((stop, candidate))
        return candidate

    middle = 0.5 * (start + stop)
    roots_mid = _advance(system_at, start, roots0, middle, depth + 1, steps, crossings)
    return _advance(system_at, middle, roots_mid, stop, depth + 1, steps, crossings)


def continue_labels(system_at: Callable[[float], CanonicalSystem], start: float,
                    roots: np.ndarray, stop: float
                    ) -> Tuple[List[Tuple[float, np.ndarray]], List[Crossing]]:
    """
    Carry labeled roots from parameter start to stop.

    Args:
        system_at: Maps a parameter value to a system
        start: Parameter value at which roots are labeled
        roots: Labeled roots at start
        stop: Target parameter value

    Returns:
        Tuple of (accepted steps as (parameter, labeled roots), crossings)
    """
    steps: List[Tuple[float, np.ndarray]] = []
    crossings: List[Crossing] = []
    _advance(system_at, start, np.asarray(roots, dtype=complex), stop, 0, steps, crossings)
    return steps, crossings


def label_roots(sys: CanonicalSystem, anchor: Optional[RootLabeling] = None) -> RootLabeling:
    """
    Label the eigenvalues kappa_1..kappa_{n+1} of a system.

    Without an anchor, labels are defined at omega = 0 (kappa_j = lambda_j,
    kappa_{n+1} = beta) and carried along the straight segment to the
    requested omega, with beta held fixed, through geometric steps
    t = 0, 2^-(m-1), ..., 1/2, 1.

    Args:
        sys: Canonical system
        anchor: Labeled roots of a nearby system; matched in one step

    Returns:
        RootLabeling

    Raises:
        LabelCollision: continuation could not separate two roots
    """
    if anchor is not None:
        roots = eigenvalues(sys).as_array()
        return RootLabeling(match_roots(anchor.as_array(), roots))

    roots = np.append(sys.lambdas, sys.beta).astype(complex)
    if not np.any(sys.omegas):
        return RootLabeling(roots)

    steps = config.HOMOTOPY['geometric_steps']
    schedule = [0.0] + [2.0 ** (k - steps + 1) for k in range(steps)]
    for t0, t1 in zip(schedule[:-1], schedule[1:]):
        accepted, crossings = continue_labels(sys.scaled_policy, t0, roots, t1)
        roots = accepted[-1][1]
        for crossing in crossings:
            logger.debug(f"Homotopy crossing {crossing.kind} of {crossing.indices} "
                         f"at t={crossing.parameter_value:.6g}")
    return RootLabeling(roots)

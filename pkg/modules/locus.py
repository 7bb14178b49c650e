"""
LOCUS MODULE
------------
Root loci of H(omega) as one policy coordinate varies.

Key Responsibilities:
* Tracing: labeled roots over a grid of one coordinate (omega_k or beta),
  with samples inserted where roots move fast relative to their spacing.
* Bifurcations: real pairs turning into conjugate pairs (and back), located
  on the trace or as stationary points of the level function, and classified
  by the sign of F''(kappa*) F'''(kappa*).
* Asymptotes: expansion of the unbounded branches as |omega_j| grows, and a
  log-log regression of computed roots against it.
* Two-Pole Circle: closed-form conjugate roots of the two-pole quadratic and
  a least-squares circle diagnostic for traced pairs.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

import config
from modules import validator
from modules.charpoly import level_derivative_numerator, level_jet
from modules.model import CanonicalSystem, coordinate_name, resolve_coordinate
from modules.spectra import (CONJUGATE_TO_REAL, REAL_TO_CONJUGATE, Crossing, RootLabeling,
                             continue_labels, eigenvalues, label_roots, merge_crossings,
                             min_gap)

logger = logging.getLogger(__name__)


# ============================================================
# TYPES
# ============================================================

@dataclass(frozen=True)
class BifurcationEvent:
    """A labeled pair changing real/complex status as the parameter increases."""

    parameter_value: float
    parameter: int
    indices: Optional[Tuple[int, int]]
    kind: str
    direction: int

    def to_dict(self) -> Dict:
        return {
            'parameter_value': self.parameter_value,
            'parameter': self.parameter,
            'indices': list(self.indices) if self.indices else None,
            'kind': self.kind,
            'direction': self.direction,
        }


@dataclass(frozen=True, eq=False)
class LocusTrace:
    """Labeled roots along a one-parameter sweep, grid samples plus insertions."""

    parameter: int
    parameter_name: str
    grid: np.ndarray
    labelings: Tuple[RootLabeling, ...]
    events: Tuple[BifurcationEvent, ...]
    inserted: np.ndarray

    def roots(self) -> np.ndarray:
        """Array of shape (samples, n+1); column j-1 is kappa_j."""
        return np.vstack([labeling.as_array() for labeling in self.labelings])

    def branch(self, index: int) -> np.ndarray:
        return self.roots()[:, index - 1]

    def to_frame(self) -> pd.DataFrame:
        roots = self.roots()
        samples, size = roots.shape
        return pd.DataFrame({
            'param': np.repeat(self.grid, size),
            'index': np.tile(np.arange(1, size + 1), samples),
            're': roots.real.ravel(),
            'im': roots.imag.ravel(),
            'is_real': (roots.imag == 0.0).ravel(),
        })

    def to_dict(self) -> Dict:
        return {
            'parameter': self.parameter_name,
            'samples': [
                {'param': float(p), 'inserted': bool(flag),
                 'roots': [[z.real, z.imag] for z in labeling.as_array()]}
                for p, flag, labeling in zip(self.grid, self.inserted, self.labelings)
            ],
            'events': [event.to_dict() for event in self.events],
        }


@dataclass(frozen=True)
class BifurcationClass:
    """Predicted and measured initial real-part motion at a coalescence."""

    kappa_star: float
    parameter_star: float
    second: float
    third: float
    predicted: int
    measured: float
    agrees: bool


@dataclass(frozen=True)
class AsymptoteInfo:
    index: int
    a_j: float
    center: Optional[float]
    law: str
    re_exponent: float
    predicted_coefficient: float
    im_exponent: Optional[float] = None
    branch_exponent: Optional[float] = None

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class AsymptoteFit:
    """Log-log regression of the unbounded branch at large coordinate values."""

    index: int
    values: Tuple[float, ...]
    re_slope: float
    re_coefficient: float
    predicted_coefficient: float
    im_slope: Optional[float]
    branch_slope: Optional[float]
    bounded_distance: Optional[float]


@dataclass(frozen=True, eq=False)
class CirclePair:
    roots: np.ndarray
    center: float
    radius: float
    band: Tuple[float, float]


@dataclass(frozen=True)
class CircleFit:
    center: float
    radius: float
    max_deviation: float
    samples: int


# ============================================================
# TRACING
# ============================================================

def _grid(lo: float, hi: float, samples: int, spacing: str) -> np.ndarray:
    if spacing == 'linear':
        return np.linspace(lo, hi, samples)
    if spacing == 'log':
        if lo <= 0:
            raise validator.ValidationError(f"log spacing needs lo > 0, got {lo}")
        return np.geomspace(lo, hi, samples)
    raise validator.ValidationError(f"spacing must be 'linear' or 'log', got {spacing!r}")


def _trace_interval(system_at: Callable[[float], CanonicalSystem], start: float,
                    roots: np.ndarray, stop: float, grid_stop: float, depth: int,
                    out: List[Tuple[float, np.ndarray, bool]],
                    crossings: List[Crossing]) -> np.ndarray:
    steps, found = continue_labels(system_at, start, roots, stop)
    end = steps[-1][1]
    bound = config.LOCUS['insert_gap_fraction'] * min_gap(roots)
    if depth < config.LOCUS['max_insert_depth'] and np.max(np.abs(end - roots)) > bound:
        middle = 0.5 * (start + stop)
        mid_roots = _trace_interval(system_at, start, roots, middle, grid_stop, depth + 1,
                                     out, crossings)
        return _trace_interval(system_at, middle, mid_roots, stop, grid_stop, depth + 1,
                               out, crossings)
    out.append((stop, end, stop != grid_stop))
    crossings.extend(found)
    return end


def _pair_centre(roots: np.ndarray) -> complex:
    diff = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(diff, np.inf)
    i, j = np.unravel_index(np.argmin(diff), diff.shape)
    return 0.5 * (roots[i] + roots[j])


def _measure_motion(system_at: Callable[[float], CanonicalSystem], value: float,
                    side: int, centre: float) -> float:
    """Mean real part of the two roots nearest the centre, one offset into the complex side."""
    offset = config.LOCUS['direction_offset']
    roots = eigenvalues(system_at(value + side * offset)).as_array()
    nearest = roots[np.argsort(np.abs(roots - centre), kind='stable')[:2]]
    return float(np.mean(nearest.real) - centre)


def _motion_sign(measured: float, centre: float) -> int:
    if abs(measured) <= config.TOLERANCES['jet'] * (1.0 + abs(centre)):
        return 0
    return int(np.sign(measured))


def trace_locus(sys: CanonicalSystem, param: Union[str, int], lo: float, hi: float,
                samples: int, spacing: str = 'linear') -> LocusTrace:
    """
    Trace the labeled roots as one coordinate sweeps [lo, hi].

    Args:
        sys: Canonical system; the swept coordinate's own value is ignored
        param: 'omegaK', 'beta' or a coordinate number
        lo, hi: Sweep range
        samples: Number of grid points (>= 2)
        spacing: 'linear' or 'log'

    Returns:
        LocusTrace with grid samples, inserted samples and events

    Raises:
        LabelCollision: continuation could not separate two roots
    """
    validator.check_samples(samples, minimum=2)
    validator.check_range(lo, hi)
    coordinate = resolve_coordinate(param, sys.n)
    name = coordinate_name(coordinate, sys.n)
    grid = _grid(float(lo), float(hi), int(samples), spacing)

    def system_at(value: float) -> CanonicalSystem:
        return sys.with_coordinate(coordinate, value)

    logger.info(f"Tracing {name} over [{lo:g}, {hi:g}] with {samples} samples")
    start = label_roots(system_at(grid[0])).as_array()
    records: List[Tuple[float, np.ndarray, bool]] = [(grid[0], start, False)]
    crossings: List[Crossing] = []
    roots = start
    for p0, p1 in zip(grid[:-1], grid[1:]):
        roots = _trace_interval(system_at, p0, roots, p1, p1, 0, records, crossings)

    events = []
    for crossing in merge_crossings(crossings):
        side = 1 if crossing.kind == REAL_TO_CONJUGATE else -1
        value = crossing.parameter_value
        centre = float(_pair_centre(eigenvalues(system_at(value)).as_array()).real)
        measured = _measure_motion(system_at, value, side, centre)
        events.append(BifurcationEvent(value, coordinate, crossing.indices, crossing.kind,
                                       _motion_sign(measured, centre)))

    logger.info(f"  ✓ {len(records)} samples ({sum(r[2] for r in records)} inserted), "
                f"{len(events)} event(s)")
    return LocusTrace(
        parameter=coordinate,
        parameter_name=name,
        grid=np.array([r[0] for r in records]),
        labelings=tuple(RootLabeling(r[1]) for r in records),
        events=tuple(events),
        inserted=np.array([r[2] for r in records]),
    )


# ============================================================
# BIFURCATIONS
# ============================================================

def _jet_scale(sys: CanonicalSystem) -> float:
    return 1.0 + float(np.max(np.abs(sys.lambdas))) + abs(sys.beta)


def _polish_stationary(sys: CanonicalSystem, kappa: float, coordinate: int) -> float:
    for _ in range(config.LOCUS['newton_max_iter']):
        _, first, second, _ = level_jet(sys, kappa, coordinate)
        if second == 0.0:
            break
        step = first / second
        kappa -= step
        if abs(step) <= 1e-15 * (1.0 + abs(kappa)):
            break
    return float(kappa)


def critical_points(sys: CanonicalSystem, param: Union[str, int]) -> List[BifurcationEvent]:
    """
    Real stationary points of the level function of one coordinate.

    Each is a parameter value where two real roots coalesce. The event kind is
    relative to increasing parameter; direction is the predicted sign of the
    initial real-part motion.
    """
    coordinate = resolve_coordinate(param, sys.n)
    numerator = level_derivative_numerator(sys, coordinate)
    candidates = np.roots(numerator) if numerator.size > 1 else np.array([])
    poles = sys.lambdas if coordinate == sys.n + 1 else np.delete(sys.lambdas, coordinate - 1)

    tol = config.TOLERANCES
    found: List[float] = []
    for z in candidates:
        if abs(z.imag) > 1e-7 * (1.0 + abs(z)):
            continue
        kappa = float(z.real)
        if np.any(np.abs(kappa - poles) < tol['pole_proximity'] * (1.0 + np.abs(poles))):
            continue
        kappa = _polish_stationary(sys, kappa, coordinate)
        if all(abs(kappa - k) > 1e-9 * (1.0 + abs(k)) for k in found):
            found.append(kappa)

    events = []
    for kappa in sorted(found):
        value, _, second, third = level_jet(sys, kappa, coordinate)
        if second == 0.0:
            continue
        kind = REAL_TO_CONJUGATE if second < 0 else CONJUGATE_TO_REAL
        events.append(BifurcationEvent(float(value), coordinate, None, kind,
                                       int(np.sign(second * third))))
    events.sort(key=lambda e: e.parameter_value)
    logger.debug(f"{len(events)} critical point(s) for {coordinate_name(coordinate, sys.n)}")
    return events


def classify_bifurcation(sys: CanonicalSystem, event: BifurcationEvent) -> BifurcationClass:
    """
    Third-derivative test at a coalescence of two real roots.

    The real part of the emerging conjugate pair initially moves in the
    direction sign(F''(kappa*) F'''(kappa*)); this is compared with the
    motion measured one offset into the complex side.

    Raises:
        ValidationError: the event is not a localized coalescence
        DegenerateJet: F'' or F''' vanishes at kappa*
    """
    coordinate = event.parameter

    def system_at(value: float) -> CanonicalSystem:
        return sys.with_coordinate(coordinate, value)

    start = float(_pair_centre(eigenvalues(system_at(event.parameter_value)).as_array()).real)
    kappa = _polish_stationary(sys, start, coordinate)
    value, _, second, third = level_jet(sys, kappa, coordinate)

    roots = eigenvalues(system_at(value)).as_array()
    nearest = roots[np.argsort(np.abs(roots - kappa), kind='stable')[:2]]
    gap = float(abs(nearest[0] - nearest[1]))
    if gap >= config.TOLERANCES['coincidence']:
        error_msg = (f"no root coalescence near kappa={kappa:.10g} "
                     f"(pair gap {gap:.3g} at parameter {value:.10g})")
        logger.error(error_msg)
        raise validator.ValidationError(error_msg, kappa=kappa, gap=gap)

    side = -1 if second > 0 else 1
    measured = _measure_motion(system_at, value, side, kappa)

    tol = config.TOLERANCES['jet'] * _jet_scale(sys)
    if abs(second) < tol or abs(third) < tol:
        error_msg = (f"degenerate jet at kappa*={kappa:.10g}: F''={second:.3g}, "
                     f"F'''={third:.3g}; measured real-part motion {measured:.3g}")
        logger.warning(f"  ⚠ {error_msg}")
        raise validator.DegenerateJet(error_msg, measured_motion=measured)

    predicted = int(np.sign(second * third))
    agrees = _motion_sign(measured, kappa) == predicted
    if agrees:
        logger.info(f"  ✓ Bifurcation at kappa*={kappa:.8g}: real part moves {predicted:+d}")
    else:
        logger.warning(f"  ⚠ Measured motion {measured:.3g} contradicts prediction {predicted:+d}")
    return BifurcationClass(kappa, float(value), float(second), float(third),
                            predicted, measured, agrees)


# ============================================================
# ASYMPTOTES
# ============================================================

def asymptote_info(sys: CanonicalSystem, j: int) -> AsymptoteInfo:
    """
    Expansion of the unbounded branch as coordinate j grows without bound.

    For omega_j -> +inf: with delta_j = -1 a conjugate pair with
    Re = (lambda_j + beta)/2 + A_j/(2 omega_j) and Im ~ sqrt(omega_j); with
    delta_j = +1 two real branches (lambda_j + beta)/2 +/- sqrt(omega_j),
    whose midpoint is offset by -A_j/(2 omega_j). For beta -> +inf a single
    root kappa = beta + sum(c)/beta.

    Raises:
        ZeroA: the first-order coefficient vanishes
    """
    validator.check_coordinate(j, sys.n)
    couplings = sys.couplings
    lambdas = sys.lambdas

    if j == sys.n + 1:
        a_j = float(np.sum(couplings))
    else:
        others = np.arange(sys.n) != j - 1
        a_j = float(np.sum(couplings[others] * (lambdas[j - 1] - lambdas[others])))

    scale = 1.0 + float(np.sum(np.abs(couplings))) * float(np.max(lambdas))
    if abs(a_j) <= config.TOLERANCES['zero_a'] * scale:
        error_msg = (f"first-order coefficient vanishes for {coordinate_name(j, sys.n)}; "
                     f"the correction order changes")
        logger.warning(f"  ⚠ {error_msg}")
        raise validator.ZeroA(error_msg, index=j)

    if j == sys.n + 1:
        return AsymptoteInfo(j, a_j, None, 'linear', -1.0, a_j)

    center = 0.5 * float(lambdas[j - 1] + sys.beta)
    delta = sys.deltas[j - 1]
    if delta < 0:
        return AsymptoteInfo(j, a_j, center, 'conjugate', -1.0, 0.5 * a_j, im_exponent=0.5)
    return AsymptoteInfo(j, a_j, center, 'real-branches', -1.0, -0.5 * a_j, branch_exponent=0.5)


def fit_asymptote(sys: CanonicalSystem, j: int,
                  values: Optional[Sequence[float]] = None) -> AsymptoteFit:
    """
    Regress the computed unbounded branch against the expansion of asymptote_info.

    Args:
        sys: Canonical system
        j: Coordinate 1..n+1
        values: Large coordinate values; defaults to LOCUS['asymptote_omegas']

    Returns:
        AsymptoteFit with log-log slopes and the fitted correction coefficient
    """
    info = asymptote_info(sys, j)
    values = np.asarray(config.LOCUS['asymptote_omegas'] if values is None else values,
                        dtype=float)
    validator.check_samples(values.size, minimum=2, name='asymptote values')
    logs = np.log(values)

    corrections, imaginary, branches, bounded = [], [], [], None
    for value in values:
        roots = eigenvalues(sys.with_coordinate(j, value)).as_array()
        if info.law == 'linear':
            root = roots[np.argmin(np.abs(roots - value))]
            corrections.append(root.real - value)
            continue
        order = np.argsort(-np.abs(roots - info.center), kind='stable')
        pair = roots[order[:2]]
        corrections.append(float(np.mean(pair.real)) - info.center)
        imaginary.append(float(np.max(np.abs(pair.imag))))
        branches.append(float(np.max(pair.real)) - info.center)
        rest = roots[order[2:]]
        targets = np.delete(sys.lambdas, j - 1)
        if rest.size:
            bounded = float(np.max(np.min(np.abs(rest[:, None] - targets[None, :]), axis=1)))

    corrections = np.asarray(corrections)
    re_slope, re_intercept = np.polyfit(logs, np.log(np.abs(corrections)), 1)
    coefficient = float(np.sign(corrections[-1]) * np.exp(re_intercept))

    im_slope = branch_slope = None
    if info.law == 'conjugate':
        im_slope = float(np.polyfit(logs, np.log(imaginary), 1)[0])
    elif info.law == 'real-branches':
        branch_slope = float(np.polyfit(logs, np.log(branches), 1)[0])

    logger.debug(f"Asymptote fit for {coordinate_name(j, sys.n)}: re slope {re_slope:.4f}, "
                 f"coefficient {coefficient:.6g} (predicted {info.predicted_coefficient:.6g})")
    return AsymptoteFit(j, tuple(values.tolist()), float(re_slope), coefficient,
                        info.predicted_coefficient, im_slope, branch_slope, bounded)


# ============================================================
# TWO-POLE CIRCLE
# ============================================================

def circle_two_pole(tau: float, t_coeff: float, k: float) -> CirclePair:
    """
    Conjugate roots of z^2 - (tau + (1 - T^2)/k) z + tau/k for k in [K-, K+].

    The roots lie on the circle centred at tau/(1 - T^2) with radius
    tau T / |1 - T^2|, whose real-axis crossings are tau/(1 +/- T). At the band
    ends the roots coincide; for T = 1 they lie on Re z = tau/2 and the
    circle degenerates (center and radius are reported as inf).

    Raises:
        OutOfBand: k outside [K-, K+], where the roots are real and distinct
    """
    validator.check_positive('tau', tau)
    validator.check_positive('t_coeff', t_coeff)
    k_lo = (1.0 - t_coeff) ** 2 / tau
    k_hi = (1.0 + t_coeff) ** 2 / tau
    tol = config.TOLERANCES['boundary'] * (1.0 + k_hi)
    if k <= 0 or k < k_lo - tol or k > k_hi + tol:
        error_msg = f"k={k:g} outside the band [{k_lo:.6g}, {k_hi:.6g}]; roots are real"
        logger.error(error_msg)
        raise validator.OutOfBand(error_msg, k=k, band=[k_lo, k_hi])

    half_sum = 0.5 * (tau + (1.0 - t_coeff ** 2) / k)
    product = tau / k
    discriminant = min(half_sum ** 2 - product, 0.0)
    spread = np.sqrt(-discriminant)
    roots = np.array([complex(half_sum, spread), complex(half_sum, -spread)])

    if t_coeff == 1.0:
        center = radius = np.inf
    else:
        center = tau / (1.0 - t_coeff ** 2)
        radius = tau * t_coeff / abs(1.0 - t_coeff ** 2)
    return CirclePair(roots, center, radius, (k_lo, k_hi))


def circle_deviation(points: Sequence[complex]) -> CircleFit:
    """
    Least-squares circle centred on the real axis through locus points.

    Fits x^2 + y^2 = 2 c x + (r^2 - c^2) and reports the largest radial
    deviation of the points from the fitted circle.
    """
    z = np.asarray(points, dtype=complex).ravel()
    validator.check_samples(z.size, minimum=2, name='circle points')
    x, y = z.real, z.imag
    design = np.column_stack([2.0 * x, np.ones_like(x)])
    (center, offset), *_ = np.linalg.lstsq(design, x ** 2 + y ** 2, rcond=None)
    radius = float(np.sqrt(max(offset + center ** 2, 0.0)))
    deviation = float(np.max(np.abs(np.abs(z - center) - radius)))
    return CircleFit(float(center), radius, deviation, int(z.size))

"""
VALUATION MODULE
----------------
Forward simulation of Z_{t+1} = H Z_t and equity valuation of the dividend stream.

Key Responsibilities:
* Simulation: exact linear iteration with an overflow guard.
* Equity: P_0(R) = sum_{t >= 1} R^-t d_t computed three ways (truncated series,
  eigen-decomposition, resolvent) and cross-checked. Continuous mode values
  the integral of e^-rt D_t with the same three forms (quadrature in place
  of the series).
* Closed Forms: at R = lambda_j the value no longer depends on the policy;
  the report names the closed form the series supports.
* DPI Probe: samples policies in a ball around the base policy on a thread
  pool and decides whether P_0 is locally constant there.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, linalg

import config
from modules import validator
from modules.model import CanonicalSystem, build_h

logger = logging.getLogger(__name__)

IRRELEVANT = 'irrelevant'
RELEVANT = 'relevant'
INCONCLUSIVE = 'inconclusive'


# ============================================================
# TYPES
# ============================================================

@dataclass(frozen=True)
class InitialState:
    """Initial accounting variables z0 and dividend d0."""

    z0: Tuple[float, ...]
    d0: float

    def __post_init__(self):
        object.__setattr__(self, 'z0', tuple(float(x) for x in self.z0))
        object.__setattr__(self, 'd0', float(self.d0))
        validator.check_initial_state(self.z0, self.d0, len(self.z0))

    def vector(self) -> np.ndarray:
        return np.append(np.array(self.z0), self.d0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States Z_0..Z_T; the last column is the dividend."""

    states: np.ndarray

    @property
    def dividends(self) -> np.ndarray:
        return self.states[:, -1]

    def to_frame(self) -> pd.DataFrame:
        n = self.states.shape[1] - 1
        frame = pd.DataFrame(self.states, columns=[f'z{j}' for j in range(1, n + 1)] + ['d'])
        frame.insert(0, 't', np.arange(self.states.shape[0]))
        return frame


@dataclass(frozen=True)
class ValuationReport:
    rate: float
    continuous: bool
    p0_series: float
    p0_modal: float
    p0_resolvent: float
    truncation_t: int
    converged: bool
    agree: bool
    kappa_max: float
    closed_form_index: Optional[int] = None
    closed_forms: Dict[str, float] = field(default_factory=dict)
    closed_form_variant: Optional[str] = None
    modal_available: bool = True

    @property
    def value(self) -> float:
        """Modal value, or the resolvent value when H has no usable eigenbasis."""
        return self.p0_modal if self.modal_available else self.p0_resolvent

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class BallCheck:
    """Repeat of the probe on a disjoint ball of the same radius."""

    center: Tuple[float, ...]
    max_spread: float
    rejected: int
    constant: bool

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class DPIReport:
    rate: float
    base_value: float
    samples: tuple
    max_spread: float
    tolerance: float
    rejected: int
    verdict: str
    formula_value: Optional[float]
    anomaly_excluded: bool
    seed: int
    order_reduced: Tuple[int, ...] = ()
    second_ball: Optional[BallCheck] = None

    def to_dict(self) -> Dict:
        return {
            'rate': self.rate,
            'base_value': self.base_value,
            'samples': [{'policy': list(p), 'p0': v} for p, v in self.samples],
            'max_spread': self.max_spread,
            'tolerance': self.tolerance,
            'rejected': self.rejected,
            'verdict': self.verdict,
            'formula_value': self.formula_value,
            'anomaly_excluded': self.anomaly_excluded,
            'order_reduced': list(self.order_reduced),
            'second_ball': None if self.second_ball is None else self.second_ball.to_dict(),
            'seed': self.seed,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for policy, value in self.samples:
            row = {f'p{i}': x for i, x in enumerate(policy, start=1)}
            row['p0'] = value
            rows.append(row)
        return pd.DataFrame(rows)


# ============================================================
# SIMULATION
# ============================================================

def simulate(sys: CanonicalSystem, init: InitialState, horizon: int) -> Trajectory:
    """
    Iterate Z_{t+1} = H Z_t from Z_0 = (z0, d0) for horizon steps.

    Raises:
        Overflow: a component exceeds the overflow threshold
    """
    validator.check_samples(horizon, minimum=1, name='horizon')
    validator.check_initial_state(init.z0, init.d0, sys.n)
    matrix = build_h(sys)
    limit = config.TOLERANCES['overflow']

    states = np.empty((horizon + 1, sys.n + 1))
    states[0] = init.vector()
    for t in range(1, horizon + 1):
        states[t] = matrix @ states[t - 1]
        if not np.all(np.abs(states[t]) <= limit):
            error_msg = f"state exceeded {limit:g} at t={t}"
            logger.error(error_msg)
            raise validator.Overflow(error_msg, t=t)
    return Trajectory(states)


# ============================================================
# EQUITY
# ============================================================

def _modal_weights(matrix: np.ndarray, z0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues kappa_h and weights l_h with d_t = sum_h l_h kappa_h^t.

    Raises:
        DefectiveEigenbasis: H has a repeated eigenvalue without a full,
            well-conditioned set of eigenvectors (a bifurcation point)
    """
    kappas, vectors = np.linalg.eig(matrix)
    condition = float(np.linalg.cond(vectors))
    if not condition <= config.VALUATION['modal_condition']:
        raise validator.DefectiveEigenbasis(
            f"eigenvector basis of H is ill-conditioned (cond={condition:.3g})",
            condition=condition)
    try:
        coefficients = np.linalg.solve(vectors, z0)
    except np.linalg.LinAlgError as e:
        raise validator.DefectiveEigenbasis(f"eigenvector basis of H is singular: {e}",
                                            condition=condition) from e
    return kappas, vectors[-1, :] * coefficients


def closed_forms(sys: CanonicalSystem, init: InitialState, rate: float,
                 continuous: bool = False) -> Tuple[Optional[int], Dict[str, float]]:
    """
    Policy-free values of P_0 when the rate equals a reduced eigenvalue lambda_j.

    Discrete: 'dividend_inclusive' solves d0 + P0 = -R z0_j / delta_j and
    'dividend_exclusive' reads P0 = d0 - R z0_j / delta_1. Continuous:
    P0 = -z0_j / delta_j.
    """
    lambdas = sys.lambdas
    hits = np.flatnonzero(np.abs(lambdas - rate) <= config.TOLERANCES['resonance'] * (1.0 + lambdas))
    if hits.size == 0:
        return None, {}
    j = int(hits[0])
    z_j, delta_j = init.z0[j], sys.deltas[j]
    if continuous:
        return j + 1, {'continuous': float(-z_j / delta_j)}
    return j + 1, {
        'dividend_inclusive': float(-rate * z_j / delta_j - init.d0),
        'dividend_exclusive': float(init.d0 - rate * z_j / sys.deltas[0]),
    }


def _series(matrix: np.ndarray, z0: np.ndarray, rate: float, ratio: float,
            weight: Optional[float]) -> Tuple[float, int, bool]:
    """Truncated discounted sum; without modal weights the tail is estimated from the current state."""
    settings = config.VALUATION
    state = z0.copy()
    total = 0.0
    scaled = matrix / rate
    for t in range(1, settings['max_terms'] + 1):
        state = scaled @ state
        total += state[-1]
        if weight is None:
            tail = float(np.sum(np.abs(state))) * ratio / (1.0 - ratio)
        else:
            tail = weight * ratio ** (t + 1) / (1.0 - ratio)
        if tail < settings['series_tail']:
            return float(total), t, True
    return float(total), settings['max_terms'], False


def _quadrature(matrix: np.ndarray, z0: np.ndarray, rate: float) -> Tuple[float, int, bool]:
    shifted = matrix - rate * np.eye(matrix.shape[0])

    def integrand(t: float) -> float:
        return float((linalg.expm(shifted * t) @ z0)[-1])

    result = integrate.quad(integrand, 0.0, np.inf,
                            limit=config.VALUATION['quad_limit'], full_output=True)
    value, error, info = result[:3]
    converged = error <= config.VALUATION['agreement'] * (1.0 + abs(value))
    return float(value), int(info['neval']), bool(converged)


def equity(sys: CanonicalSystem, init: InitialState, rate: float,
           continuous: bool = False) -> ValuationReport:
    """
    Equity value of the dividend stream at discount rate R.

    Discrete: P0 = sum_{t >= 1} R^-t d_t = sum_h l_h kappa_h / (R - kappa_h)
    = e^T (R I - H)^-1 H Z_0. Continuous: P0 = integral of e^-rt D_t
    = sum_h l_h / (r - kappa_h) = e^T (r I - H)^-1 Z_0.

    Args:
        sys: Canonical system
        init: Initial state
        rate: Discount rate (R, or r in continuous mode)
        continuous: Value the continuous-time flow instead

    Returns:
        ValuationReport with the three values and the closed-form adjudication

    Raises:
        DivergentSeries: growth condition violated
        NearResonance: rate within tolerance of an eigenvalue
    """
    validator.check_positive('rate', rate)
    validator.check_initial_state(init.z0, init.d0, sys.n)
    settings = config.VALUATION
    matrix = build_h(sys)
    z0 = init.vector()
    try:
        kappas, weights = _modal_weights(matrix, z0)
    except validator.DefectiveEigenbasis as e:
        logger.warning(f"  ⚠ Modal form unavailable ({e}); using series and resolvent")
        kappas, weights = np.linalg.eigvals(matrix), None

    if continuous:
        kappa_max = float(np.max(kappas.real))
        growing = not kappa_max < rate - settings['growth_margin']
        condition = f"max Re kappa = {kappa_max:.6g} must stay below r = {rate:g}"
    else:
        kappa_max = float(np.max(np.abs(kappas)))
        growing = not rate > kappa_max + settings['growth_margin']
        condition = f"|kappa_max| = {kappa_max:.6g} must stay below R = {rate:g}"
    if growing:
        logger.debug(f"Growth condition violated: {condition}")
        raise validator.DivergentSeries(f"growth condition violated: {condition}",
                                        rate=rate, kappa_max=kappa_max)

    resonance = float(np.min(np.abs(rate - kappas)))
    if resonance < config.TOLERANCES['resonance']:
        raise validator.NearResonance(f"rate {rate:g} within {resonance:.3g} of an eigenvalue",
                                      rate=rate)

    identity = np.eye(sys.n + 1)
    modal = np.nan
    if continuous:
        if weights is not None:
            modal = complex(np.sum(weights / (rate - kappas))).real
        resolvent = float(np.linalg.solve(rate * identity - matrix, z0)[-1])
        series, truncation, converged = _quadrature(matrix, z0, rate)
    else:
        if weights is not None:
            modal = complex(np.sum(weights * kappas / (rate - kappas))).real
        resolvent = float(np.linalg.solve(rate * identity - matrix, matrix @ z0)[-1])
        ratio = float(np.max(np.abs(kappas))) / rate
        series, truncation, converged = _series(
            matrix, z0, rate, ratio, None if weights is None else float(np.sum(np.abs(weights))))

    reference = resolvent if weights is None else modal
    scale = settings['agreement'] * (1.0 + abs(reference))
    agree = (converged and abs(series - reference) <= scale
             and abs(resolvent - reference) <= scale)
    if not agree:
        logger.warning(f"  ⚠ Valuation methods disagree: series={series:.10g}, "
                       f"modal={modal:.10g}, resolvent={resolvent:.10g}")

    index, forms = closed_forms(sys, init, rate, continuous)
    variant = None
    for name, value in forms.items():
        if abs(value - series) <= settings['agreement'] * (1.0 + abs(series)):
            variant = name
            break

    return ValuationReport(
        rate=float(rate), continuous=continuous, p0_series=series, p0_modal=float(modal),
        p0_resolvent=resolvent, truncation_t=truncation, converged=converged, agree=agree,
        kappa_max=kappa_max, closed_form_index=index, closed_forms=forms,
        closed_form_variant=variant, modal_available=weights is not None,
    )


# ============================================================
# DIVIDEND-POLICY IRRELEVANCE PROBE
# ============================================================

def thread_count() -> int:
    """Worker cap from the environment, read at call time."""
    value = os.environ.get(config.RUNTIME['threads_env'])
    if value is None:
        return config.RUNTIME['default_threads']
    return validator.check_thread_cap(value)


def sample_ball(center: np.ndarray, radius: float, samples: int, seed: int) -> np.ndarray:
    """Points uniform in the ball, one independent PCG64 stream per sample."""
    dimension = center.size
    points = np.empty((samples, dimension))
    streams = np.random.SeedSequence(seed).spawn(samples)
    for i, stream in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        direction = rng.standard_normal(dimension)
        direction /= np.linalg.norm(direction)
        points[i] = center + radius * rng.random() ** (1.0 / dimension) * direction
    return points


def _anomaly_excluded(sys: CanonicalSystem) -> bool:
    """delta_1 = -1, beta >= 2 lambda_2 - lambda_1 and a nonzero first-order asymptote."""
    if sys.n < 2:
        return False
    lambdas, couplings = sys.lambdas, sys.couplings
    a_1 = float(np.sum(couplings[1:] * (lambdas[0] - lambdas[1:])))
    return bool(sys.deltas[0] < 0 and sys.beta >= 2.0 * lambdas[1] - lambdas[0]
                and abs(a_1) > config.TOLERANCES['zero_a'])


def order_reduced(sys: CanonicalSystem) -> Tuple[int, ...]:
    """Indices k with delta_k omega_k = 0; each lambda_k is then an eigenvalue of H."""
    return tuple(int(k) + 1 for k in
                 np.flatnonzero(np.abs(sys.couplings) <= config.TOLERANCES['zero_a']))


def _check_order_reduction(sys: CanonicalSystem, rate: float) -> Tuple[int, ...]:
    reduced = order_reduced(sys)
    for k in reduced:
        lam = sys.lambdas[k - 1]
        if abs(rate - lam) <= config.TOLERANCES['resonance'] * (1.0 + lam):
            error_msg = (f"rate {rate:g} equals lambda_{k}, which is an eigenvalue of H "
                         f"because delta_{k} omega_{k} = 0; the growth condition fails")
            logger.error(error_msg)
            raise validator.DivergentSeries(error_msg, rate=rate, index=k, precluded=True)
    return reduced


def _policy_values(sys: CanonicalSystem, init: InitialState, rate: float, continuous: bool,
                  points: np.ndarray) -> List[Optional[float]]:
    """P_0 at each policy point; None where the growth condition rejects it."""
    def evaluate(point: np.ndarray) -> Optional[float]:
        candidate = sys.with_policy(omegas=point[:-1], beta=point[-1])
        try:
            report = equity(candidate, init, rate, continuous)
        except (validator.DivergentSeries, validator.NearResonance, validator.MethodDisagreement):
            return None
        return report.value if report.converged else None

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(evaluate, points))


def _second_ball(sys: CanonicalSystem, init: InitialState, rate: float, continuous: bool,
                 radius: float, samples: int, seed: int, direction: np.ndarray,
                 base: float, tolerance: float) -> Optional[BallCheck]:
    """
    Repeat the probe on a disjoint ball reached along a convergent segment.

    P_0 is rational in the policy, so constancy on one ball carries over to
    every ball joined to it inside the convergence region. Returns None when
    the segment leaves that region.
    """
    settings = config.DPI
    center = sys.policy.as_vector()
    norm = float(np.linalg.norm(direction))
    unit = direction / norm if norm > 0.0 else np.eye(center.size)[0]
    target = center + settings['second_ball_offset'] * radius * unit

    segment = center + np.linspace(0.0, 1.0, settings['segment_checks'])[:, None] * (target - center)
    if any(v is None for v in _policy_values(sys, init, rate, continuous, segment)):
        logger.warning("  ⚠ Segment to the second ball leaves the convergence region")
        return None

    points = sample_ball(target, radius, samples, seed + 1)
    values = _policy_values(sys, init, rate, continuous, points)
    accepted = np.array([v for v in values if v is not None])
    rejected = len(values) - accepted.size
    spread = float(np.max(np.abs(accepted - base))) if accepted.size else np.inf
    constant = rejected == 0 and spread < tolerance
    logger.info(f"  {'✓' if constant else '⚠'} Second ball: spread {spread:.3g}, "
                f"{rejected} rejected")
    return BallCheck(tuple(target.tolist()), spread, rejected, constant)


def dpi_probe(sys: CanonicalSystem, init: InitialState, rate: float,
              radius: Optional[float] = None, samples: Optional[int] = None,
              seed: Optional[int] = None, continuous: bool = False) -> DPIReport:
    """
    Probe local dividend-policy irrelevance at a rate.

    Policies (omega, beta) are drawn uniformly from a ball around the base
    policy; samples violating the growth condition are rejected. The verdict
    is 'irrelevant' only when every sample is accepted and P_0 is constant
    to tolerance, 'relevant' when accepted samples spread beyond tolerance,
    and 'inconclusive' otherwise or when more than the allowed fraction is
    rejected. An 'irrelevant' verdict is repeated on a second, disjoint ball.

    Raises:
        DivergentSeries: the base policy violates the growth condition, or
            the rate equals an order-reduced lambda_k (details carry
            precluded=True and the index)
        AllSamplesRejected: no sample satisfies the growth condition
    """
    settings = config.DPI
    radius = settings['default_radius'] if radius is None else radius
    samples = settings['default_samples'] if samples is None else samples
    seed = settings['default_seed'] if seed is None else seed
    validator.check_positive('radius', radius)
    validator.check_samples(samples, minimum=settings['min_samples'])

    reduced = _check_order_reduction(sys, rate)
    base = equity(sys, init, rate, continuous).value
    center = sys.policy.as_vector()
    points = sample_ball(center, radius, samples, seed)

    logger.info(f"Probing {samples} policies within {radius:g} at rate {rate:g} "
                f"({thread_count()} thread(s))")
    values = _policy_values(sys, init, rate, continuous, points)

    accepted = [v for v in values if v is not None]
    rejected = len(values) - len(accepted)
    if not accepted:
        error_msg = f"all {samples} probe policies violate the growth condition at rate {rate:g}"
        logger.error(error_msg)
        raise validator.AllSamplesRejected(error_msg, rate=rate, radius=radius)

    spread = float(np.max(np.abs(np.array(accepted) - base)))
    tolerance = settings['spread_tolerance'] * (1.0 + abs(base))
    if rejected / samples > settings['max_rejection_rate']:
        verdict = INCONCLUSIVE
    elif spread >= tolerance:
        verdict = RELEVANT
    elif rejected:
        verdict = INCONCLUSIVE
    else:
        verdict = IRRELEVANT

    second = None
    if verdict == IRRELEVANT:
        second = _second_ball(sys, init, rate, continuous, radius, samples, int(seed),
                              points[0] - center, base, tolerance)

    _, forms = closed_forms(sys, init, rate, continuous)
    formula_value = next(iter(forms.values()), None)
    logger.info(f"  ✓ Verdict {verdict}: spread {spread:.3g}, {rejected} rejected")
    return DPIReport(
        rate=float(rate), base_value=float(base),
        samples=tuple((tuple(p.tolist()), v) for p, v in zip(points, values)),
        max_spread=spread, tolerance=tolerance, rejected=rejected, verdict=verdict,
        formula_value=formula_value, anomaly_excluded=_anomaly_excluded(sys), seed=int(seed),
        order_reduced=reduced, second_ball=second,
    )

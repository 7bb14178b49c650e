"""
VALIDATION MODULE
-----------------
Provides runtime integrity checks and the error taxonomy for the toolkit.

Key Responsibilities:
* Critical Path: Validates spectra, sign vectors, policies and CLI parameters.
* Error Taxonomy: Separates bad input (ValidationError, exit code 2) from
  numerical failure (NumericalError, exit code 3).
* Structured Details: Every error carries a details dict that the CLI
  serializes as machine-readable JSON.

Enforces a 'fail-fast' policy: problems are collected, logged, and raised
together.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

import config
from modules.exporter import jsonable

logger = logging.getLogger(__name__)


# ============================================================
# ERROR TAXONOMY
# ============================================================

class ValidationError(Exception):
    """Custom exception for critical validation failures."""

    category = 'validation'
    exit_code = 2

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details: Dict = details

    def to_dict(self) -> Dict:
        return {
            'error': type(self).__name__,
            'category': self.category,
            'message': str(self),
            'details': jsonable(self.details),
        }


class NotDiagonalizable(ValidationError):
    """Reduced matrix has no well-conditioned eigenbasis."""


class ComplexOrRepeatedEigenvalues(ValidationError):
    """Reduced spectrum is not real, positive and distinct."""


class ZeroSignificanceCoefficient(ValidationError):
    """A border coefficient vanishes in the eigenbasis."""

    def __init__(self, message: str, index: int, **details):
        super().__init__(message, index=index, **details)
        self.index = index


class OutOfBand(ValidationError):
    """Two-pole level lies outside the band of complex roots."""


class NegativeDiscriminant(ValidationError):
    """K(epsilon) endpoints are not real."""


class HypothesesNotMet(ValidationError):
    """Sign corollary hypotheses do not hold; no sign claims are made."""


class NumericalError(Exception):
    """Base class for numerical failures during a computation."""

    category = 'numerical'
    exit_code = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details: Dict = details

    def to_dict(self) -> Dict:
        return {
            'error': type(self).__name__,
            'category': self.category,
            'message': str(self),
            'details': jsonable(self.details),
        }


class PoleProximity(NumericalError):
    """Evaluation point too close to a pole of a polar form."""


class MethodDisagreement(NumericalError):
    """Dense eigen-solve and polynomial root-find disagree."""


class LabelCollision(NumericalError):
    """Continuation could not separate two roots."""

    def __init__(self, message: str, parameter: float, **details):
        super().__init__(message, parameter=parameter, **details)
        self.parameter = parameter


class DegenerateJet(NumericalError):
    """Second or third derivative of the level function vanishes."""

    def __init__(self, message: str, measured_motion: float, **details):
        super().__init__(message, measured_motion=measured_motion, **details)
        self.measured_motion = measured_motion


class ZeroA(NumericalError):
    """Asymptotic coefficient A_j vanishes; the expansion order changes."""


class IllConditioned(NumericalError):
    """Zero placement failed its forward check."""

    def __init__(self, message: str, residual: float, **details):
        super().__init__(message, residual=residual, **details)
        self.residual = residual


class CriticalPoint(NumericalError):
    """Two labeled roots nearly coincide; derivatives are unbounded."""

    def __init__(self, message: str, pair, **details):
        super().__init__(message, pair=list(pair), **details)
        self.pair = tuple(pair)


class Overflow(NumericalError):
    """Forward simulation exceeded the overflow threshold."""

    def __init__(self, message: str, t: int, **details):
        super().__init__(message, t=t, **details)
        self.t = t


class DivergentSeries(NumericalError):
    """Growth condition violated: the valuation series diverges."""


class NearResonance(NumericalError):
    """Discount rate coincides with an eigenvalue."""


class AllSamplesRejected(NumericalError):
    """Every probe sample violated the convergence guard."""


class DefectiveEigenbasis(NumericalError):
    """Eigenvectors of H are singular or too ill-conditioned for the modal form."""

    def __init__(self, message: str, condition: float, **details):
        super().__init__(message, condition=condition, **details)
        self.condition = condition


# ============================================================
# INPUT CHECKS
# ============================================================

def check_finite(name: str, values: Sequence[float]) -> None:
    """
    Validation #1: All entries of a numeric field are finite reals.
    CRITICAL - Fails fast on NaN or infinity.
    """
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        error_msg = f"{name} contains non-finite entries: {array.tolist()}"
        logger.error(error_msg)
        raise ValidationError(error_msg, field=name)


def check_spectrum(lambdas: Sequence[float]) -> None:
    """
    Validation #2: Reduced spectrum is positive, strictly decreasing and separated.
    CRITICAL - Fails fast. Every downstream formula divides by lambda_j - lambda_k.
    """
    logger.debug("Validating reduced spectrum...")
    check_finite('lambdas', lambdas)
    values = np.asarray(lambdas, dtype=float)

    errors: List[str] = []
    if values.ndim != 1 or values.size < 1:
        errors.append("lambdas must be a non-empty list")
    else:
        if np.any(values <= 0):
            errors.append(f"lambdas must be strictly positive, got {values.tolist()}")
        if np.any(np.diff(values) >= 0):
            errors.append(f"lambdas must be strictly decreasing, got {values.tolist()}")

    if errors:
        error_msg = "Invalid reduced spectrum:\n  " + "\n  ".join(errors)
        logger.error(error_msg)
        raise ValidationError(error_msg, lambdas=values.tolist())

    check_distinct(values)


def check_distinct(values: np.ndarray) -> None:
    """
    Validation #3: Relative gap between consecutive eigenvalues.
    CRITICAL - Repeated eigenvalues are out of scope.
    """
    tol = config.TOLERANCES['distinct_relative_gap']
    ordered = np.sort(np.asarray(values, dtype=float))[::-1]
    gaps = -np.diff(ordered)
    scale = np.maximum(np.abs(ordered[:-1]), np.abs(ordered[1:]))
    repeated = np.flatnonzero(gaps < tol * scale)
    if repeated.size:
        j = int(repeated[0])
        error_msg = (f"Repeated eigenvalues {ordered[j]!r} and {ordered[j + 1]!r} "
                     f"(relative gap below {tol:g})")
        logger.error(error_msg)
        raise ComplexOrRepeatedEigenvalues(error_msg, pair=[j + 1, j + 2])


def check_signs(deltas: Sequence[float], n: Optional[int] = None) -> None:
    """
    Validation #4: Significance coefficients are exactly +1 or -1.
    CRITICAL - Fails fast.
    """
    values = np.asarray(deltas, dtype=float)
    errors: List[str] = []
    if values.ndim != 1 or not np.all(np.isin(values, (-1.0, 1.0))):
        errors.append(f"deltas must contain only +1 or -1, got {values.tolist()}")
    if n is not None and values.size != n:
        errors.append(f"expected {n} deltas, got {values.size}")

    if errors:
        error_msg = "Invalid signs:\n  " + "\n  ".join(errors)
        logger.error(error_msg)
        raise ValidationError(error_msg)


def check_policy(omegas: Sequence[float], beta: float, n: Optional[int] = None) -> None:
    """
    Validation #5: Policy vector is finite and sized to the spectrum.
    CRITICAL - Fails fast.
    """
    check_finite('omegas', omegas)
    check_finite('beta', [beta])
    if n is not None and len(omegas) != n:
        error_msg = f"expected {n} omegas, got {len(omegas)}"
        logger.error(error_msg)
        raise ValidationError(error_msg)


def check_samples(samples: int, minimum: int = 2, name: str = 'samples') -> None:
    """
    Validation #6: Sample counts for traces and probes.
    CRITICAL - Rejected before any computation.
    """
    if not isinstance(samples, (int, np.integer)) or samples < minimum:
        error_msg = f"{name} must be an integer >= {minimum}, got {samples!r}"
        logger.error(error_msg)
        raise ValidationError(error_msg, **{name: samples})


def check_range(lo: float, hi: float) -> None:
    """
    Validation #7: Parameter range is finite and ordered.
    CRITICAL - Fails fast.
    """
    check_finite('range', [lo, hi])
    if lo > hi:
        error_msg = f"range must satisfy lo <= hi, got [{lo}, {hi}]"
        logger.error(error_msg)
        raise ValidationError(error_msg, lo=lo, hi=hi)


def check_positive(name: str, value: float) -> None:
    """
    Validation #8: Strictly positive scalar (rates, radii, tau).
    CRITICAL - Fails fast.
    """
    if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value) and value > 0):
        error_msg = f"{name} must be a positive finite number, got {value!r}"
        logger.error(error_msg)
        raise ValidationError(error_msg, **{name: value})


def check_monic(coeffs: Sequence[float], degree: Optional[int] = None) -> None:
    """
    Validation #9: Target polynomial is real, finite and monic.
    CRITICAL - Fails fast.
    """
    values = np.asarray(coeffs)
    if np.iscomplexobj(values):
        error_msg = "target coefficients must be real (conjugate-closed roots)"
        logger.error(error_msg)
        raise ValidationError(error_msg)
    check_finite('coefficients', values)

    errors: List[str] = []
    if values.ndim != 1 or values.size < 2:
        errors.append("polynomial needs degree >= 1")
    elif values[0] != 1.0:
        errors.append(f"leading coefficient must be 1, got {values[0]!r}")
    if degree is not None and values.size != degree + 1:
        errors.append(f"expected degree {degree}, got {values.size - 1}")

    if errors:
        error_msg = "Invalid polynomial:\n  " + "\n  ".join(errors)
        logger.error(error_msg)
        raise ValidationError(error_msg, coeffs=values.tolist())


def check_coordinate(coordinate: int, n: int) -> None:
    """
    Validation #10: Policy coordinate index lies in 1..n+1.
    CRITICAL - Fails fast.
    """
    if not 1 <= coordinate <= n + 1:
        error_msg = f"coordinate must lie in 1..{n + 1}, got {coordinate}"
        logger.error(error_msg)
        raise ValidationError(error_msg, coordinate=coordinate)


def check_initial_state(z0: Sequence[float], d0: float, n: int) -> None:
    """
    Validation #11: Initial state is finite and matches the spectrum size.
    CRITICAL - Fails fast.
    """
    check_finite('z0', z0)
    check_finite('d0', [d0])
    if len(z0) != n:
        error_msg = f"expected {n} entries in z0, got {len(z0)}"
        logger.error(error_msg)
        raise ValidationError(error_msg)


def check_thread_cap(value: str) -> int:
    """
    Validation #12: Parse the thread cap environment variable.
    WARNING - Falls back to the configured default on bad values.
    """
    default = config.RUNTIME['default_threads']
    try:
        threads = int(value)
    except (TypeError, ValueError):
        logger.warning(f"  ⚠ {config.RUNTIME['threads_env']}={value!r} is not an integer, "
                       f"using {default}")
        return default
    if threads < 1:
        logger.warning(f"  ⚠ {config.RUNTIME['threads_env']}={threads} below 1, using 1")
        return 1
    return threads

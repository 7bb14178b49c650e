"""
MODEL MODULE
------------
Domain types for bordered diagonal systems and their canonical form.

Key Responsibilities:
* Types: ReducedSpectrum, Signs, Policy, CanonicalSystem, GeneralSystem.
* Canonicalization: diagonalizes a general (A, b, w, beta) system and rescales
  the border column to signs delta_j = +/-1.
* Matrix Construction: builds the dense bordered matrix H(omega).

Policy coordinates are numbered 1..n+1; coordinate n+1 is beta.
"""

import dataclasses
import logging
import re
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

import config
from modules import validator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReducedSpectrum:
    """Eigenvalues lambda_1 > ... > lambda_n > 0 of the reduced matrix."""

    lambdas: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'lambdas', tuple(float(x) for x in self.lambdas))
        validator.check_spectrum(self.lambdas)

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def values(self) -> np.ndarray:
        return np.array(self.lambdas, dtype=float)


@dataclass(frozen=True)
class Signs:
    """Dividend significance coefficients delta_j in {-1, +1}."""

    deltas: Tuple[int, ...]

    def __post_init__(self):
        validator.check_signs(self.deltas)
        object.__setattr__(self, 'deltas', tuple(int(d) for d in self.deltas))

    def values(self) -> np.ndarray:
        return np.array(self.deltas, dtype=float)


@dataclass(frozen=True)
class Policy:
    """Bottom row of the bordered matrix: omega_1..omega_n and beta."""

    omegas: Tuple[float, ...]
    beta: float

    def __post_init__(self):
        validator.check_policy(self.omegas, self.beta)
        object.__setattr__(self, 'omegas', tuple(float(x) for x in self.omegas))
        object.__setattr__(self, 'beta', float(self.beta))

    def values(self) -> np.ndarray:
        return np.array(self.omegas, dtype=float)

    def as_vector(self) -> np.ndarray:
        """Full policy (omega_1, ..., omega_n, beta)."""
        return np.append(self.values(), self.beta)


@dataclass(frozen=True)
class CanonicalSystem:
    """Spectrum, signs and policy; fully determines H(omega)."""

    spectrum: ReducedSpectrum
    signs: Signs
    policy: Policy

    def __post_init__(self):
        n = self.spectrum.n
        if len(self.signs.deltas) != n or len(self.policy.omegas) != n:
            error_msg = (f"inconsistent sizes: {n} lambdas, {len(self.signs.deltas)} deltas, "
                         f"{len(self.policy.omegas)} omegas")
            logger.error(error_msg)
            raise validator.ValidationError(error_msg)

    @classmethod
    def from_arrays(cls, lambdas: Sequence[float], deltas: Sequence[int],
                    omegas: Sequence[float], beta: float) -> 'CanonicalSystem':
        return cls(ReducedSpectrum(tuple(lambdas)), Signs(tuple(deltas)),
                   Policy(tuple(omegas), beta))

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def lambdas(self) -> np.ndarray:
        return self.spectrum.values()

    @property
    def deltas(self) -> np.ndarray:
        return self.signs.values()

    @property
    def omegas(self) -> np.ndarray:
        return self.policy.values()

    @property
    def beta(self) -> float:
        return self.policy.beta

    @property
    def couplings(self) -> np.ndarray:
        """Products c_j = omega_j * delta_j, the similarity invariants."""
        return self.omegas * self.deltas

    @property
    def trace(self) -> float:
        return float(np.sum(self.lambdas) + self.beta)

    def with_policy(self, omegas: Optional[Sequence[float]] = None,
                    beta: Optional[float] = None) -> 'CanonicalSystem':
        policy = Policy(
            tuple(self.policy.omegas if omegas is None else omegas),
            self.policy.beta if beta is None else beta,
        )
        return dataclasses.replace(self, policy=policy)

    def with_coordinate(self, coordinate: int, value: float) -> 'CanonicalSystem':
        validator.check_coordinate(coordinate, self.n)
        if coordinate == self.n + 1:
            return self.with_policy(beta=value)
        omegas = list(self.policy.omegas)
        omegas[coordinate - 1] = value
        return self.with_policy(omegas=omegas)

    def coordinate_value(self, coordinate: int) -> float:
        validator.check_coordinate(coordinate, self.n)
        if coordinate == self.n + 1:
            return self.beta
        return self.policy.omegas[coordinate - 1]

    def scaled_policy(self, t: float) -> 'CanonicalSystem':
        """Point t on the segment from (0, beta) to (omega, beta)."""
        return self.with_policy(omegas=t * self.omegas)

    def to_dict(self) -> Dict:
        return {
            'lambdas': list(self.spectrum.lambdas),
            'deltas': list(self.signs.deltas),
            'omegas': list(self.policy.omegas),
            'beta': self.policy.beta,
        }


@dataclass(frozen=True, eq=False)
class GeneralSystem:
    """Un-normalized system: reduced matrix A, border column b, policy row w, beta."""

    a_matrix: np.ndarray
    b: np.ndarray
    w: np.ndarray
    beta: float

    def __post_init__(self):
        a_matrix = np.atleast_2d(np.asarray(self.a_matrix, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        n = a_matrix.shape[0]
        if a_matrix.shape != (n, n) or b.size != n or w.size != n:
            error_msg = (f"inconsistent shapes: A {a_matrix.shape}, b {b.size}, w {w.size}")
            logger.error(error_msg)
            raise validator.ValidationError(error_msg)
        for name, values in (('A', a_matrix), ('b', b), ('w', w), ('beta', [self.beta])):
            validator.check_finite(name, values)
        object.__setattr__(self, 'a_matrix', a_matrix)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'beta', float(self.beta))

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    def bordered_matrix(self) -> np.ndarray:
        n = self.n
        matrix = np.zeros((n + 1, n + 1))
        matrix[:n, :n] = self.a_matrix
        matrix[:n, n] = self.b
        matrix[n, :n] = self.w
        matrix[n, n] = self.beta
        return matrix


def canonicalize(sys: GeneralSystem) -> CanonicalSystem:
    """
    Reduce a general system to canonical form by diagonalizing A and rescaling.

    With A = S diag(lambda) S^-1, the transformed border column is
    b~ = S^-1 b and the policy row is w~ = S^T w. Conjugating by diag(|b~|, 1)
    makes the border entries delta_j = sign(b~_j) and omega_j = w~_j |b~_j|;
    the bordered matrix stays similar to the input.

    Args:
        sys: General system (A, b, w, beta)

    Returns:
        Canonical system with spectrum sorted decreasing
    """
    tol = config.TOLERANCES
    eigvals, vectors = np.linalg.eig(sys.a_matrix)

    imaginary = np.abs(eigvals.imag) > tol['real_eigenvalue'] * (1.0 + np.abs(eigvals))
    if np.any(imaginary):
        error_msg = f"reduced matrix has complex eigenvalues: {eigvals[imaginary].tolist()}"
        logger.error(error_msg)
        raise validator.ComplexOrRepeatedEigenvalues(error_msg)

    lambdas = eigvals.real
    order = np.argsort(-lambdas, kind='stable')
    lambdas = lambdas[order]
    vectors = _real_eigenvectors(vectors[:, order])

    validator.check_distinct(lambdas)
    if np.any(lambdas <= 0):
        error_msg = f"reduced spectrum must be positive, got {lambdas.tolist()}"
        logger.error(error_msg)
        raise validator.ComplexOrRepeatedEigenvalues(error_msg)

    condition = np.linalg.cond(vectors)
    if not np.isfinite(condition) or condition > tol['diagonalizable_condition']:
        error_msg = f"eigenvector basis is singular or ill-conditioned (cond={condition:.3g})"
        logger.error(error_msg)
        raise validator.NotDiagonalizable(error_msg, condition=float(condition))

    b_eigen = np.linalg.solve(vectors, sys.b)
    w_eigen = vectors.T @ sys.w

    threshold = tol['zero_significance'] * max(np.linalg.norm(sys.a_matrix), 1.0)
    for j, value in enumerate(b_eigen, start=1):
        if abs(value) <= threshold:
            error_msg = (f"significance coefficient {j} vanishes in the eigenbasis "
                         f"(|b_{j}| = {abs(value):.3g}); reduce the order instead")
            logger.error(error_msg)
            raise validator.ZeroSignificanceCoefficient(error_msg, index=j)

    deltas = np.where(b_eigen > 0, 1, -1)
    omegas = w_eigen * np.abs(b_eigen)
    logger.debug(f"Canonicalized system with lambdas {lambdas.tolist()}")
    return CanonicalSystem.from_arrays(lambdas, deltas, omegas, sys.beta)


def _real_eigenvectors(vectors: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its largest entry is real, then drop the imaginary part."""
    if not np.iscomplexobj(vectors):
        return vectors
    pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    phases = np.conj(pivots) / np.abs(pivots)
    return (vectors * phases).real


def build_h(sys: CanonicalSystem) -> np.ndarray:
    """Dense bordered matrix: diag(lambda, beta), last column delta, last row omega."""
    n = sys.n
    matrix = np.diag(np.append(sys.lambdas, sys.beta))
    matrix[:n, n] = sys.deltas
    matrix[n, :n] = sys.omegas
    return matrix


_COORDINATE_PATTERN = re.compile(r'^(?:omega|w)(\d+)$')


def resolve_coordinate(name: Union[str, int], n: int) -> int:
    """Map 'omega3', 'w3', 'beta' or an integer to a coordinate in 1..n+1."""
    if isinstance(name, (int, np.integer)):
        coordinate = int(name)
    else:
        text = str(name).strip().lower()
        match = _COORDINATE_PATTERN.match(text)
        if text == 'beta':
            coordinate = n + 1
        elif match:
            coordinate = int(match.group(1))
        else:
            error_msg = f"unknown policy coordinate {name!r}; use omega1..omega{n} or beta"
            logger.error(error_msg)
            raise validator.ValidationError(error_msg, coordinate=str(name))
    validator.check_coordinate(coordinate, n)
    return coordinate


def coordinate_name(coordinate: int, n: int) -> str:
    return 'beta' if coordinate == n + 1 else f'omega{coordinate}'

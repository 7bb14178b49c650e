"""
DATA LOADER MODULE
------------------
Reads system descriptors, targets and initial states for the command line.

Key Features:
* Descriptor Formats: canonical ({lambdas, deltas, omegas, beta}) or general
  ({A, b, w, beta}); general descriptors are canonicalized on load.
* Overrides: NAME=VALUE assignments to single policy coordinates.
* Inline or File Arrays: targets and initial states may be given as JSON text
  or as a path to a JSON file.

Descriptor errors surface as ValidationError with the offending field named.
"""

import json
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np

from modules import validator
from modules.model import CanonicalSystem, GeneralSystem, canonicalize, resolve_coordinate
from modules.valuation import InitialState

logger = logging.getLogger(__name__)

CANONICAL_KEYS = ('lambdas', 'deltas', 'omegas', 'beta')
GENERAL_KEYS = ('A', 'b', 'w', 'beta')


def _read_json(path: str) -> Dict:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except FileNotFoundError:
        error_msg = f"system file not found: {path}"
        logger.error(error_msg)
        raise validator.ValidationError(error_msg, path=path)
    except json.JSONDecodeError as e:
        error_msg = f"system file {path} is not valid JSON: {e}"
        logger.error(error_msg)
        raise validator.ValidationError(error_msg, path=path)


def parse_system(descriptor: Dict) -> CanonicalSystem:
    """
    Build a canonical system from a descriptor dict.

    Args:
        descriptor: Canonical or general field set

    Returns:
        CanonicalSystem
    """
    if not isinstance(descriptor, dict):
        raise validator.ValidationError("system descriptor must be a JSON object")

    if all(key in descriptor for key in CANONICAL_KEYS):
        return CanonicalSystem.from_arrays(descriptor['lambdas'], descriptor['deltas'],
                                           descriptor['omegas'], descriptor['beta'])

    if all(key in descriptor for key in GENERAL_KEYS):
        general = GeneralSystem(np.array(descriptor['A'], dtype=float), descriptor['b'],
                                descriptor['w'], descriptor['beta'])
        logger.info(f"Canonicalizing general system of order {general.n}")
        return canonicalize(general)

    present = sorted(descriptor)
    error_msg = (f"descriptor needs either {list(CANONICAL_KEYS)} or {list(GENERAL_KEYS)}, "
                 f"got {present}")
    logger.error(error_msg)
    raise validator.ValidationError(error_msg, fields=present)


def load_system(path: str) -> CanonicalSystem:
    """Load and validate the system descriptor at path."""
    logger.info(f"Reading system descriptor: {path}")
    descriptor = _read_json(path)
    sys = parse_system(descriptor)
    logger.info(f"  ✓ Loaded system with n={sys.n}")
    return sys


def apply_overrides(sys: CanonicalSystem, assignments: Optional[Sequence[str]]) -> CanonicalSystem:
    """Apply 'omegaK=VALUE' / 'beta=VALUE' assignments in order."""
    for assignment in assignments or ():
        name, sep, text = assignment.partition('=')
        if not sep:
            raise validator.ValidationError(f"override must read NAME=VALUE, got {assignment!r}")
        coordinate = resolve_coordinate(name, sys.n)
        try:
            value = float(text)
        except ValueError:
            raise validator.ValidationError(f"override value is not a number: {assignment!r}")
        validator.check_finite(name, [value])
        sys = sys.with_coordinate(coordinate, value)
        logger.debug(f"Override {name.strip()}={value}")
    return sys


def parse_array(text: str, name: str) -> List[float]:
    """A JSON array given inline or as the path of a JSON file."""
    source = text
    if os.path.isfile(text):
        with open(text, 'r', encoding='utf-8') as handle:
            source = handle.read()
    try:
        values = json.loads(source)
    except json.JSONDecodeError:
        raise validator.ValidationError(f"{name} must be a JSON array, got {text!r}")
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
        raise validator.ValidationError(f"{name} must be a JSON array of numbers, got {text!r}")
    validator.check_finite(name, values)
    return [float(v) for v in values]


def load_initial_state(n: int, z0_text: Optional[str] = None,
                       d0: Optional[float] = None) -> InitialState:
    """Initial state from flags; missing parts default to ones with a warning."""
    if z0_text is None:
        logger.warning(f"  ⚠ No z0 given, using ones({n})")
        z0 = [1.0] * n
    else:
        z0 = parse_array(z0_text, 'z0')
    if d0 is None:
        logger.warning("  ⚠ No d0 given, using 1.0")
        d0 = 1.0
    validator.check_initial_state(z0, d0, n)
    return InitialState(tuple(z0), d0)

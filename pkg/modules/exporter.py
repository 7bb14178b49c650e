"""
EXPORTER MODULE
---------------
Renders command results as JSON or CSV and writes them atomically.

Key Features:
* JSON: complex numbers become [re, im] pairs, NaN becomes null, numpy
  scalars become Python numbers.
* CSV: pandas frames with a header row and floats at 17 significant digits.
* Atomic Writes: output goes to a temporary file in the target directory and
  is renamed into place, so a failed run never leaves a partial file.
"""

import json
import logging
import math
import os
import sys
import tempfile
from typing import Any, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FORMATS = ('json', 'csv')


def jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(float(value.real)), jsonable(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else (None if math.isnan(value) else str(value))
    return value


def to_json_text(payload: Any) -> str:
    return json.dumps(jsonable(payload), indent=2) + '\n'


def to_csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')


def render(payload: Any, frame: Optional[pd.DataFrame], fmt: str) -> str:
    """Text for the requested format; CSV needs a frame."""
    if fmt == 'json':
        return to_json_text(payload)
    if fmt == 'csv':
        if frame is None:
            frame = pd.DataFrame([jsonable(payload)]) if isinstance(payload, dict) else pd.DataFrame()
        return to_csv_text(frame)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_output(text: str, path: Optional[str] = None) -> None:
    """Write text to path atomically, or to standard output when path is None."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temp_path = tempfile.mkstemp(dir=directory, prefix='.spectra-', suffix='.tmp')
    try:
        with os.fdopen(handle, 'w', encoding='utf-8', newline='') as stream:
            stream.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    logger.info(f"  ✓ Wrote {path}")

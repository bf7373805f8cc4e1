"""Utility functions shared by the solvers and the drivers."""

import dataclasses
import logging
import math
import os
from enum import Enum
from typing import Any, Optional

import numpy as np
import psutil

logger = logging.getLogger(__name__)

THREADS_ENV = "DEGENWAVE_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    """Number of worker processes to use for independent runs.

    The physical core count (via psutil) is the default. ``requested`` overrides it,
    and the ``DEGENWAVE_THREADS`` environment variable caps either value.
    """
    available = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or os.cpu_count() or 1
    workers = requested if requested and requested > 0 else available

    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            cap_value = int(cap)
        except ValueError:
            raise RuntimeError(f"{THREADS_ENV} must be an integer, got '{cap}'")
        if cap_value > 0:
            workers = min(workers, cap_value)
    return max(1, int(workers))


def cumulative_hermite_trapezoid(x: np.ndarray, f: np.ndarray, df: np.ndarray) -> np.ndarray:
    """Cumulative integral of f over x, starting at 0.

    Each interval uses the trapezoid rule with the endpoint-slope correction
    h^2 (f'_0 - f'_1) / 12, which integrates the cubic Hermite interpolant exactly.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    df = np.asarray(df, dtype=float)
    h = np.diff(x)
    pieces = 0.5 * h * (f[:-1] + f[1:]) + h * h * (df[:-1] - df[1:]) / 12.0
    return np.concatenate(([0.0], np.cumsum(pieces)))


def to_jsonable(value: Any) -> Any:
    """Convert results (dataclasses, enums, numpy values) into JSON-serialisable objects"""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, BaseException):
        return f"{type(value).__name__}: {value}"
    return value

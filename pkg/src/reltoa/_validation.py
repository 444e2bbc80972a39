"""Input checks shared by the estimators and the command line."""
from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .detectors import DetectorModel
from .exceptions import ConfigError, SupportNotPositive
from .states import MomentumState


def check_positive(value, name):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return v


def check_finite(value, name):
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


def check_points(points, name="points"):
    """1-D finite float array."""
    arr = check_array(np.atleast_1d(np.asarray(points, dtype=float)), ensure_2d=False, dtype=float,
                      input_name=name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


def check_grid(grid, name="grid"):
    arr = check_points(grid, name)
    if arr.size < 2 or np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing with at least two points")
    return arr


def check_state(state, mass=None):
    if isinstance(state, dict):
        from .io import state_from_dict
        state = state_from_dict(state)
    if not isinstance(state, MomentumState):
        raise TypeError(f"expected a MomentumState, got {type(state).__name__}")
    if not state.support[0] > 0:
        raise SupportNotPositive("state support must be positive")
    if mass is not None and not math.isclose(state.mass, mass):
        raise ValueError(f"state mass {state.mass} differs from {mass}")
    return state


def check_detector(det, mass=1.0):
    if det is None:
        return DetectorModel("maximal")
    if isinstance(det, dict):
        from .io import detector_from_dict
        det = detector_from_dict(det, mass)
    if not isinstance(det, DetectorModel):
        raise TypeError(f"expected a DetectorModel, got {type(det).__name__}")
    return det


def check_tolerance(tol):
    try:
        return check_positive(tol, "tolerance")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

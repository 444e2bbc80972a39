"""Estimator-style wrappers: fit on a state, predict densities at new points."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as V
from .arrival import arrival_density, arrival_density_amplitude, arrival_density_phillips
from .moments import variance_decomposition
from .position import position_density

ROUTES = ("kernel", "amplitude", "phillips")


class ArrivalDensity(BaseEstimator):
    """Arrival-time density at detector position ``x``.

    ``fit`` takes a MomentumState (or its JSON dict); ``predict`` returns the
    normalized density at the given times, zero outside the fitted grid.
    """

    def __init__(self, detector=None, x=50.0, route="kernel", n_times=2048):
        self.detector = detector
        self.x = x
        self.route = route
        self.n_times = n_times

    def fit(self, state, y=None):
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        state = V.check_state(state)
        det = V.check_detector(self.detector, state.mass)
        x = V.check_finite(self.x, "x")
        n = int(self.n_times)
        if n < 16:
            raise ValueError("n_times must be at least 16")
        if self.route == "kernel":
            dist = arrival_density(state, det, x, n_times=n)
        else:
            if det.kind != "maximal":
                raise ValueError(f"route {self.route!r} needs a maximal detector")
            if self.route == "amplitude":
                dist = arrival_density_amplitude(state, x, det.tau, det.delta, n_times=n)
            else:
                if det.tau is None:
                    raise ValueError("the phillips route needs tau and delta")
                dist = arrival_density_phillips(state, x, det.tau, det.delta, n_times=n)
        self.state_ = state
        self.distribution_ = dist
        self.t_grid_ = dist.t_grid
        self.density_ = dist.normalized()
        self.norm_ = dist.norm
        self.mean_ = dist.mean
        self.variance_ = dist.variance
        return self

    def predict(self, t):
        check_is_fitted(self, "distribution_")
        t = V.check_points(t, "t")
        return np.interp(t, self.t_grid_, self.density_, left=0.0, right=0.0)

    def decomposition(self):
        """Phase-space variance decomposition for the fitted state."""
        check_is_fitted(self, "distribution_")
        det = V.check_detector(self.detector, self.state_.mass)
        return variance_decomposition(self.state_, det, float(self.x), direct=False)


class PositionDensity(BaseEstimator):
    """Position density at fixed time ``t`` built from the same localization kernel."""

    def __init__(self, detector=None, t=0.0, n_points=2048):
        self.detector = detector
        self.t = t
        self.n_points = n_points

    def fit(self, state, y=None):
        state = V.check_state(state)
        det = V.check_detector(self.detector, state.mass)
        dist = position_density(state, det, V.check_finite(self.t, "t"), n_points=int(self.n_points))
        self.distribution_ = dist
        self.x_grid_ = dist.x_grid
        self.density_ = dist.normalized()
        self.norm_ = dist.norm
        self.mean_ = dist.mean
        return self

    def predict(self, x):
        check_is_fitted(self, "distribution_")
        x = V.check_points(x, "x")
        return np.interp(x, self.x_grid_, self.density_, left=0.0, right=0.0)

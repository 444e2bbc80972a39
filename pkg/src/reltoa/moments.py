"""Mean and variance of the arrival time and their phase-space decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrival import ArrivalDistribution, arrival_density, detector_state
from .detectors import DetectorModel, LocalizationKernel, detection_width, localization_kernel
from .exceptions import DomainError
from .states import MomentumState, WignerState, energy, velocity, wigner_function


@dataclass(frozen=True)
class ArrivalMoments:
    mean: float
    variance: float
    decomposition: dict
    cross_check: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {"mean": self.mean, "variance": self.variance,
                "decomposition": dict(self.decomposition), "cross_check": dict(self.cross_check)}


def mean_arrival(dist: ArrivalDistribution) -> float:
    return dist.mean


def arrival_variance(dist: ArrivalDistribution) -> float:
    return dist.variance


def mass_term(state: MomentumState) -> float:
    """(m^4/4) <1/(eps^2 p^4)>."""
    m = state.mass
    return 0.25 * m ** 4 * state.expect(lambda p: 1.0 / (energy(p, m) ** 2 * p ** 4))


def detector_term(state: MomentumState, det: DetectorModel) -> float:
    """<sigma^2(p) / v^2> over the (already reweighted) state."""
    if det.kind == "maximal":
        return 0.0
    m = state.mass
    return state.expect(lambda p: detection_width(det, p, m) / velocity(p, m) ** 2)


def classical_toa_stats(wigner: WignerState, x: float):
    """Phase-space mean and variance of T_c = (x - xbar)/v(pbar)."""
    if wigner.p_grid[0] <= 0:
        raise DomainError("T_c needs momenta bounded away from zero")
    m = wigner.mass
    norm = wigner.expect(lambda xb, pb: np.ones_like(xb))
    mean = wigner.expect(lambda xb, pb: (x - xb) / velocity(pb, m)) / norm
    second = wigner.expect(lambda xb, pb: ((x - xb) / velocity(pb, m)) ** 2) / norm
    return mean, second - mean * mean


def variance_decomposition(state: MomentumState, det: DetectorModel, x: float, mass: float | None = None,
                           direct: bool = True, wigner_kwargs: dict | None = None) -> ArrivalMoments:
    """(Delta t)^2 = (Delta T_c)^2 + (m^4/4)<1/(eps^2 p^4)> + <sigma^2/v^2> on the reweighted state."""
    if mass is not None and not math.isclose(mass, state.mass):
        raise DomainError("mass differs from the state's mass")
    st = detector_state(state, det)
    wig = wigner_function(st, **(wigner_kwargs or {}))
    mean_tc, var_tc = classical_toa_stats(wig, x)
    terms = {"var_Tc": var_tc, "term_mass": mass_term(st), "term_detector": detector_term(st, det)}
    total = math.fsum(terms.values())
    cross = {}
    if direct:
        dist = arrival_density(state, localization_kernel(det, state.mass), x)
        cross = {"quadrature_variance": dist.variance, "quadrature_mean": dist.mean,
                 "rel_err": abs(dist.variance - total) / dist.variance}
    return ArrivalMoments(mean_tc, total, terms, cross)


def moment_generating(state: MomentumState, kernel: LocalizationKernel | DetectorModel, x: float,
                      mu_list, dist: ArrivalDistribution | None = None) -> np.ndarray:
    """Z(mu, x) = int dt P(t, x) e^{i mu t} on the distribution's time grid."""
    if dist is None:
        dist = arrival_density(state, kernel, x)
    mu = np.atleast_1d(np.asarray(mu_list, dtype=float))
    t = dist.t_grid
    integrand = dist.normalized()[None, :] * np.exp(1j * np.outer(mu, t))
    return np.trapezoid(integrand, t, axis=1)


def cumulants_from_mgf(state: MomentumState, kernel, x: float, dist: ArrivalDistribution | None = None):
    """Mean and variance from central differences of ln Z at mu = 0.

    The step is 1e-4 over the spread of the distribution.
    """
    if dist is None:
        dist = arrival_density(state, kernel, x)
    h = 1e-4 / math.sqrt(dist.variance)
    z = moment_generating(state, kernel, x, [-h, 0.0, h], dist)
    lz = np.log(z)
    mean = float(np.imag(lz[2] - lz[0]) / (2 * h))
    var = float(-np.real(lz[2] - 2 * lz[1] + lz[0]) / h ** 2)
    return mean, var

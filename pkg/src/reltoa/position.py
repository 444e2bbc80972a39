"""Fixed-time position densities built from the same localization kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrival import arrival_density, kernel_factor, quadratic_form, detector_state, local_phase_rate, state_ref
from .detectors import DetectorModel, LocalizationKernel, detection_width, localization_kernel
from .numerics import panels_for_phase
from .states import MomentumState, boosted, energy, velocity

DEFAULT_POINTS = 2048


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    time_t: float
    x_grid: np.ndarray
    density: np.ndarray
    norm: float
    state_ref: dict = field(default_factory=dict)
    detector_ref: dict = field(default_factory=dict)

    def normalized(self):
        return self.density / self.norm

    @property
    def mean(self):
        return float(np.trapezoid(self.x_grid * self.density, self.x_grid) / self.norm)

    def l1_distance(self, other) -> float:
        g = np.interp(self.x_grid, other.x_grid, other.normalized(), left=0.0, right=0.0)
        return float(np.trapezoid(np.abs(self.normalized() - g), self.x_grid))

    def metadata(self) -> dict:
        return {"t": self.time_t, "norm": self.norm, "detector": self.detector_ref, "state": self.state_ref,
                "grid": {"x_min": float(self.x_grid[0]), "x_max": float(self.x_grid[-1]),
                         "n": int(self.x_grid.size)}}


def default_position_grid(state: MomentumState, t: float, n_points: int = DEFAULT_POINTS,
                          extra_variance: float = 0.0):
    """Grid centred on <x> + <v> t, ten spread estimates on either side."""
    m = state.mass
    x_mean, x_std = state.position_moments()
    v_mean = state.expect(lambda p: velocity(p, m))
    v_std = math.sqrt(max(state.expect(lambda p: velocity(p, m) ** 2) - v_mean ** 2, 0.0))
    spread = x_std + abs(t) * v_std + math.sqrt(max(extra_variance, 0.0))
    center = x_mean + v_mean * t
    return np.linspace(center - 10 * spread, center + 10 * spread, n_points)


def _nodes(state, x_grid, t):
    lo, hi = state.support
    rate = local_phase_rate(state, x_grid, [t])
    return panels_for_phase(lo, hi, 2.0 * rate, min_panels=32)


def _plane_waves(state, x_grid, t, p, w):
    pc = 0.5 * (p[0] + p[-1])
    a = w * state.psi(p) * np.exp(-1j * (energy(p, state.mass) - energy(pc, state.mass)) * t)
    return np.exp(1j * np.outer(x_grid, p - pc)) * a


def position_density(state: MomentumState, kernel: LocalizationKernel | DetectorModel, t: float,
                     x_grid=None, n_points: int = DEFAULT_POINTS) -> PositionDistribution:
    """P(t, x) = int dp dp'/(2 pi) psi~ psi~'* L(p, p') e^{i(p - p')x - i(eps - eps')t}."""
    if isinstance(kernel, DetectorModel):
        kernel = localization_kernel(kernel, state.mass)
    st = detector_state(state, kernel)
    if x_grid is None:
        extra = 0.0
        if kernel.kind != "maximal":
            extra = st.expect(lambda p: detection_width(kernel.detector, p, st.mass))
        x_grid = default_position_grid(st, t, n_points, extra)
    x_grid = np.asarray(x_grid, dtype=float)
    p, w = _nodes(st, x_grid, t)
    dens = quadratic_form(lambda xs: _plane_waves(st, xs, t, p, w), x_grid, kernel_factor(kernel, p))
    dens /= 2 * math.pi
    return PositionDistribution(float(t), x_grid, dens, float(np.trapezoid(dens, x_grid)),
                                state_ref(state), kernel.detector.describe())


def newton_wigner_density(state: MomentumState, t: float, x_grid, tau=None, delta=None) -> np.ndarray:
    """|int dp psi~(p) e^{ipx - i eps t}|^2 / (2 pi) as a single integral per point."""
    st = detector_state(state, DetectorModel("maximal", tau, delta))
    x_grid = np.asarray(x_grid, dtype=float)
    p, w = _nodes(st, x_grid, t)
    ones = (np.ones((p.size, 1)), np.ones(1))
    return quadratic_form(lambda xs: _plane_waves(st, xs, t, p, w), x_grid, ones) / (2 * math.pi)


def _nw_at_events(state, ts, xs):
    """Newton-Wigner density at scattered spacetime points."""
    p, w = state.nodes(256)
    m = state.mass
    ph = np.exp(1j * (np.outer(xs, p) - np.outer(ts, energy(p, m))))
    return np.abs(ph @ (w * state.psi(p))) ** 2 / (2 * math.pi)


def duality_check(state: MomentumState, det: DetectorModel, x_fixed: float, t_fixed: float,
                  rapidity: float = 0.5) -> dict:
    """Compare the arrival and position reweightings and exhibit non-covariance under a boost."""
    m = state.mass
    kernel = localization_kernel(det, m)
    p, _ = state.nodes(16)
    alpha = det.absorption(m)
    a = alpha(p) if alpha is not None else np.ones_like(p)
    rho = np.outer(state.psi(p), np.conj(state.psi(p)))
    toa_map = np.sqrt(np.outer(velocity(p, m) * a, velocity(p, m) * a)) * rho
    pos_map = np.sqrt(np.outer(a, a)) * rho
    expected = np.sqrt(np.outer(velocity(p, m), velocity(p, m)))
    nz = np.abs(pos_map) > 1e-300
    ratio_err = float(np.max(np.abs(toa_map[nz] / pos_map[nz] - expected[nz]) / expected[nz]))
    same_kernel = bool(np.array_equal(kernel.matrix(p), localization_kernel(det, m).matrix(p)))

    # boosted state on the lab grid vs the original density at the back-transformed events
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    moved = boosted(state, rapidity)
    pos = position_density(moved, DetectorModel("maximal"), t_fixed)
    back = _nw_at_events(state, ch * t_fixed - sh * pos.x_grid, ch * pos.x_grid - sh * t_fixed)
    back /= np.trapezoid(back, pos.x_grid)
    pos_gap = float(np.trapezoid(np.abs(pos.normalized() - back), pos.x_grid))

    # control: |psi_Ph|^2 is a Lorentz scalar, so its gap is quadrature error only
    ctrl = _scalar_at_events(moved, np.full_like(pos.x_grid, t_fixed), pos.x_grid)
    ctrl_back = _scalar_at_events(state, ch * t_fixed - sh * pos.x_grid, ch * pos.x_grid - sh * t_fixed)
    scalar_gap = float(np.trapezoid(np.abs(ctrl - ctrl_back), pos.x_grid) / np.trapezoid(ctrl, pos.x_grid))

    toa = arrival_density(moved, DetectorModel("maximal"), x_fixed)
    v_back = _toa_at_events(state, ch * toa.t_grid - sh * x_fixed, ch * x_fixed - sh * toa.t_grid)
    v_back /= np.trapezoid(v_back, toa.t_grid)
    toa_gap = float(np.trapezoid(np.abs(toa.normalized() - v_back), toa.t_grid))
    return {
        "reweight_ratio_max_rel_err": ratio_err,
        "identical_kernel_samples": same_kernel,
        "rapidity": rapidity,
        "position_boost_l1_gap": pos_gap,
        "arrival_boost_l1_gap": toa_gap,
        "scalar_control_l1_gap": scalar_gap,
    }


def _toa_at_events(state, ts, xs):
    """Maximal-localization arrival density at scattered spacetime points."""
    p, w = state.nodes(256)
    m = state.mass
    ph = np.exp(1j * (np.outer(xs, p) - np.outer(ts, energy(p, m))))
    return np.abs(ph @ (w * state.psi(p) * np.sqrt(velocity(p, m)))) ** 2 / (2 * math.pi)


def _scalar_at_events(state, ts, xs):
    p, w = state.nodes(256)
    m = state.mass
    ph = np.exp(1j * (np.outer(xs, p) - np.outer(ts, energy(p, m))))
    return np.abs(ph @ (w * state.psi(p) / np.sqrt(2 * energy(p, m)))) ** 2

"""Momentum-space states on a strictly positive momentum window.

Natural units (hbar = c = 1) throughout; the mass sets the scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats

from .exceptions import DomainError, GridTooCoarse, SupportNotPositive
from .numerics import QuadratureSpec, find_root, gauss_legendre_panels, integrate

TAIL_MASS = 1e-12
# lower energy tails of the Levy / inverse Gaussian families fall off like
# exp(-1/x); cutting them deeper costs nothing and keeps inverse moments exact
LOWER_TAIL_MASS = 1e-30
# |psi|^2 ~ N(p0, sigma^2): tail beyond k sigma carries TAIL_MASS
_GAUSS_K = float(math.sqrt(2.0) * special.erfcinv(TAIL_MASS))


def energy(p, mass=1.0):
    return np.sqrt(np.square(p) + mass * mass)


def velocity(p, mass=1.0):
    return p / energy(p, mass)


def kinetic(p, mass=1.0):
    """epsilon_p - m without cancellation at small p."""
    p2 = np.square(p)
    return p2 / (energy(p, mass) + mass)


def momentum_from_kinetic(x, mass=1.0):
    return np.sqrt(x * (x + 2.0 * mass))


@dataclass(frozen=True, eq=False)
class MomentumState:
    """Pure state psi(p) restricted to ``support`` and normalized there.

    ``raw_amplitude`` may be unnormalized and defined beyond the support
    (heavy-tailed families use this to probe divergent moments).
    ``variable`` selects the integration variable: ``"p"`` or
    ``"log_kinetic"`` (u = ln(eps_p - m), for heavy energy tails).
    """

    raw_amplitude: Callable
    support: tuple
    mass: float = 1.0
    family: str = "custom"
    params: dict = field(default_factory=dict)
    variable: str = "p"
    heavy_tail: bool = False
    _scale: float = field(init=False, repr=False, default=1.0)

    def __post_init__(self):
        lo, hi = map(float, self.support)
        if not lo > 0:
            raise SupportNotPositive(f"support must be strictly positive, got {self.support}")
        if not hi > lo:
            raise ValueError(f"empty support {self.support}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.variable not in ("p", "log_kinetic"):
            raise ValueError(f"unknown integration variable {self.variable!r}")
        object.__setattr__(self, "support", (lo, hi))
        raw_norm = self._integrate_raw(lambda p: np.abs(self.raw_amplitude(p)) ** 2)
        if not raw_norm > 0:
            raise ValueError("amplitude has zero norm on the support")
        object.__setattr__(self, "_scale", 1.0 / math.sqrt(raw_norm))

    # -- evaluation -------------------------------------------------------
    def psi(self, p):
        p = np.asarray(p, dtype=float)
        lo, hi = self.support
        inside = (p >= lo) & (p <= hi)
        safe = np.where(inside, p, 0.5 * (lo + hi))
        return np.where(inside, self._scale * np.asarray(self.raw_amplitude(safe), dtype=complex), 0.0)

    def __call__(self, p):
        return self.psi(p)

    def density(self, p):
        return np.abs(self.psi(p)) ** 2

    def energy(self, p):
        return energy(p, self.mass)

    def velocity(self, p):
        return velocity(p, self.mass)

    # -- quadrature -------------------------------------------------------
    def _integrate_raw(self, g, lo=None, hi=None, spec=None):
        lo = self.support[0] if lo is None else lo
        hi = self.support[1] if hi is None else hi
        if self.variable == "p":
            return integrate(g, lo, hi, spec, initial_panels=16)
        m = self.mass

        def h(u):
            x = np.exp(u)
            p = momentum_from_kinetic(x, m)
            return g(p) * x * (x + m) / p

        u_lo, u_hi = math.log(kinetic(lo, m)), math.log(kinetic(hi, m))
        return integrate(h, u_lo, u_hi, spec, initial_panels=max(16, int(4 * (u_hi - u_lo))))

    def expect(self, f: Callable, spec: QuadratureSpec | None = None) -> float:
        """<f(p)> = int dp f(p) |psi(p)|^2 by adaptive quadrature."""
        s2 = self._scale ** 2
        return self._integrate_raw(lambda p: f(p) * s2 * np.abs(self.raw_amplitude(p)) ** 2, spec=spec)

    def nodes(self, n_panels: int = 64, nodes_per_panel: int = 8):
        """Composite Gauss-Legendre nodes and weights in p over the support."""
        return gauss_legendre_panels(*self.support, n_panels, nodes_per_panel)

    def position_moments(self, n_panels: int = 128):
        """Mean and standard deviation of the Newton-Wigner position i d/dp."""
        p, w = self.nodes(n_panels)
        h = 1e-6 * (self.support[1] - self.support[0])
        psi = self.psi(p)
        dpsi = (self.psi(p + h) - self.psi(p - h)) / (2 * h)
        mean = float(np.real(np.sum(w * np.conj(psi) * 1j * dpsi)))
        second = float(np.sum(w * np.abs(dpsi) ** 2))
        return mean, math.sqrt(max(second - mean * mean, 0.0))

    def energy_variance(self, spec: QuadratureSpec | None = None) -> float:
        """(Delta H)^2, or ``inf`` when truncation studies show divergence."""
        m = self.mass
        if self.heavy_tail:
            lo, hi = self.support
            values = []
            for k in range(3):
                top = hi * 2.0 ** k
                raw = lambda p: np.abs(self.raw_amplitude(p)) ** 2
                n = self._integrate_raw(raw, lo, top, spec)
                ek = self._integrate_raw(lambda p: kinetic(p, m) * raw(p), lo, top, spec) / n
                ek2 = self._integrate_raw(lambda p: kinetic(p, m) ** 2 * raw(p), lo, top, spec) / n
                values.append(ek2 - ek * ek)
            growing = values[2] > 1.5 * values[1] > 2.25 * values[0]
            if growing and values[2] > 1e6 * m * m:
                return math.inf
            return values[0]
        ek = self.expect(lambda p: kinetic(p, m), spec)
        ek2 = self.expect(lambda p: kinetic(p, m) ** 2, spec)
        return max(ek2 - ek * ek, 0.0)


def momentum_expectation(state: MomentumState, f: Callable, spec: QuadratureSpec | None = None) -> float:
    return state.expect(f, spec)


# -- constructors ------------------------------------------------------------

def make_gaussian_state(p0: float, sigma_p: float, x0: float = 0.0, mass: float = 1.0,
                        chirp: float = 0.0) -> MomentumState:
    """psi(p) ~ exp(-(p-p0)^2/(4 sigma^2) - i p x0 + i chirp (p-p0)^2).

    The window is p0 +- k sigma with k set by a 1e-12 tail mass; when that
    would reach p <= 0 the lower edge falls back to p0 - 5 sigma.
    """
    if not sigma_p > 0:
        raise ValueError("sigma_p must be positive")
    if not p0 - 5 * sigma_p > 0:
        raise SupportNotPositive(f"p0 - 5 sigma_p = {p0 - 5 * sigma_p:.3g} <= 0")
    lo = p0 - _GAUSS_K * sigma_p
    if lo <= 0:
        lo = p0 - 5 * sigma_p
    hi = p0 + _GAUSS_K * sigma_p

    def amp(p):
        d = p - p0
        return np.exp(-d * d / (4 * sigma_p ** 2) + 1j * (chirp * d * d - p * x0))

    return MomentumState(amp, (lo, hi), mass, "gaussian",
                         {"p0": p0, "sigma_p": sigma_p, "x0": x0, "chirp": chirp})


def inverse_gaussian_pdf(xi, xi0, sigma_xi):
    """Inverse Gaussian density with mean xi0 and standard deviation sigma_xi."""
    lam = xi0 ** 3 / sigma_xi ** 2
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.sqrt(lam / (2 * np.pi * xi ** 3)) * np.exp(-lam * (xi - xi0) ** 2 / (2 * xi0 ** 2 * xi))
    return np.where(xi > 0, out, 0.0)


def make_inverse_gaussian_state(xi0: float, sigma_xi: float, mass: float = 1.0) -> MomentumState:
    """Zero-phase state whose kinetic energy xi = eps_p/m - 1 is inverse Gaussian."""
    if not (xi0 > 0 and sigma_xi > 0):
        raise ValueError("xi0 and sigma_xi must be positive")
    lam = xi0 ** 3 / sigma_xi ** 2
    dist = stats.invgauss(mu=xi0 / lam, scale=lam)
    target = math.log(LOWER_TAIL_MASS)
    # boost's quantile fails this deep in the tail; solve on the log-cdf instead
    u_lo = find_root(lambda u: float(dist.logcdf(math.exp(u))) - target,
                     (math.log(xi0) - 200.0, math.log(xi0)))
    x_lo, x_hi = math.exp(u_lo) * mass, dist.isf(TAIL_MASS) * mass

    def amp(p):
        x = kinetic(p, mass)
        return np.sqrt(inverse_gaussian_pdf(x / mass, xi0, sigma_xi) / mass * p / energy(p, mass))

    support = (momentum_from_kinetic(x_lo, mass), momentum_from_kinetic(x_hi, mass))
    return MomentumState(amp, support, mass, "inverse_gaussian_kinetic",
                         {"xi0": xi0, "sigma_xi": sigma_xi}, variable="log_kinetic")


def levy_pdf(x, c):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.sqrt(c / (2 * np.pi)) * np.exp(-c / (2 * x)) / x ** 1.5
    return np.where(x > 0, out, 0.0)


def levy_inverse_moment(k: int, c: float) -> float:
    """<X^-k> for a Levy variable with scale c."""
    return math.gamma(k + 0.5) * 2.0 ** k / (math.sqrt(math.pi) * c ** k)


def make_levy_energy_state(c_E: float, mass: float = 1.0) -> MomentumState:
    """Zero-phase state whose energy E = eps_p >= m is Levy distributed above m."""
    if not c_E > 0:
        raise ValueError("c_E must be positive")
    dist = stats.levy(scale=c_E)
    x_lo, x_hi = dist.ppf(LOWER_TAIL_MASS), dist.isf(TAIL_MASS)

    def amp(p):
        return np.sqrt(levy_pdf(kinetic(p, mass), c_E) * p / energy(p, mass))

    support = (momentum_from_kinetic(x_lo, mass), momentum_from_kinetic(x_hi, mass))
    return MomentumState(amp, support, mass, "levy_energy", {"c_E": c_E},
                         variable="log_kinetic", heavy_tail=True)


def reweighted(state: MomentumState, weight: Callable, tag: str = "reweighted") -> MomentumState:
    """State with amplitude sqrt(weight(p)) psi(p), renormalized."""
    def amp(p):
        return np.sqrt(weight(p)) * state.psi(p)

    return MomentumState(amp, state.support, state.mass, "custom",
                         {"base": state.family, "transform": tag, **state.params},
                         variable=state.variable)


def boosted(state: MomentumState, rapidity: float) -> MomentumState:
    """Lorentz boost psi(p) -> sqrt(eps_{L^-1 p}/eps_p) psi(L^-1 p)."""
    m = state.mass
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)

    def inverse(p):
        return p * ch - energy(p, m) * sh

    def forward(p):
        return p * ch + energy(p, m) * sh

    lo, hi = (forward(q) for q in state.support)
    if not lo > 0:
        raise SupportNotPositive("boosted support reaches p <= 0")

    def amp(p):
        q = inverse(p)
        return np.sqrt(energy(q, m) / energy(p, m)) * state.psi(q)

    return MomentumState(amp, (float(lo), float(hi)), m, "custom",
                         {"base": state.family, "rapidity": rapidity}, variable=state.variable)


def random_gaussian_states(n: int, seed: int, mass: float = 1.0):
    """Seeded batch of chirped Gaussian states with positive momentum support."""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        p0 = mass * 10 ** rng.uniform(-0.5, 0.6)
        sigma = p0 * rng.uniform(0.02, 0.12)
        x0 = rng.uniform(-3.0, 3.0) / sigma
        chirp = rng.uniform(-2.0, 2.0) / sigma ** 2
        states.append(make_gaussian_state(p0, sigma, x0, mass, chirp))
    return states


# -- Wigner function ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WignerState:
    """W(xbar, pbar) sampled on uniform grids; ``values[i, j]`` at (p_grid[i], x_grid[j])."""

    x_grid: np.ndarray
    p_grid: np.ndarray
    values: np.ndarray
    mass: float = 1.0

    def expect(self, fn: Callable) -> float:
        xx, pp = np.meshgrid(self.x_grid, self.p_grid)
        integrand = self.values * fn(xx, pp)
        return float(np.trapezoid(np.trapezoid(integrand, self.x_grid, axis=1), self.p_grid))

    def momentum_marginal(self):
        return np.trapezoid(self.values, self.x_grid, axis=1)

    def position_marginal(self):
        return np.trapezoid(self.values, self.p_grid, axis=0)


def wigner_function(state: MomentumState, n_p: int = 257, n_x: int = 513, n_xi: int = 513,
                    x_halfwidth: float | None = None, check: bool = True) -> WignerState:
    """W(xbar, pbar) = int dxi/(2 pi) psi(pbar + xi/2) psi*(pbar - xi/2) e^{i xi xbar}."""
    if state.variable != "p":
        raise DomainError("Wigner grids are built for states integrated in p")
    lo, hi = state.support
    width = hi - lo
    x_mean, x_std = state.position_moments()
    if x_halfwidth is None:
        x_halfwidth = 12.0 * x_std
    p_grid = np.linspace(lo, hi, n_p)
    x_grid = np.linspace(x_mean - x_halfwidth, x_mean + x_halfwidth, n_x)
    xi = np.linspace(-width, width, n_xi)
    wxi = np.full(n_xi, xi[1] - xi[0])
    wxi[[0, -1]] *= 0.5
    corr = state.psi(p_grid[:, None] + 0.5 * xi) * np.conj(state.psi(p_grid[:, None] - 0.5 * xi))
    phase = np.exp(1j * np.outer(xi, x_grid))
    values = np.real((corr * wxi) @ phase) / (2 * np.pi)
    wig = WignerState(x_grid, p_grid, values, state.mass)
    if check:
        err = float(np.trapezoid(np.abs(wig.momentum_marginal() - state.density(p_grid)), p_grid))
        if err > 1e-4:
            raise GridTooCoarse(f"Wigner momentum marginal off by {err:.3g} (L1)")
    return wig

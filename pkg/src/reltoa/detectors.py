"""Detector families, their localization kernels L(p, p') and record spreads u_p(x)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev
from scipy.interpolate import CubicSpline

from .exceptions import DomainError, FourierGridError
from .numerics import gauss_legendre_panels
from .states import energy

KINDS = ("maximal", "fully_decoherent", "coherent", "covariant", "ideal")


# -- absorption coefficients ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class Absorption:
    """Absorption coefficient alpha(p) with first and second log-derivatives.

    Forms:
      ``const``         alpha = value
      ``exp_family``    alpha = scale p^power exp(-rate_p p - rate_E eps_p)
      ``gamma_mixture`` alpha = scale (1 + y/kappa)^(-n) / (2p), y = p or eps_p
      ``table``         cubic spline of ln alpha through (p, alpha) samples
      ``callable``      user function; derivatives by central differences
    """

    form: str
    params: dict = field(default_factory=dict)
    mass: float = 1.0
    fn: Callable | None = None

    def __post_init__(self):
        if self.form not in ("const", "exp_family", "gamma_mixture", "table", "callable"):
            raise ValueError(f"unknown absorption form {self.form!r}")
        if self.form == "table":
            p = np.asarray(self.params["p"], dtype=float)
            a = np.asarray(self.params["alpha"], dtype=float)
            if np.any(a <= 0) or np.any(np.diff(p) <= 0):
                raise ValueError("table needs increasing p and positive alpha")
            object.__setattr__(self, "fn", CubicSpline(p, np.log(a)))
        if self.form == "callable" and self.fn is None:
            raise ValueError("callable form needs fn")

    def _y(self, p):
        if self.params.get("variable", "p") == "E":
            e = energy(p, self.mass)
            return e, p / e, self.mass ** 2 / e ** 3
        return p, np.ones_like(p), np.zeros_like(p)

    def log(self, p):
        p = np.asarray(p, dtype=float)
        f, q = self.form, self.params
        if f == "const":
            return np.full_like(p, math.log(q.get("value", 1.0)))
        if f == "exp_family":
            return (math.log(q.get("scale", 1.0)) + q.get("power", 0.0) * np.log(p)
                    - q.get("rate_p", 0.0) * p - q.get("rate_E", 0.0) * energy(p, self.mass))
        if f == "gamma_mixture":
            y = self._y(p)[0]
            return math.log(q.get("scale", 1.0)) - q["n"] * np.log1p(y / q["kappa"]) - np.log(2 * p)
        if f == "table":
            return self.fn(p)
        return np.log(self.fn(p))

    def __call__(self, p):
        return np.exp(self.log(p))

    def dlog(self, p):
        p = np.asarray(p, dtype=float)
        f, q = self.form, self.params
        if f == "const":
            return np.zeros_like(p)
        if f == "exp_family":
            return q.get("power", 0.0) / p - q.get("rate_p", 0.0) - q.get("rate_E", 0.0) * p / energy(p, self.mass)
        if f == "gamma_mixture":
            y, dy, _ = self._y(p)
            return -q["n"] * dy / (q["kappa"] + y) - 1.0 / p
        h = 1e-4 * p
        return (self.log(p + h) - self.log(p - h)) / (2 * h)

    def d2log(self, p):
        p = np.asarray(p, dtype=float)
        f, q = self.form, self.params
        if f == "const":
            return np.zeros_like(p)
        if f == "exp_family":
            return -q.get("power", 0.0) / p ** 2 - q.get("rate_E", 0.0) * self.mass ** 2 / energy(p, self.mass) ** 3
        if f == "gamma_mixture":
            y, dy, d2y = self._y(p)
            k = q["kappa"]
            return -q["n"] * (d2y * (k + y) - dy * dy) / (k + y) ** 2 + 1.0 / p ** 2
        h = 1e-4 * p
        return (self.log(p + h) - 2 * self.log(p) + self.log(p - h)) / (h * h)


@dataclass(frozen=True, eq=False)
class CovariantProfile:
    """Sigma(z) of a Lorentz-invariant detector, z = E^2 - K^2.

    ``power``: Sigma = (z/m^2)^(-n);  ``exp``: Sigma = exp(-lam (z - m^2)).
    """

    form: str = "power"
    params: dict = field(default_factory=lambda: {"n": 1})
    mass: float = 1.0

    def __call__(self, z):
        m2 = self.mass ** 2
        if self.form == "power":
            return (np.asarray(z) / m2) ** (-self.params["n"])
        if self.form == "exp":
            return np.exp(-self.params["lam"] * (np.asarray(z) - m2))
        raise ValueError(f"unknown covariant form {self.form!r}")

    def dlog_at_mass_shell(self):
        if self.form == "power":
            return -self.params["n"] / self.mass ** 2
        return -self.params["lam"]


@dataclass(frozen=True, eq=False)
class SpreadProfile:
    """Dimensionless record profile f(s) of an ideal detector, u_p(x) = p f(p x)."""

    form: str = "gaussian"
    params: dict = field(default_factory=lambda: {"width": 1.0})
    fn: Callable | None = None
    halfwidth: float | None = None

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.form == "gaussian":
            w = self.params.get("width", 1.0)
            return np.exp(-0.5 * (s / w) ** 2) / (w * math.sqrt(2 * math.pi))
        return self.fn(s)

    @cached_property
    def _nodes(self):
        half = self.halfwidth or 40.0 * self.params.get("width", 1.0)
        s, w = gauss_legendre_panels(-half, half, 64, 16)
        return s, w * self(s)

    def variance(self):
        s, w = self._nodes
        mean = np.dot(w, s)
        return float(np.dot(w, (s - mean) ** 2))

    def fourier(self, k):
        """f^(k) = int f(s) e^{iks} ds by quadrature on the sampled profile."""
        s, w = self._nodes
        k = np.asarray(k, dtype=float)
        out = np.exp(1j * np.multiply.outer(k, s)) @ w
        return out

    @cached_property
    def _fourier_cheb(self):
        # |p - p'|/pbar < 2 for positive momenta
        for deg in (32, 64, 128, 256, 512):
            fit = chebyshev.Chebyshev.interpolate(lambda k: self.fourier(k).real, deg, domain=[-2, 2])
            if np.max(np.abs(fit.coef[-4:])) < 1e-15:
                break
        imag = chebyshev.Chebyshev.interpolate(lambda k: self.fourier(k).imag, deg, domain=[-2, 2])
        return fit, imag

    def fourier_interp(self, k):
        re, im = self._fourier_cheb
        if np.max(np.abs(im.coef)) < 1e-14:
            return re(k)
        return re(k) + 1j * im(k)


# -- detector models ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DetectorModel:
    kind: str
    tau: float | None = None
    delta: float | None = None
    alpha: Absorption | None = None
    sigma: CovariantProfile | None = None
    u_profile: SpreadProfile | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if self.kind == "maximal":
            if (self.tau is None) != (self.delta is None):
                raise ValueError("maximal detector needs both tau and delta, or neither")
            if self.tau is not None and not (self.tau > 0 and self.delta > 0):
                raise ValueError("tau and delta must be positive")
        if self.kind in ("fully_decoherent", "coherent") and self.alpha is None:
            raise ValueError(f"{self.kind} detector needs an absorption coefficient")
        if self.kind == "covariant" and self.sigma is None:
            object.__setattr__(self, "sigma", CovariantProfile())
        if self.kind == "ideal" and self.u_profile is None:
            object.__setattr__(self, "u_profile", SpreadProfile())

    def absorption(self, mass: float = 1.0) -> Callable | None:
        """alpha(p) used to reweight the state, or None for no reweighting."""
        if self.kind == "maximal":
            if self.tau is None:
                return None
            return maximal_detector_forms(self.tau, self.delta, mass)[1]
        if self.kind == "covariant":
            s0 = float(self.sigma(mass ** 2))
            return lambda p: s0 / (2 * np.asarray(p))
        return self.alpha

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.tau is not None:
            out.update(tau=self.tau, delta=self.delta)
        if self.alpha is not None:
            out["alpha"] = {"form": self.alpha.form, **{k: v for k, v in self.alpha.params.items()
                                                         if not isinstance(v, (list, np.ndarray))}}
        if self.kind == "covariant":
            out["sigma"] = {"form": self.sigma.form, **self.sigma.params}
        if self.kind == "ideal":
            out["u_profile"] = {"form": self.u_profile.form, **self.u_profile.params}
        return out


def maximal_detector_forms(tau: float, delta: float, mass: float = 1.0):
    """Record correlation S(t, x) and absorption alpha(p) of the maximal detector."""
    if not (tau > 0 and delta > 0):
        raise ValueError("tau and delta must be positive")

    def S(t, x):
        return 1.0 / ((1 + 1j * np.asarray(t) / tau) * (1 - 1j * np.asarray(x) / delta))

    def alpha(p):
        p = np.asarray(p, dtype=float)
        return tau * delta * np.exp(-tau * energy(p, mass) - delta * p) / (2 * p)

    return S, alpha


# -- kernels --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalizationKernel:
    detector: DetectorModel
    mass: float = 1.0

    @property
    def kind(self):
        return self.detector.kind

    @property
    def alpha(self):
        return self.detector.absorption(self.mass)

    def __call__(self, p, q):
        return self.eval(p, q)

    def eval(self, p, q):
        p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        if np.any(p <= 0) or np.any(q <= 0):
            raise DomainError("localization kernel needs positive momenta")
        kind, m = self.kind, self.mass
        if kind == "maximal":
            return np.ones(p.shape)
        if kind == "fully_decoherent":
            a = self.detector.alpha
            pbar = 0.5 * (p + q)
            return pbar / np.sqrt(p * q) * np.exp(a.log(pbar) - 0.5 * (a.log(p) + a.log(q)))
        if kind == "coherent":
            a = self.detector.alpha
            ebar = 0.5 * (energy(p, m) + energy(q, m))
            k = np.sqrt(np.maximum(ebar * ebar - m * m, 0.0))
            # ebar^2 - m^2 loses digits for p, q << m; use the exact pbar limit there
            k = np.where(k > 0, k, 0.5 * (p + q))
            return k / np.sqrt(p * q) * np.exp(a.log(k) - 0.5 * (a.log(p) + a.log(q)))
        if kind == "covariant":
            return self._covariant(p, q)
        return self.detector.u_profile.fourier_interp((p - q) / (0.5 * (p + q)))

    def _covariant(self, p, q):
        m = self.mass
        # P.P' = m^2 cosh(eta - eta'), accurate for nearby rapidities
        deta = np.arcsinh(p / m) - np.arcsinh(q / m)
        pp = m * m * np.cosh(deta)
        sig = self.detector.sigma
        return sig(0.5 * (m * m + pp)) / sig(m * m)

    def matrix(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return self.eval(nodes[:, None], nodes[None, :])

    @property
    def extends_past_zero(self) -> bool:
        """Whether symbol(p, xi) has a natural continuation to |xi| > 2p."""
        return self.kind in ("maximal", "covariant", "ideal")

    def symbol(self, p, xi):
        """u~_p(xi) = <p + xi/2 | L | p - xi/2>, zero where the kernel is undefined."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "maximal":
            return np.ones(xi.shape)
        if self.kind == "ideal":
            return self.detector.u_profile.fourier(xi / p)
        if self.kind == "covariant":
            m = self.mass
            deta = np.arcsinh((p + 0.5 * xi) / m) - np.arcsinh((p - 0.5 * xi) / m)
            sig = self.detector.sigma
            return sig(0.5 * m * m * (1 + np.cosh(deta))) / sig(m * m)
        inside = np.abs(xi) < 2 * p
        safe = np.where(inside, xi, 0.0)
        return np.where(inside, self.eval(p + 0.5 * safe, p - 0.5 * safe), 0.0)

    @cached_property
    def regularity(self) -> str:
        rep = regularity_check(self.detector, (0.05 * self.mass, 20 * self.mass), self.mass)
        return "regular" if rep.regular else "non_positive"


def localization_kernel(det: DetectorModel, mass: float = 1.0) -> LocalizationKernel:
    if not mass > 0:
        raise DomainError("mass must be positive")
    return LocalizationKernel(det, mass)


def detection_width(det: DetectorModel, p, mass: float = 1.0):
    """Variance sigma^2(p) of the detection record.

    Every family follows from the general expression
    sigma^2 = (1/4) d^2/dp^2 ln S~(p, eps_p) - m^2/(4 eps^3) d/dE ln S~.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError("detection width needs p > 0")
    m = mass
    eps = energy(p, m)
    kind = det.kind
    if kind == "maximal":
        return np.zeros_like(p)
    if kind == "fully_decoherent":
        return 0.25 * det.alpha.d2log(p) - 0.25 / p ** 2
    if kind == "coherent":
        a = det.alpha
        return (0.25 * a.d2log(p) - 0.25 / p ** 2
                - m * m / (4 * eps * eps * p) * (1.0 / p + a.dlog(p)))
    if kind == "covariant":
        return -0.5 * det.sigma.dlog_at_mass_shell() * m * m / eps ** 2
    return det.u_profile.variance() / p ** 2


# -- record spread ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RecordSpread:
    p: float
    x_grid: np.ndarray
    density: np.ndarray
    variance: float
    """-u~''(0) from Richardson-extrapolated central differences of the symbol."""
    regularity: str
    truncated: bool

    @property
    def norm(self):
        return float(np.trapezoid(self.density, self.x_grid))

    @property
    def mean(self):
        return float(np.trapezoid(self.x_grid * self.density, self.x_grid))

    @property
    def second_moment(self):
        return float(np.trapezoid(self.x_grid ** 2 * self.density, self.x_grid))


def symbol_curvature(kernel: LocalizationKernel, p: float) -> float:
    """-u~''(0) by Richardson extrapolation of central second differences."""
    h = 0.02 * p

    def d2(step):
        u = np.real(kernel.symbol(p, np.array([-step, 0.0, step])))
        return (u[0] - 2 * u[1] + u[2]) / step ** 2

    return float(-(4 * d2(h / 2) - d2(h)) / 3)


def record_spread(det: DetectorModel, p: float, mass: float = 1.0, n_x: int = 2049,
                  tol: float = 1e-11) -> RecordSpread:
    """Weyl-Wigner transform u_p(x) = int dxi/(2 pi) L(p + xi/2, p - xi/2) e^{-i xi x}."""
    if not p > 0:
        raise DomainError("record spread needs p > 0")
    kernel = localization_kernel(det, mass)
    regularity = kernel.regularity
    if det.kind == "maximal":
        h = 1e-3 / p
        x = h * np.arange(-(n_x // 2), n_x // 2 + 1)
        dens = np.zeros_like(x)
        dens[n_x // 2] = 1.0 / h
        return RecordSpread(p, x, dens, 0.0, regularity, False)

    def u(xi):
        return np.real(kernel.symbol(p, xi))

    # xi scale: where the symbol has dropped to one half
    # the symbol is set to zero from xi = 2p on when it has no continuation; stay below it
    xi_cap = 1e4 * max(p, mass) if kernel.extends_past_zero else 2 * p * (1 - 1e-9)
    probe = np.geomspace(1e-4 * p, xi_cap, 4000)
    vals = np.abs(u(probe))
    below_half = np.nonzero(vals < 0.5)[0]
    xi_half = probe[below_half[0]] if below_half.size else xi_cap
    small = np.nonzero(vals < tol)[0]
    truncated = not small.size
    xi_max = probe[small[0]] if small.size else xi_cap
    if truncated and kernel.extends_past_zero:
        raise FourierGridError(f"symbol still above {tol:g} at xi = {xi_cap:.3g}")

    x_half = 40.0 / xi_half
    x = np.linspace(-x_half, x_half, n_x)
    xi, w = gauss_legendre_panels(0.0, xi_max, max(8, int(math.ceil(xi_max * x_half / math.pi))), 8)
    uw = u(xi) * w
    dens = np.empty_like(x)
    for s in range(0, n_x, 256):
        dens[s:s + 256] = np.cos(np.outer(x[s:s + 256], xi)) @ uw / math.pi
    return RecordSpread(p, x, dens, symbol_curvature(kernel, p), regularity, truncated)


@dataclass(frozen=True)
class RegularityReport:
    regular: bool
    bounded: bool
    min_eigenvalue: float
    max_eigenvalue: float
    max_abs_kernel: float
    n: int


def regularity_check(det: DetectorModel, window, mass: float = 1.0, n: int = 64) -> RegularityReport:
    """Sample the kernel Gram matrix on n points and test positive semi-definiteness."""
    lo, hi = map(float, window)
    if not 0 < lo < hi:
        raise DomainError(f"window must be positive, got {window!r}")
    kernel = localization_kernel(det, mass)
    nodes = np.linspace(lo, hi, n)
    gram = kernel.matrix(nodes)
    gram = 0.5 * (gram + np.conj(gram.T))
    eig = np.linalg.eigvalsh(gram)
    max_abs = float(np.max(np.abs(gram)))
    return RegularityReport(
        regular=bool(eig[0] >= -1e-9 * eig[-1]),
        bounded=bool(max_abs <= 1 + 1e-12),
        min_eigenvalue=float(eig[0]),
        max_eigenvalue=float(eig[-1]),
        max_abs_kernel=max_abs,
        n=n,
    )

"""Time-of-arrival densities P(t; x) at a fixed detector position."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate as sp_integrate

from .detectors import DetectorModel, LocalizationKernel, localization_kernel
from .exceptions import DomainError, NegativeDensity, NonConvergence, ZeroMass
from .numerics import panels_for_phase
from .states import MomentumState, energy, reweighted, velocity

DEFAULT_TIMES = 2048


@dataclass(frozen=True, eq=False)
class ArrivalDistribution:
    detector_x: float
    t_grid: np.ndarray
    density: np.ndarray
    norm: float
    state_ref: dict = field(default_factory=dict)
    detector_ref: dict = field(default_factory=dict)
    route: str = "kernel"
    extra: dict = field(default_factory=dict)

    @property
    def mean(self):
        return float(np.trapezoid(self.t_grid * self.density, self.t_grid) / self.norm)

    @property
    def variance(self):
        mu = self.mean
        return float(np.trapezoid((self.t_grid - mu) ** 2 * self.density, self.t_grid) / self.norm)

    def normalized(self):
        return self.density / self.norm

    def l1_distance(self, other: "ArrivalDistribution") -> float:
        """L1 distance of the normalized densities, other interpolated onto this grid."""
        g = np.interp(self.t_grid, other.t_grid, other.normalized(), left=0.0, right=0.0)
        return float(np.trapezoid(np.abs(self.normalized() - g), self.t_grid))

    def metadata(self) -> dict:
        return {
            "x": self.detector_x,
            "norm": self.norm,
            "route": self.route,
            "detector": self.detector_ref,
            "state": self.state_ref,
            "grid": {"t_min": float(self.t_grid[0]), "t_max": float(self.t_grid[-1]),
                     "n": int(self.t_grid.size)},
            **self.extra,
        }


def state_ref(state: MomentumState) -> dict:
    return {"family": state.family, "mass": state.mass,
            "params": {k: v for k, v in state.params.items() if isinstance(v, (int, float, str))},
            "support": list(state.support)}


# -- helpers shared with moments / position -----------------------------------

def detector_state(state: MomentumState, det: DetectorModel | LocalizationKernel | None) -> MomentumState:
    """The alpha-reweighted, renormalized state seen by the detector."""
    if det is None:
        return state
    if isinstance(det, LocalizationKernel):
        det = det.detector
    alpha = det.absorption(state.mass)
    if alpha is None:
        return state
    return reweighted(state, alpha, f"alpha[{det.kind}]")


def _require_p(state):
    if state.variable != "p":
        raise DomainError("arrival densities need a state integrated in p")


def mean_classical_time(state: MomentumState, x: float, n_panels: int = 128) -> float:
    """<T_c> = x <1/v> - Re int psi* (1/v) i psi' dp, the Wigner average of (x - xbar)/v."""
    p, w = state.nodes(n_panels)
    h = 1e-6 * (state.support[1] - state.support[0])
    psi = state.psi(p)
    dpsi = (state.psi(p + h) - state.psi(p - h)) / (2 * h)
    inv_v = 1.0 / velocity(p, state.mass)
    return float(x * np.sum(w * inv_v * np.abs(psi) ** 2)
                 - np.real(np.sum(w * np.conj(psi) * inv_v * 1j * dpsi)))


def local_position(state: MomentumState, p) -> np.ndarray:
    """xbar(p) = -d arg psi / dp, the position carried by each momentum component."""
    lo, hi = state.support
    h = 1e-6 * (hi - lo)
    q = np.clip(p, lo + h, hi - h)
    with np.errstate(divide="ignore", invalid="ignore"):
        darg = np.imag((state.psi(q + h) - state.psi(q - h)) / (2 * h * state.psi(q)))
    return -np.where(np.isfinite(darg), darg, 0.0)


def _intrinsic_width(state: MomentumState) -> float:
    """Position spread of the phase-free amplitude |psi|, sqrt(int |d|psi|/dp|^2 dp)."""
    p, w = state.nodes(128)
    h = 1e-6 * (state.support[1] - state.support[0])
    da = (np.abs(state.psi(p + h)) - np.abs(state.psi(p - h))) / (2 * h)
    return math.sqrt(float(np.sum(w * da * da)))


def default_time_grid(state: MomentumState, x: float, n_times: int = DEFAULT_TIMES,
                      extra_variance: float = 0.0):
    """Grid around <T_c> that also reaches the classical arrival times of the momentum tails."""
    m = state.mass
    x_mean, x_std = state.position_moments()
    inv_v = state.expect(lambda p: 1.0 / velocity(p, m))
    inv_v2 = state.expect(lambda p: 1.0 / velocity(p, m) ** 2)
    std_inv_v = math.sqrt(max(inv_v2 - inv_v ** 2, 0.0))
    mass_term = 0.25 * m ** 4 * state.expect(lambda p: 1.0 / (energy(p, m) ** 2 * p ** 4))
    local = x_std * inv_v + math.sqrt(mass_term + max(extra_variance, 0.0))
    spread = local + abs(x - x_mean) * std_inv_v
    center = mean_classical_time(state, x)
    lo_t, hi_t = center - 10 * spread, center + 10 * spread

    # momenta between the 1e-9 quantiles arrive classically at (x - xbar(p))/v_p
    p = np.linspace(*state.support, 2049)
    dens = state.density(p)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(p))])
    cdf /= cdf[-1]
    core = (cdf >= 1e-9) & (cdf <= 1 - 1e-9)
    if np.any(core):
        # margin from the width of |psi| alone; the chirp is already in xbar(p)
        margin = 10 * (_intrinsic_width(state) / float(np.min(velocity(p[core], m)))
                       + math.sqrt(mass_term + max(extra_variance, 0.0)))
        tc = (x - local_position(state, p[core])) / velocity(p[core], m)
        lo_t = min(lo_t, float(np.min(tc)) - margin)
        hi_t = max(hi_t, float(np.max(tc)) + margin)
    return np.linspace(lo_t, hi_t, n_times)


def local_phase_rate(state: MomentumState, xs, ts, n_samples: int = 513) -> float:
    """max |x - v_p t - xbar(p)| over the support and the corners of (xs, ts)."""
    lo, hi = state.support
    p = np.linspace(lo, hi, n_samples)
    xbar = local_position(state, p)
    v = velocity(p, state.mass)
    xs = np.asarray([np.min(xs), np.max(xs)], dtype=float)
    ts = np.asarray([np.min(ts), np.max(ts)], dtype=float)
    rates = xs[:, None, None] - ts[None, :, None] * v - xbar
    return float(np.max(np.abs(rates)))


def momentum_grid(state: MomentumState, x, t_grid, oversample: float = 2.0):
    """GL nodes on the support with at most pi/oversample of phase per panel."""
    _require_p(state)
    lo, hi = state.support
    rate = local_phase_rate(state, x, t_grid)
    return panels_for_phase(lo, hi, oversample * rate, min_panels=32)


def _amplitudes(state, x, t_grid, p, w):
    """Columns b_j(t) = w_j psi_j sqrt(v_j) e^{i(p_j - p_c)x - i(eps_j - eps_c)t}."""
    m = state.mass
    pc = 0.5 * (p[0] + p[-1])
    ec = energy(pc, m)
    a = w * state.psi(p) * np.sqrt(velocity(p, m)) * np.exp(1j * (p - pc) * x)
    phase = np.exp(-1j * np.outer(t_grid, energy(p, m) - ec))
    return phase * a


def _low_rank(kernel, p, tol=1e-14, max_rank=400):
    """Pivoted Cholesky factor G with L ~ G G^T, or None if L is not numerically PSD."""
    n = p.size
    resid = np.ones(n)
    cols = []
    G = np.zeros((n, 0))
    while len(cols) < min(n, max_rank):
        i = int(np.argmax(resid))
        if resid[i] <= tol:
            return G
        col = kernel.eval(p, np.full(n, p[i])) - G @ G[i]
        if col[i] <= 0 or np.any(resid - col ** 2 / col[i] < -1e-9):
            return None
        g = col / math.sqrt(col[i])
        G = np.column_stack([G, g])
        cols.append(i)
        resid = resid - g * g
    return None


def kernel_factor(kernel, p, rel_cut=1e-14):
    """(F, signs) with L(p_j, p_k) ~ sum_r signs_r F_jr F_kr.

    Pivoted Cholesky for positive kernels, an eigendecomposition otherwise.
    """
    G = _low_rank(kernel, p)
    if G is not None:
        return G, np.ones(G.shape[1])
    factor = _skeleton(kernel, p)
    if factor is not None:
        return factor
    return matrix_factor(kernel.matrix(p), rel_cut)


def _skeleton(kernel, p, tol=1e-10, max_rank=200):
    """Symmetric cross approximation L ~ C W^+ C^T for smooth indefinite kernels, or None."""
    n = p.size
    diag = kernel.eval(p, p)
    probes = np.linspace(0, n - 1, 9).astype(int)
    piv = [n // 2]
    cols = [kernel.eval(p, np.full(n, p[n // 2]))]
    scale = max(float(np.max(np.abs(diag))), 1e-300)
    while len(piv) <= min(n, max_rank):
        C = np.column_stack(cols)
        W = 0.5 * (C[piv] + C[piv].T)
        lam, Q = np.linalg.eigh(W)
        keep = np.abs(lam) > 1e-12 * np.max(np.abs(lam))
        F = C @ Q[:, keep] / np.sqrt(np.abs(lam[keep]))
        signs = np.sign(lam[keep])
        d = np.abs(diag - (F * F) @ signs)
        probe = kernel.eval(p[:, None], p[probes][None, :]) - (F * signs) @ F[probes].T
        if max(d.max(), np.abs(probe).max()) < tol * scale:
            return F, signs
        if d.max() >= np.abs(probe).max():
            nxt = int(np.argmax(d))
        else:
            nxt = int(np.unravel_index(np.argmax(np.abs(probe)), probe.shape)[0])
        if nxt in piv:
            return None
        piv.append(nxt)
        cols.append(kernel.eval(p, np.full(n, p[nxt])))
    return None


def matrix_factor(M, rel_cut=1e-14):
    M = 0.5 * (M + M.T)
    lam, U = np.linalg.eigh(M)
    keep = np.abs(lam) > rel_cut * np.max(np.abs(lam))
    lam, U = lam[keep], U[:, keep]
    return U * np.sqrt(np.abs(lam)), np.sign(lam)


def quadratic_form(make_rows, points, factor, chunk=256):
    """Re sum_jk B_tj L_jk conj(B_tk) with B built chunk by chunk over ``points``."""
    F, signs = factor
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        B = make_rows(points[s:s + chunk])
        out[s:s + chunk] = (np.abs(B @ F) ** 2) @ signs
    return out


def _finish(dist_density, t_grid, x, state, det_ref, route, regular=True, extra=None):
    norm = float(np.trapezoid(dist_density, t_grid))
    peak = float(np.max(dist_density))
    low = float(np.min(dist_density))
    if low < -1e-6 * peak:
        if regular:
            warnings.warn(f"negative arrival density {low:.3g} for a regular detector", NegativeDensity)
        else:
            warnings.warn(f"non-positive kernel gives density dips down to {low:.3g}", NegativeDensity)
    return ArrivalDistribution(float(x), np.asarray(t_grid), dist_density, norm,
                               state_ref(state), det_ref, route, extra or {})


# -- routes ----------------------------------------------------------------------

def arrival_density(state: MomentumState, kernel: LocalizationKernel | DetectorModel, x: float,
                    t_grid=None, n_times: int = DEFAULT_TIMES) -> ArrivalDistribution:
    """P(t, x) from the double momentum integral with the localization kernel."""
    if not math.isfinite(x):
        raise DomainError("detector position must be finite")
    if isinstance(kernel, DetectorModel):
        kernel = localization_kernel(kernel, state.mass)
    _require_p(state)
    st = detector_state(state, kernel)
    if t_grid is None:
        from .moments import detector_term
        t_grid = default_time_grid(st, x, n_times, detector_term(st, kernel.detector))
    t_grid = np.asarray(t_grid, dtype=float)
    p, w = momentum_grid(st, x, t_grid)
    dens = quadratic_form(lambda ts: _amplitudes(st, x, ts, p, w), t_grid, kernel_factor(kernel, p))
    dens /= 2 * math.pi
    regular = kernel.kind == "maximal" or kernel.regularity == "regular"
    return _finish(dens, t_grid, x, state, kernel.detector.describe(), "kernel", regular,
                   {"n_momentum": int(p.size), "regularity": "regular" if regular else "non_positive"})


def arrival_density_amplitude(state: MomentumState, x: float, tau: float | None = None,
                              delta: float | None = None, t_grid=None,
                              n_times: int = DEFAULT_TIMES) -> ArrivalDistribution:
    """Maximal localization as |int dp psi~ sqrt(v) e^{ipx - i eps t}|^2 / (2 pi).

    With ``tau = delta = None`` the state is not reweighted.
    """
    det = DetectorModel("maximal", tau, delta)
    st = detector_state(state, det)
    _require_p(st)
    if t_grid is None:
        t_grid = default_time_grid(st, x, n_times)
    t_grid = np.asarray(t_grid, dtype=float)
    p, w = momentum_grid(st, x, t_grid)
    dens = np.empty(t_grid.size)
    for i in range(0, t_grid.size, 256):
        amp = _amplitudes(st, x, t_grid[i:i + 256], p, w).sum(axis=1)
        dens[i:i + 256] = np.abs(amp) ** 2 / (2 * math.pi)
    return _finish(dens, t_grid, x, state, det.describe(), "amplitude")


def kijowski_density(state: MomentumState, x: float, t_grid) -> np.ndarray:
    """Non-relativistic Kijowski density |int dp psi sqrt(p/m) e^{ipx - ip^2 t/2m}|^2 / (2 pi)."""
    m = state.mass
    t_grid = np.asarray(t_grid, dtype=float)
    lo, hi = state.support
    # non-relativistic group velocity p/m bounds the phase rate as in the relativistic case
    rate = local_phase_rate(state, x, t_grid) + np.max(np.abs(t_grid)) * abs(hi / m - velocity(hi, m))
    p, w = panels_for_phase(lo, hi, 2.0 * rate, min_panels=32)
    pc = 0.5 * (lo + hi)
    a = w * state.psi(p) * np.sqrt(p / m) * np.exp(1j * (p - pc) * x)
    amp = np.exp(-1j * np.outer(t_grid, (p * p - pc * pc) / (2 * m))) @ a
    return np.abs(amp) ** 2 / (2 * math.pi)


# -- Phillips convolution route ---------------------------------------------------

@lru_cache(maxsize=64)
def _lorentzian_transform(scale: float, lo: float, hi: float, sign: int):
    """Chebyshev fit of S^(E) = 2 int_0^inf [s^2 cos(E u) + sign s u sin(E u)]/(s^2 + u^2) du.

    The oscillatory weights are handled by QUADPACK's Fourier-integral rule
    on the semi-infinite range; the 1/u tails rule out a plain FFT grid.
    """
    def value(E):
        c, _ = sp_integrate.quad(lambda u: scale ** 2 / (scale ** 2 + u * u), 0, np.inf,
                                 weight="cos", wvar=E, limlst=200)
        s, _ = sp_integrate.quad(lambda u: scale * u / (scale ** 2 + u * u), 0, np.inf,
                                 weight="sin", wvar=E, limlst=200)
        return 2 * (c + sign * s)

    deg = 24
    nodes = chebyshev.chebpts2(deg + 1)
    E = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        vals = np.array([value(e) for e in E])
    if not np.all(np.isfinite(vals)):
        raise NonConvergence("Fourier transform of the record correlation failed")
    return chebyshev.Chebyshev.fit(E, vals, deg, domain=[lo, hi])


def phillips_wavefunction(state: MomentumState, x, t, p=None, w=None):
    """psi_Ph(t, x) = int dp psi(p) e^{ipx - i eps t} / sqrt(2 pi 2 eps) and its x-derivative."""
    m = state.mass
    if p is None:
        p, w = state.nodes(128)
    c = w * state.psi(p) / np.sqrt(2 * math.pi * 2 * energy(p, m))
    ph = np.exp(1j * (np.multiply.outer(x, p) - np.multiply.outer(t, energy(p, m))))
    return ph @ c, (ph * (1j * p)) @ c


def arrival_density_phillips(state: MomentumState, x: float, tau: float, delta: float, t_grid=None,
                             n_times: int = DEFAULT_TIMES) -> ArrivalDistribution:
    """Convolution of the Phillips bilinear psi_Ph(X - u/2) psi_Ph*(X + u/2) with S(u).

    S factorizes in time and space, so the convolution becomes a momentum
    double sum weighted by the transforms of the two Lorentzian factors,
    taken numerically at the mean energy and momentum of each pair.
    """
    if not (tau > 0 and delta > 0):
        raise DomainError("tau and delta must be positive")
    _require_p(state)
    m = state.mass
    if t_grid is None:
        t_grid = default_time_grid(state, x, n_times)
    t_grid = np.asarray(t_grid, dtype=float)
    p, w = momentum_grid(state, x, t_grid)
    eps = energy(p, m)
    St = _lorentzian_transform(float(tau), float(eps[0]), float(eps[-1]), 1)
    Sx = _lorentzian_transform(float(delta), float(p[0]), float(p[-1]), 1)
    ebar = 0.5 * (eps[:, None] + eps[None, :])
    kbar = 0.5 * (p[:, None] + p[None, :])
    M = St(ebar) * Sx(kbar)
    # total mass of the convolved bilinear: int dp |psi|^2 M(p, p) / (2p)
    p_tot = float(np.sum(w * np.abs(state.psi(p)) ** 2 * np.diag(M) / (2 * p)))
    pc = 0.5 * (p[0] + p[-1])
    ec = energy(pc, m)
    c = w * state.psi(p) / np.sqrt(2 * eps) * np.exp(1j * (p - pc) * x)
    def rows(ts):
        return np.exp(-1j * np.outer(ts, eps - ec)) * c

    dens = quadratic_form(rows, t_grid, matrix_factor(M)) / (2 * math.pi * p_tot)
    # Hermiticity residue of the unsymmetrized sum on a few times
    sub = rows(t_grid[:: max(1, len(t_grid) // 16)])
    full = np.einsum("tj,jk,tk->t", sub, M, np.conj(sub))
    residue = float(np.max(np.abs(full.imag)) / np.max(np.abs(full.real)))
    det = DetectorModel("maximal", tau, delta)
    return _finish(dens, t_grid, x, state, det.describe(), "phillips", True,
                   {"imag_residue": residue, "p_tot": p_tot})


def phillips_current(state: MomentumState, x: float, t_grid) -> np.ndarray:
    """Klein-Gordon current 2 Im(psi_Ph* d_x psi_Ph) at fixed x on t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    p, w = momentum_grid(state, x, t_grid)
    val, dval = phillips_wavefunction(state, np.full_like(t_grid, x), t_grid, p, w)
    return 2 * np.imag(np.conj(val) * dval)


# -- mixed states and the theta(pp') prescription ------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrixGrid:
    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if not np.allclose(v, np.conj(v.T), atol=1e-12 * max(1.0, np.max(np.abs(v)))):
            raise ValueError("density matrix must be Hermitian")
        if np.any(np.real(np.diag(v)) < -1e-14):
            raise ValueError("density matrix diagonal must be nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def trace(self):
        return float(np.real(np.sum(self.weights * np.diag(self.values))))

    @classmethod
    def from_amplitude(cls, psi, nodes, weights, mass=1.0):
        a = np.asarray(psi(nodes), dtype=complex)
        rho = np.outer(a, np.conj(a))
        out = cls(np.asarray(nodes, float), rho, np.asarray(weights, float), mass)
        return out.scaled(1.0 / out.trace)

    def scaled(self, c):
        return DensityMatrixGrid(self.nodes, self.values * c, self.weights, self.mass)


def restrict_positive(rho: DensityMatrixGrid) -> DensityMatrixGrid:
    """Drop the p p' < 0 blocks and renormalize the trace."""
    same = np.multiply.outer(rho.nodes, rho.nodes) > 0
    vals = np.where(same, rho.values, 0.0)
    tr = float(np.real(np.sum(rho.weights * np.diag(vals))))
    if not tr > 0:
        raise ZeroMass("no weight left after removing sign-mixed momentum pairs")
    return DensityMatrixGrid(rho.nodes, vals / tr, rho.weights, rho.mass)


def theta_cross_term(rho: DensityMatrixGrid, x: float) -> float:
    """Contribution of the p p' < 0 blocks to int dt P(t, x).

    Time integration pins p' = -p, leaving int dp rho(p, -p) L(|p|, |p|) e^{2ipx};
    the grid must be symmetric about zero.
    """
    p = rho.nodes
    if not np.allclose(p, -p[::-1], rtol=0, atol=1e-12 * np.max(np.abs(p))):
        raise DomainError("cross-term evaluation needs momentum nodes symmetric about zero")
    cross = rho.values[np.arange(p.size), np.arange(p.size)[::-1]]
    return float(np.real(np.sum(rho.weights * cross * np.exp(2j * p * x))))


def arrival_density_matrix(rho: DensityMatrixGrid, kernel: LocalizationKernel, x: float,
                           t_grid) -> ArrivalDistribution:
    """Kernel route for a density matrix on a grid; sign-mixed pairs must already be removed."""
    p, w = rho.nodes, rho.weights
    m = rho.mass
    if np.any(p == 0):
        raise DomainError("p = 0 node")
    if np.any((np.multiply.outer(p, p) < 0) & (np.abs(rho.values) > 0)):
        raise DomainError("apply restrict_positive before computing the density")
    t_grid = np.asarray(t_grid, dtype=float)
    ap = np.abs(p)
    alpha = kernel.alpha
    a = alpha(ap) if alpha is not None else np.ones_like(ap)
    rw = w * np.sqrt(np.abs(velocity(p, m)) * a)
    rho_t = rho.values * np.outer(rw, rw)
    # time integration gives sum_j w_j alpha_j rho_jj
    rho_t /= float(np.real(np.sum(w * a * np.diag(rho.values))))
    K = kernel.matrix(ap) * (np.multiply.outer(p, p) > 0)
    ph = np.exp(1j * p * x)[None, :] * np.exp(-1j * np.outer(t_grid, energy(p, m)))
    dens = np.real(np.einsum("tj,jk,tk->t", ph, rho_t * K, np.conj(ph))) / (2 * math.pi)
    return ArrivalDistribution(float(x), t_grid, dens, float(np.trapezoid(dens, t_grid)),
                               {"family": "density_matrix", "mass": m}, kernel.detector.describe(),
                               "kernel")

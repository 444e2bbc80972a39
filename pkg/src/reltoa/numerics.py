"""Quadrature, root finding and scalar minimization.

Everything in here is deterministic: panels are refined in a fixed order and
partial sums are combined with :func:`math.fsum`.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .exceptions import BracketInvalid, NoSignChange, NonConvergence

# 15-point Kronrod rule with its embedded 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae.
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    nodes_per_panel: int = 8

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class MinimizeResult:
    argmin: float
    min_value: float
    iterations: int
    converged: bool


def _evaluate(f, x):
    y = f(x)
    y = np.asarray(y)
    if y.shape != x.shape:
        y = np.array([f(float(xi)) for xi in x])
    return y


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = _evaluate(f, mid + half * _NODES)
    kron = half * np.dot(_KW, y)
    gauss = half * np.dot(_GW, y)
    return kron, abs(kron - gauss)


def _fsum(values):
    values = list(values)
    if any(isinstance(v, complex) or np.iscomplexobj(v) for v in values):
        return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))
    return math.fsum(float(v) for v in values)


def _map_infinite(f, a, b):
    """Rewrite an improper integral as one over a finite interval."""
    if math.isinf(a) and math.isinf(b):
        def g(s):
            return f(s / (1.0 - s * s)) * (1.0 + s * s) / (1.0 - s * s) ** 2
        return g, -1.0, 1.0
    if math.isinf(b):
        def g(s):
            return f(a + s / (1.0 - s)) / (1.0 - s) ** 2
        return g, 0.0, 1.0
    if math.isinf(a):
        def g(s):
            return f(b - s / (1.0 - s)) / (1.0 - s) ** 2
        return g, 0.0, 1.0
    return f, a, b


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
              full_output: bool = False, initial_panels: int = 1):
    """Globally adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    ``f`` should accept a numpy array; scalar-only callables are evaluated
    point by point.  Infinite limits are mapped with ``p = a + s/(1-s)``.
    Returns the estimate, or ``(estimate, error)`` with ``full_output``.
    ``initial_panels`` pre-splits the (mapped) interval so narrow features
    in wide ranges are not missed by the first rule.
    """
    spec = spec or DEFAULT_SPEC
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    g, lo, hi = _map_infinite(f, float(a), float(b))

    edges = np.linspace(lo, hi, max(1, initial_panels) + 1)
    # heap entries: (-err, order, a, b, value)
    heap = []
    for counter, (qa, qb) in enumerate(zip(edges[:-1], edges[1:])):
        v, e = _gk15(g, float(qa), float(qb))
        heap.append((-e, counter, float(qa), float(qb), v))
    heapq.heapify(heap)
    counter = len(heap)
    while True:
        total = _fsum(item[4] for item in heap)
        total_err = math.fsum(-item[0] for item in heap)
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            break
        if counter >= spec.max_subdivisions:
            raise NonConvergence(
                f"integrate: {counter} subdivisions, error {total_err:.3g} above tolerance")
        neg_err, _, pa, pb, _ = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        if not pa < pm < pb:
            raise NonConvergence("integrate: interval collapsed below machine resolution")
        for qa, qb in ((pa, pm), (pm, pb)):
            v, e = _gk15(g, qa, qb)
            heapq.heappush(heap, (-e, counter, qa, qb, v))
            counter += 1
    if full_output:
        return total, total_err
    return total


def integrate2d(f: Callable, domain, spec: QuadratureSpec | None = None):
    """Iterated adaptive quadrature over a rectangle ``((ax, bx), (ay, by))``.

    ``f(x, y)`` is called with scalar ``x`` and an array ``y``.
    """
    spec = spec or DEFAULT_SPEC
    (ax, bx), (ay, by) = domain
    inner_spec = QuadratureSpec(spec.abs_tol * 1e-2, spec.rel_tol * 1e-2,
                                spec.max_subdivisions, spec.nodes_per_panel)

    def outer(xs):
        return np.array([integrate(lambda y, x=x: f(x, y), ay, by, inner_spec) for x in xs])

    return complex(integrate(outer, ax, bx, spec))


def gauss_legendre_panels(a: float, b: float, n_panels: int, nodes_per_panel: int = 8):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def panels_for_phase(a: float, b: float, max_phase_rate: float, nodes_per_panel: int = 8,
                     min_panels: int = 4):
    """Composite GL rule whose panels each carry at most pi of phase."""
    n = max(min_panels, int(math.ceil((b - a) * max_phase_rate / math.pi)))
    return gauss_legendre_panels(a, b, n, nodes_per_panel)


_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def minimize_scalar(f: Callable[[float], float], bracket, spec: QuadratureSpec | None = None,
                    max_iter: int = 500) -> MinimizeResult:
    """Brent minimization (golden section with parabolic steps) on ``bracket``."""
    spec = spec or DEFAULT_SPEC
    a, b = map(float, bracket)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise BracketInvalid(f"invalid bracket {bracket!r}")
    tol = spec.abs_tol
    x = w = v = a + _INVPHI2 * (b - a)
    fx = fw = fv = f(x)
    d = e = 0.0
    for it in range(1, max_iter + 1):
        m = 0.5 * (a + b)
        tol1 = 0.25 * tol + 1e-15 * abs(x)
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            return MinimizeResult(x, fx, it, True)
        parabolic = False
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            if abs(p) < abs(0.5 * q * e) and q * (a - x) < p < q * (b - x):
                e, d = d, p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if x < m else -tol1
                parabolic = True
        if not parabolic:
            e = (b - x) if x < m else (a - x)
            d = _INVPHI2 * e
        u = x + (d if abs(d) >= tol1 else math.copysign(tol1, d))
        fu = f(u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    raise NonConvergence(f"minimize_scalar: no convergence after {max_iter} iterations")


def find_root(f: Callable[[float], float], bracket, spec: QuadratureSpec | None = None) -> float:
    a, b = map(float, bracket)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NoSignChange(f"f({a})={fa:.3g} and f({b})={fb:.3g} have the same sign")
    return optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def trapezoid(y, x) -> float:
    return float(np.trapezoid(y, x))

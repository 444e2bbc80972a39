import math
import warnings

import numpy as np
import pytest

from reltoa import fundamental_bound, kinetic_bound, levy_bound_constants, make_gaussian_state, ultrarel_bounds
from reltoa import make_inverse_gaussian_state, variational_constant
from reltoa.bounds import (
    QUOTED_VALUES,
    inequality_suite,
    nonrel_bracket,
    paper_constants_table,
    q_poly,
    ultrarel_bracket,
    ultrarel_constant,
)
from reltoa.exceptions import DomainError, RegimeWarning
from reltoa.states import kinetic


def _bisect(f, a, b, tol=1e-14):
    fa = f(a)
    while b - a > tol:
        c = 0.5 * (a + b)
        if (f(c) > 0) == (fa > 0):
            a, fa = c, f(c)
        else:
            b = c
    return 0.5 * (a + b)


def test_nonrel_minimizer_root_of_cubic():
    b, const = variational_constant("nonrel")
    root = _bisect(lambda b: b ** 3 - 0.75 * b - 1.5, 0.5, 3.0)
    assert b == pytest.approx(root, abs=1e-6)
    assert const == pytest.approx(0.5 * math.sqrt(nonrel_bracket(root)), rel=1e-12)
    assert 0.78 <= const <= 0.82


def test_ultrarel_minimizer_against_grid():
    xi0 = 1e4
    b, const = variational_constant("ultrarel", xi0)
    grid = np.geomspace(1e-3, 1e1, 200001)
    vals = np.array([ultrarel_constant(g, xi0) for g in grid[::100]])
    i = int(np.argmin(vals)) * 100
    fine = grid[max(i - 100, 0):i + 101]
    best = min(ultrarel_constant(g, xi0) for g in fine)
    assert const == pytest.approx(best, rel=1e-6)
    assert const < best + 1e-12


def test_ultrarel_bracket_polynomial():
    assert q_poly(1.0) == 1 + 10 + 60 + 225 + 495 + 495
    assert ultrarel_bracket(2.0, 1.0) == pytest.approx(2.0 + 1 + 21 * q_poly(0.5))


def test_variational_bad_regime():
    with pytest.raises(ValueError):
        variational_constant("medium")
    with pytest.raises(DomainError):
        variational_constant("ultrarel", -1.0)


def test_levy_closed_forms():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        ur = levy_bound_constants(1e3, 1.0, "ultrarel")
        nr = levy_bound_constants(1e-3, 1.0, "nonrel")
    assert ur.coefficient == pytest.approx(0.5 * math.sqrt(10395), rel=1e-6)
    assert nr.coefficient == pytest.approx(0.25 * math.sqrt(3), rel=1e-6)
    assert nr.paper_value == pytest.approx(2 * nr.coefficient, rel=1e-6)


def test_levy_regime_warning():
    with pytest.warns(RegimeWarning):
        levy_bound_constants(1.0, 1.0, "ultrarel")


def test_fundamental_bound_reports():
    s = make_gaussian_state(1.0, 0.05)
    rep = fundamental_bound(s, 1e6)
    assert rep.satisfied and rep.slack > 0
    assert fundamental_bound(s, 0.0).satisfied is False
    assert rep.to_dict()["rhs"] == pytest.approx(rep.rhs)
    with pytest.raises(DomainError):
        fundamental_bound(s, -1.0)


def test_kinetic_bound_nonrel():
    s = make_inverse_gaussian_state(1e-3, 5e-4)
    rep = kinetic_bound(s)
    assert rep["satisfied"]
    assert rep["mean_kinetic"] == pytest.approx(s.expect(lambda p: kinetic(p, 1.0)))
    with pytest.warns(RegimeWarning):
        kinetic_bound(make_gaussian_state(1.0, 0.05))


def test_ultrarel_weak_form_is_weaker():
    s = make_gaussian_state(20.0, 1.0)
    rep = ultrarel_bounds(s)
    assert rep["rhs_ratio"] <= 1.0
    assert rep["satisfied"]


def test_constants_table_reports_quoted_values():
    rows = {r["name"]: r for r in paper_constants_table()}
    assert rows["levy_nonrel"]["discrepancy"] == "factor 2"
    assert rows["ultrarel_variational"]["paper_value"] == QUOTED_VALUES["ultrarel_variational"]
    assert "paper_claim" in rows["levy_ultrarel"]


def test_inequality_suite_small():
    out = inequality_suite(3, 5)
    assert out["satisfied_count"] == 3
    assert out["min_ratio"] >= 1.0

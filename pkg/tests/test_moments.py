import numpy as np
import pytest

from reltoa import DetectorModel, classical_toa_stats, make_gaussian_state, variance_decomposition, wigner_function
from reltoa.arrival import arrival_density, detector_state, mean_classical_time
from reltoa.exceptions import DomainError
from reltoa.moments import cumulants_from_mgf, detector_term, mass_term, moment_generating
from reltoa.states import energy, velocity


def test_mass_term_closed_form():
    s = make_gaussian_state(1.0, 0.05)
    ref = 0.25 * s.expect(lambda p: 1.0 / (energy(p) ** 2 * p ** 4))
    assert mass_term(s) == pytest.approx(ref)
    assert detector_term(s, DetectorModel("maximal")) == 0.0


def test_classical_stats_from_wigner():
    s = make_gaussian_state(1.0, 0.05, x0=2.0)
    mean, var = classical_toa_stats(wigner_function(s), 40.0)
    assert mean == pytest.approx(38.0 * s.expect(lambda p: 1.0 / velocity(p)), rel=1e-8)
    assert var > 0


def test_decomposition_matches_quadrature(regular_detectors):
    s = make_gaussian_state(1.0, 0.08, x0=1.0, chirp=20.0)
    for det in regular_detectors:
        rep = variance_decomposition(s, det, 30.0)
        assert rep.cross_check["rel_err"] < 1e-6, det.kind
        st = detector_state(s, det)
        assert rep.mean == pytest.approx(mean_classical_time(st, 30.0), rel=1e-8)
        assert set(rep.report()) == {"mean", "variance", "decomposition", "cross_check"}


def test_decomposition_detector_term_grows_with_width():
    s = make_gaussian_state(1.0, 0.05)
    cov = variance_decomposition(s, DetectorModel("covariant"), 50.0, direct=False)
    assert cov.decomposition["term_detector"] > 0


def test_decomposition_mass_check():
    with pytest.raises(DomainError):
        variance_decomposition(make_gaussian_state(1.0, 0.05), DetectorModel("maximal"), 10.0, mass=2.0)


def test_moment_generating_function():
    s = make_gaussian_state(1.0, 0.05)
    det = DetectorModel("maximal")
    dist = arrival_density(s, det, 50.0)
    z = moment_generating(s, det, 50.0, [0.0], dist)
    assert z[0] == pytest.approx(1.0, abs=1e-12)
    mean, var = cumulants_from_mgf(s, det, 50.0, dist)
    assert mean == pytest.approx(dist.mean, rel=1e-7)
    assert var == pytest.approx(dist.variance, rel=1e-4)
    assert np.all(np.abs(moment_generating(s, det, 50.0, [0.1, 1.0], dist)) <= 1 + 1e-12)

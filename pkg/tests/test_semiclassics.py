import math

import numpy as np
import pytest

from cylwig import cylmeasure as cm
from cylwig import genfun as gf
from cylwig import semiclassics as sc
from cylwig import symbols
from cylwig.fockrep import FockOracle, QuadratureSpec
from cylwig.symplectic import LinearMap, PhaseSpace

SP1 = PhaseSpace(1)
GRID = np.array([(a, b) for a in np.linspace(-1, 1, 5) for b in np.linspace(-1, 1, 5)])


def test_schedule_validation():
    with pytest.raises(ValueError):
        sc._check_schedule([0.5, 0.25])
    with pytest.raises(ValueError):
        sc._check_schedule([0.1, 0.2, 0.05])
    assert len(sc.default_schedule()) == 20


def test_richardson_exact_on_quadratics():
    hs = np.array([0.4, 0.2, 0.1])
    assert sc.richardson(hs, 3 - 2 * hs + 5 * hs**2) == pytest.approx(3.0)


def test_vacuum_limit_is_dirac_origin():
    rep = sc.limit_char(gf.Vacuum(SP1), GRID)
    assert rep.all_converged and rep.fit.kind == "dirac"
    assert np.allclose(rep.fit.measure.components()[0][1], 0, atol=1e-6)
    assert rep.fit_residual < 1e-6 and rep.mass_defect < 1e-10


def test_coherent_limit_point():
    z = 0.3 - 0.4j
    rep = sc.limit_char(gf.Coherent(SP1, [z]), GRID)
    (w, mean, _), = rep.fit.measure.components()
    assert np.allclose(mean, [0.6, -0.8], atol=1e-6) and w == pytest.approx(1.0)


def test_gaussian_limit_fit():
    q = np.array([[0.5, 0.1], [0.1, 0.3]])
    rep = sc.limit_char(gf.QuantumGaussian(SP1, q, [0.2, 0.0], np.eye(2)), GRID)
    assert rep.fit.kind == "gauss" and rep.fit_residual < 1e-6
    (_, mean, cov), = rep.fit.measure.components()
    assert np.allclose(cov, q, atol=1e-6) and np.allclose(mean, [0.2, 0.0], atol=1e-6)


def test_mass_check_pass_and_scale_fail():
    assert sc.mass_check(gf.Coherent(SP1, [0.2j]), cm.Dirac(SP1, [0.0, 0.4])).passed
    r = sc.mass_check(gf.Scale(0.6, gf.Vacuum(SP1)), cm.Dirac(SP1, [0.0, 0.0]))
    assert not r.passed and r.defect == pytest.approx(0.4, abs=1e-10)


def test_translated_vacuum_recovers_mass():
    r = sc.mass_check(gf.translate(gf.Vacuum(SP1), [1.0, 1.0]), cm.Dirac(SP1, [0.0, 0.0]))
    assert r.passed


def test_construct_state_round_trip():
    p, q = np.array([0.6, -0.2]), np.array([-0.3, 0.5])
    for m in (cm.Dirac(SP1, [0, 0]), cm.Dirac(SP1, p),
              cm.Mixture((0.5, 0.5), (cm.Dirac(SP1, p), cm.Dirac(SP1, q))),
              cm.Gaussian(SP1, [0, 0], np.diag([0.4, 0.9]))):
        s = sc.construct_state_for_measure(m)
        rep = sc.limit_char(s, GRID, candidate=m)
        assert rep.fit_residual <= 1e-6 and rep.mass_defect <= 1e-10
        assert np.allclose(rep.limit_values, m.char(GRID), atol=1e-8)


def test_constructed_gaussian_is_admissible():
    s = sc.construct_state_for_measure(cm.Gaussian(SP1, [0, 0], np.zeros((2, 2))))
    for h in (0.9, 0.1, 1e-3):
        assert s.admissible(h)


def test_map_commutation():
    c = gf.Coherent(SP1, [0.2 + 0.3j])
    for u in (LinearMap.rotation(SP1, 0.6), LinearMap.scaling(SP1, 0.5)):
        assert sc.map_commutes_with_limit_check(c, u, points=GRID).passed
    phase = gf.PhaseSchedule(gf.Schedule(1.0, 1.0), linear=np.array([1.0, -1.0]))
    assert sc.map_commutes_with_limit_check(c, LinearMap.identity(SP1), phase, points=GRID).passed


def test_nonvanishing_phase_breaks_commutation():
    phase = gf.PhaseSchedule(gf.Schedule.const(1.0), linear=np.array([1.0, 0.0]))
    r = sc.map_commutes_with_limit_check(gf.Vacuum(SP1), LinearMap.identity(SP1), phase, points=GRID)
    assert not r.passed


def test_convolution_commutation():
    a = gf.Coherent(SP1, [0.1 - 0.2j])
    b = gf.QuantumGaussian(SP1, 0.3 * np.eye(2), None, np.eye(2))
    assert sc.convolution_limit_check(a, b, points=GRID).passed


def test_oracle_density_matches_functional(rng):
    o = FockOracle(1, 0.2, 96)
    s = gf.Mixture((0.3, 0.7), (gf.Vacuum(SP1), gf.Coherent(SP1, [0.2 - 0.1j])))
    rho = sc.oracle_density(s, o)
    for x in rng.uniform(-1, 1, (5, 2)):
        assert o.expect_weyl(rho, x) == pytest.approx(s.eval(0.2, x), abs=1e-12)


def test_pconv_small():
    s = gf.Coherent(SP1, [0.25 + 0.15j])
    m = s.limit_measure()
    f = symbols.gaussian_bump(np.eye(2), [0.5, 0.3])
    r = sc.pconv_check(s, m, f, [0.2, 0.1], N=96, quad=QuadratureSpec(1.6, 32))
    assert r.monotone
    assert np.allclose(r.relative_gaps, [h / (1 + h) for h in (0.2, 0.1)], rtol=1e-6)


def test_entanglement_unperturbed_factorizes():
    a, b = gf.Vacuum(SP1), gf.Coherent(SP1, [0.2 - 0.1j])
    pts = 0.5 * np.array([(0, 0), (1, 0), (0, 1)])
    r = sc.entanglement_destruction_demo(a, b, None, [0.5, 0.25, 0.125], pts, pts)
    assert r.limit_factorizes and np.all(r.residuals < 1e-12)


def test_invariance_statuses():
    rots = [LinearMap.rotation(SP1, t) for t in (0.3, 1.7)]
    assert sc.invariant_limit_check(gf.Vacuum(SP1), rots, GRID).status == "pass"
    assert sc.invariant_limit_check(gf.Coherent(SP1, [0.5]), rots, GRID).status == "not applicable"


def test_kms_gaussian():
    beta, omega = 2.0, 1.0
    m = cm.Gaussian(SP1, [0, 0], np.eye(2) / (2 * beta * omega))
    ham = symbols.harmonic(omega)
    q = symbols.polynomial([[0, 0], [1, 0]])
    p = symbols.polynomial([[0, 1]])
    assert sc.classical_kms_check(m, ham, q, p, beta).residual <= 1e-8
    assert sc.classical_kms_check(m, ham, q, p, 3.0).residual >= 1e-2


def test_ground_state_vacuum():
    r = sc.ground_state_check(gf.Vacuum(SP1), symbols.harmonic(1.0), infimum=0.0)
    assert r.passed and r.dirac_at_minimizer


def test_cutoff_diagnostic_rows():
    """Mass seen by a wide cutoff approaches 1 for the vacuum."""
    t = sc.cutoff_mass_diagnostic(gf.Vacuum(SP1), [0.1], [2.0], N=48, reach=4.0)
    assert t.shape == (1, 3)
    assert t[0, 2] == pytest.approx(1.0, abs=1e-4)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catalogs import state_catalog
from cylwig import genfun as gf
from cylwig.fockrep import Density, FockOracle
from cylwig.symplectic import LinearMap, PhaseSpace

SP1 = PhaseSpace(1)
SP2 = PhaseSpace(2)


def test_vacuum_value():
    assert gf.Vacuum(SP1).eval(0.5, [1.0, 1.0]) == pytest.approx(math.exp(-0.5))


def test_eval_rejects_bad_h():
    for h in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            gf.Vacuum(SP1).eval(h, [0, 0])


def test_eval_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        gf.Vacuum(SP1).eval(0.5, [1.0, 0.0, 0.0])


def test_gibbs_closed_form_value():
    s = gf.GibbsPaper(SP1, [1.0], gf.Schedule.const(1.0), gf.Schedule.const(0.0))
    expected = math.exp(-0.5 * math.exp(-1) / (1 - math.exp(-1)))
    assert s.eval(1.0, [1.0, 0.0]).real == pytest.approx(expected, rel=1e-14)


def test_gibbs_closed_form_positivity_threshold():
    """The closed form is a state only while every nbar >= 1."""
    pts = np.array([[0, 0], [1.5, 0], [0, 1.5], [1.5, 1.5], [-1.0, 0.8]])
    for t, expect in ((0.5, True), (math.log(2), True), (1.0, False), (3.0, False)):
        s = gf.GibbsPaper(SP1, [1.0], gf.Schedule(t / 0.5, 1.0))
        assert s.admissible(0.5) is expect
        assert gf.twisted_pd_check(s, 0.5, pts).passed is expect


def test_gibbs_rejects_nonpositive_exponent():
    s = gf.GibbsPaper(SP1, [1.0], gf.Schedule.const(1.0), gf.Schedule.const(1.0))
    with pytest.raises(ValueError, match="beta_h"):
        s.eval(0.5, [0.0, 0.0])


@pytest.mark.parametrize("space", [SP1, SP2])
def test_mass_real_nonnegative(space):
    for s in state_catalog(space):
        for h in (0.9, 0.1, 1e-3):
            v = s.eval(h, np.zeros(space.dim))
            assert abs(v.imag) < 1e-15 and v.real >= 0


@pytest.mark.parametrize("space", [SP1, SP2])
def test_hermiticity_without_phases(space, rng):
    x = rng.normal(size=(16, space.dim))
    for s in state_catalog(space):
        if s.has_phase:
            continue
        assert np.allclose(s.eval(0.3, -x), np.conj(s.eval(0.3, x)), atol=1e-14)


def test_translate_output_is_not_hermitian():
    s = gf.translate(gf.Coherent(SP1, [0.2 + 0.1j]), [0.5, -0.2])
    x = np.array([0.3, 0.7])
    assert abs(s.eval(0.3, -x) - np.conj(s.eval(0.3, x))) > 1e-3


def test_translate_limit_is_shifted_functional(rng):
    x = rng.normal(size=(8, 2))
    xi = np.array([0.4, -0.1])
    c = gf.Coherent(SP1, [0.2 + 0.1j])
    lim = gf.translate(c, xi).limit_measure()
    assert np.allclose(lim.char(x), c.limit_measure().char(x + xi))


def test_translate_costs_mass_at_finite_h():
    xi = np.array([1.0, -2.0])
    s = gf.translate(gf.Vacuum(SP1), xi)
    assert s.eval(0.2, [0, 0]) == pytest.approx(math.exp(-0.1 * 5.0))
    assert np.allclose(gf.translate(gf.Vacuum(SP1), [0, 0]).eval(0.2, [[0.3, 0.4]]),
                       gf.Vacuum(SP1).eval(0.2, [[0.3, 0.4]]))


def test_translate_matches_left_weyl_action():
    """omega(W(xi) W(x)) computed on the oracle equals the Translate rule."""
    h, N = 0.2, 96
    o = FockOracle(1, h, N)
    z = 0.2 - 0.1j
    rho = o.state_density({"kind": "coherent", "z": [z]})
    xi, x = np.array([0.4, -0.3]), np.array([-0.2, 0.5])
    direct = o.expect(rho, o.weyl_matrix(xi) @ o.weyl_matrix(x))
    assert gf.translate(gf.Coherent(SP1, [z]), xi).eval(h, x) == pytest.approx(direct, abs=1e-12)


def test_convolution_rules(rng):
    x = rng.normal(size=(10, 2))
    vv = gf.quantum_convolution(gf.Vacuum(SP1), gf.Vacuum(SP1))
    assert np.allclose(vv.eval(0.3, x), np.exp(-0.3 * SP1.norm2(x)))
    z, w = 0.2 + 0.1j, -0.4 + 0.3j
    cc = gf.quantum_convolution(gf.Coherent(SP1, [z]), gf.Coherent(SP1, [w]))
    phase = cc.eval(0.3, x) / np.exp(-0.3 * SP1.norm2(x))
    assert np.allclose(phase, np.exp(1j * x @ gf.coherent_functional(SP1, [z + w])))
    a, b = gf.Scale(0.5, gf.Vacuum(SP1)), gf.Scale(0.4, gf.Vacuum(SP1))
    assert gf.quantum_convolution(a, b).mass(0.2) == pytest.approx(a.mass(0.2) * b.mass(0.2))


def test_convolution_rejects_space_mismatch():
    with pytest.raises(ValueError):
        gf.quantum_convolution(gf.Vacuum(SP1), gf.Vacuum(SP2))


def test_pullback_rules(rng):
    x = rng.normal(size=(10, 2))
    c = gf.Coherent(SP1, [0.3 + 0.2j])
    same = gf.pull_symplectic(c, LinearMap.identity(SP1))
    assert np.allclose(same.eval(0.4, x), c.eval(0.4, x))
    rot = gf.pull_symplectic(gf.Vacuum(SP1), LinearMap.rotation(SP1, 1.1))
    assert np.allclose(rot.eval(0.4, x), gf.Vacuum(SP1).eval(0.4, x))


def test_pullback_inclusion_restricts_tensor(rng):
    w = 0.1 - 0.4j
    t = gf.tensor(gf.Vacuum(SP1), gf.Coherent(SP1, [w]))
    inc = LinearMap.inclusion(SP1, SP2, 0)
    x = rng.normal(size=(12, 2))
    assert np.allclose(gf.pull_symplectic(t, inc).eval(0.3, x), gf.Vacuum(SP1).eval(0.3, x))


def test_tensor_of_vacua_is_vacuum(rng):
    x = rng.normal(size=(12, 4))
    t = gf.tensor(gf.Vacuum(SP1), gf.Vacuum(SP1))
    assert np.allclose(t.eval(0.3, x), gf.Vacuum(SP2).eval(0.3, x))
    s = gf.tensor(gf.Coherent(SP1, [0.2]), gf.Scale(0.5, gf.Vacuum(SP1)))
    y = np.concatenate([x[:, :2], np.zeros((12, 2))], axis=1)
    assert np.allclose(s.eval(0.3, y), gf.Coherent(SP1, [0.2]).eval(0.3, x[:, :2]) * 0.5)


@given(st.floats(0.01, 1.0), st.integers(0, 2**32 - 1))
def test_tensor_exchange_identity_exact(h, seed):
    r = np.random.default_rng(seed)
    t = gf.tensor(gf.Coherent(SP1, [0.3 - 0.1j]), gf.QuantumGaussian(SP1, np.eye(2), None, np.eye(2)))
    assert gf.exchange_residual(t, h, r.normal(size=(3, 2)), r.normal(size=(3, 2)), 1) < 1e-14


# -- twisted positivity --------------------------------------------------------------


def test_twisted_single_origin():
    r = gf.twisted_pd_check(gf.Vacuum(SP1), 0.5, [[0.0, 0.0]])
    assert r.passed and r.min_eigenvalue == pytest.approx(1.0)


def test_twisted_vacuum_three_points():
    r = gf.twisted_pd_check(gf.Vacuum(SP1), 0.3, [[0, 0], [1, 0], [0, 1]])
    assert r.passed and r.min_eigenvalue >= -1e-10


def test_anti_vacuum_fails():
    r = gf.twisted_pd_check(gf.anti_vacuum(SP1), 0.3, [[0, 0], [1, 0], [0, 1]])
    assert not r.passed


def test_twist_sign_reproduces_operator_positivity(rng):
    """c* B c equals Tr(rho A* A) for A = sum c_j W(x_j) only with the derived sign."""
    h, N = 0.25, 80
    o = FockOracle(1, h, N)
    v = np.zeros((N, 3), dtype=complex)
    v[:24] = rng.normal(size=(24, 3)) + 1j * rng.normal(size=(24, 3))
    rho = Density(np.array([0.5, 0.3, 0.2]), v / np.linalg.norm(v, axis=0), N)
    state = gf.OracleState(SP1, lambda _: (o, rho))
    pts = rng.uniform(-0.8, 0.8, (6, 2))
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    a = sum(cj * o.weyl_matrix(x) for cj, x in zip(c, pts))
    exact = o.expect(rho, a.conj().T @ a)
    assert c.conj() @ gf.twisted_gram(state, h, pts) @ c == pytest.approx(exact, abs=1e-11)
    assert abs(c.conj() @ gf.twisted_gram(state, h, pts, sign=+1) @ c - exact) > 1e-4


@pytest.mark.parametrize("space", [SP1, SP2])
def test_twist_sign_never_changes_verdict(space, rng):
    for s in state_catalog(space) + [gf.anti_vacuum(space)]:
        for _ in range(5):
            pts = rng.uniform(-1.5, 1.5, (rng.integers(2, 8), space.dim))
            a = gf.twisted_pd_check(s, 0.4, pts, sign=-1).passed
            b = gf.twisted_pd_check(s, 0.4, pts, sign=+1).passed
            assert a == b


@pytest.mark.parametrize("space", [SP1, SP2])
def test_catalog_twisted_positive(space, rng):
    for s in state_catalog(space):
        for h in (0.8, 0.2, 0.01):
            pts = rng.uniform(-2, 2, (8, space.dim))
            assert gf.twisted_pd_check(s, h, pts).passed, (s, h)


def test_gaussian_admissibility_boundary(rng):
    h = 0.4
    good = gf.QuantumGaussian(SP1, h * np.eye(2))
    bad = gf.QuantumGaussian(SP1, 0.5 * h * np.eye(2))
    assert good.admissible(h) and not bad.admissible(h)
    pts = np.array([[0, 0], [1.2, 0], [0, 1.2], [1.2, 1.2], [-1.0, 0.6]])
    assert gf.twisted_pd_check(good, h, pts).passed
    assert not gf.twisted_pd_check(bad, h, pts).passed


@given(st.floats(0.05, 1.0), st.floats(0.0, 2.0), st.floats(-0.9, 0.9), st.integers(0, 2**32 - 1))
def test_admissible_gaussians_pass(h, extra, corr, seed):
    r = np.random.default_rng(seed)
    q = extra * np.array([[1.0, corr], [corr, 1.0]])
    s = gf.QuantumGaussian(SP1, q, r.normal(size=2), np.eye(2))
    assert s.admissible(h)
    assert gf.twisted_pd_check(s, h, r.uniform(-2, 2, (6, 2))).passed


def test_schedules():
    s = gf.Schedule.beta_thermo(2.0, 3)
    assert s(0.001) == pytest.approx(2.0 * 0.001 ** (2 / 3))
    assert s.limit == 0.0
    assert gf.Schedule.const(3.0).limit == 3.0
    assert math.isinf(gf.Schedule(1.0, -1.0).limit)


def test_limit_measures_match_small_h(rng):
    x = rng.uniform(-1, 1, (10, 2))
    for s in state_catalog(SP1):
        m = s.limit_measure()
        assert np.allclose(s.eval(1e-9, x), m.char(x), atol=1e-7), s


def test_gibbs_limit_variance():
    """beta_h = beta h gives h nbar -> 1 / (beta (k - mu)) per mode."""
    beta, omega = 2.0, 1.5
    s = gf.GibbsPaper(SP1, [omega], gf.Schedule(beta, 1.0))
    x = np.array([[0.7, -0.4]])
    expected = np.exp(-SP1.norm2(x) / (2 * beta * omega))
    assert np.allclose(s.limit_measure().char(x), expected)

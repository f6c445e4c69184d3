import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catalogs import measure_catalog
from cylwig import cylmeasure as cm
from cylwig import symbols
from cylwig.symplectic import LinearMap, PhaseSpace, direct_sum

SP1 = PhaseSpace(1)
SP2 = PhaseSpace(2)


def test_dirac_and_gaussian_values():
    x = np.array([0.3, -0.2])
    assert cm.Dirac(SP1, [1.0, 2.0]).char(x) == pytest.approx(np.exp(1j * (0.3 - 0.4)))
    g = cm.Gaussian(SP1, [0, 0], np.diag([2.0, 1.0]))
    assert g.char(x) == pytest.approx(math.exp(-0.5 * (2 * 0.09 + 0.04)))


def test_gaussian_validation():
    with pytest.raises(ValueError):
        cm.Gaussian(SP1, [0, 0], np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        cm.Gaussian(SP1, [0, 0], -np.eye(2))


def test_mixture_validation():
    with pytest.raises(ValueError):
        cm.Mixture((-0.1,), (cm.Dirac(SP1, [0, 0]),))
    with pytest.raises(ValueError):
        cm.Mixture((0.5, 0.5), (cm.Dirac(SP1, [0, 0]), cm.Dirac(SP2, np.zeros(4))))


@pytest.mark.parametrize("space", [SP1, SP2])
def test_normal_form_matches_tree(space, rng):
    x = rng.normal(size=(12, space.dim))
    for m in measure_catalog(space):
        comps = m.components()
        normal = sum(w * cm.Gaussian(space, mu, q).char(x) for w, mu, q in comps)
        assert np.allclose(normal, m.char(x), atol=1e-13)


def test_convolution_laws(rng):
    x = rng.normal(size=(10, 2))
    a, b, c = measure_catalog(SP1)[1:4]
    assert np.allclose(cm.convolution(a, b).char(x), cm.convolution(b, a).char(x))
    lhs = cm.convolution(cm.convolution(a, b), c).char(x)
    rhs = cm.convolution(a, cm.convolution(b, c)).char(x)
    assert np.allclose(lhs, rhs)
    d0 = cm.Dirac(SP1, [0, 0])
    assert np.allclose(cm.convolution(c, d0).char(x), c.char(x))


def test_dirac_convolution_adds_points():
    p, q = np.array([0.1, 0.2]), np.array([-0.4, 0.5])
    m = cm.convolution(cm.Dirac(SP1, p), cm.Dirac(SP1, q))
    (w, mean, cov), = m.components()
    assert w == 1.0 and np.allclose(mean, p + q) and not np.any(cov)


def test_pushforward_composition(rng):
    x = rng.normal(size=(10, 2))
    u, v = LinearMap.rotation(SP1, 0.4), LinearMap.scaling(SP1, 1.7)
    m = measure_catalog(SP1)[2]
    lhs = cm.pushforward(cm.pushforward(m, u), v).char(x)
    rhs = cm.pushforward(m, u @ v).char(x)
    assert np.allclose(lhs, rhs)
    assert np.allclose(cm.pushforward(m, LinearMap.identity(SP1)).char(x), m.char(x))


def test_product_on_direct_sum(rng):
    a, b = measure_catalog(SP1)[1], measure_catalog(SP1)[2]
    prod = cm.product(a, b)
    assert prod.space == direct_sum(SP1, SP1)
    x, y = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    assert np.allclose(prod.char(np.concatenate([x, y], axis=1)), a.char(x) * b.char(y))


def test_modulate_shift():
    m = cm.modulate(cm.Dirac(SP1, [1.0, 0.0]), [0.5, 0.0])
    assert m.is_signed
    assert m.char([0.0, 0.0]) == pytest.approx(np.exp(0.5j))
    with pytest.raises(cm.NotAnalyticError):
        cm.marginal(m, [[1.0, 0.0]])


@pytest.mark.parametrize("space", [SP1, SP2])
def test_bochner_measure_catalog(space, rng):
    for m in measure_catalog(space):
        for _ in range(5):
            pts = rng.uniform(-2, 2, (rng.integers(1, 9), space.dim))
            assert cm.bochner_pd_check(m, pts).passed


def test_bochner_anti_gaussian_fails():
    pts = [[0, 0], [1, 0], [0, 1]]
    assert not cm.bochner_pd_check(cm.anti_gaussian(SP1), pts).passed


def test_bochner_requires_points():
    with pytest.raises(ValueError):
        cm.bochner_pd_check(measure_catalog(SP1)[0], [])


def test_marginal_fourier_matches_char(rng):
    base = np.array([[1.0, 0.0, 0.0, 0.0], [0.3, 0.0, 1.0, -0.2]])
    for m in measure_catalog(SP2):
        marg = cm.marginal(m, base)
        t = rng.normal(size=(6, 2))
        assert np.allclose(marg.fourier(t), m.char(t @ base))


def test_projective_consistency(rng):
    """The marginal on a sub-base equals the projected marginal on a larger base."""
    big = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.5, 0.0], [0.0, 0.0, 0.0, 1.0]])
    small = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).T @ big
    proj = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    for m in measure_catalog(SP2):
        mb, ms = cm.marginal(m, big), cm.marginal(m, small)
        t = rng.normal(size=(5, 2))
        assert np.allclose(mb.fourier(t @ proj), ms.fourier(t))


def test_marginal_rejects_dependent_base():
    with pytest.raises(ValueError):
        cm.marginal(measure_catalog(SP1)[2], [[1.0, 0.0], [2.0, 0.0]])


def test_integrate_gaussian_bump():
    g = cm.Gaussian(SP1, [0.2, -0.1], np.diag([0.5, 0.8]))
    f = symbols.gaussian_bump([[1.0, 0.0]], [0.0])
    r = cm.integrate_cyl(g, f)
    s2 = 1 + 0.5
    assert r.value == pytest.approx(math.sqrt(1 / s2) * math.exp(-0.04 / (2 * s2)), abs=1e-10)


def test_integrate_atomic_is_exact():
    m = cm.Mixture((0.25, 0.75), (cm.Dirac(SP1, [1.0, 0.0]), cm.Dirac(SP1, [-1.0, 2.0])))
    f = symbols.CylFunction([[1.0, 0.0], [0.0, 1.0]], lambda y: y[..., 0] ** 2 + y[..., 1])
    assert cm.integrate_cyl(m, f).value == pytest.approx(0.25 * 1 + 0.75 * 3)


def test_integrate_plane_wave_equals_char():
    m = measure_catalog(SP1)[3]
    x = np.array([0.4, 0.7])
    assert cm.integrate_cyl(m, symbols.plane_wave(x)).value == pytest.approx(m.char(x), abs=1e-10)


def test_integrate_raises_on_nonconvergence():
    g = cm.Gaussian(SP1, [0, 0], np.eye(2))
    f = symbols.CylFunction([[1.0, 0.0]], lambda y: (y[..., 0] > 0.3).astype(float))
    with pytest.raises(cm.QuadratureError):
        cm.integrate_marginal(cm.marginal(g, f.base_vectors), f.function, rtol=1e-14, max_nodes=64)


def test_invariance():
    rot = LinearMap.rotation(SP1, 0.8)
    pts = np.random.default_rng(1).normal(size=(8, 2))
    assert cm.invariance_check(cm.Gaussian(SP1, [0, 0], np.eye(2)), rot, pts)
    assert not cm.invariance_check(cm.Dirac(SP1, [1.0, 0.0]), rot, pts)


def test_ap_functional_bound():
    m = measure_catalog(SP1)[3]
    combo = [(1.0, [1.0, 0.0]), (-0.5j, [0.0, 2.0]), (0.3, [0.0, 0.0])]
    r = cm.ap_functional(m, combo)
    assert r.passed
    assert r.sup_norm == pytest.approx(1.0 + 0.5 + 0.3, rel=1e-6)


@given(st.floats(0.0, 3.0), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**32 - 1))
def test_gaussian_mixture_positive_definite(w, a, b, seed):
    r = np.random.default_rng(seed)
    m = cm.Mixture((w, 1.0), (cm.Dirac(SP1, [a, b]), cm.Gaussian(SP1, [b, a], np.eye(2) * 0.3)))
    assert cm.bochner_pd_check(m, r.uniform(-3, 3, (6, 2))).passed

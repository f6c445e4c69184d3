import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cylwig.symplectic import (LinearMap, PhaseSpace, direct_sum, form, is_symplectic, join,
                               make_standard, split)

finite = st.floats(-10, 10, allow_nan=False)


def vec(d):
    return arrays(np.float64, 2 * d, elements=finite)


def test_make_standard_rejects_zero():
    with pytest.raises(ValueError):
        make_standard(0)


def test_standard_basis_convention():
    sp = make_standard(1)
    assert form(sp, [1, 0], [0, 1]) == 1.0
    assert sp.norm2(np.array([1.0, 0.0])) == 1.0


def test_modes_do_not_pair():
    sp = make_standard(2)
    assert form(sp, [1, 1, 0, 0], [0, 0, 1, 1]) == 0.0


def test_form_matrix_is_nondegenerate():
    for d in (1, 2, 3):
        assert abs(np.linalg.det(PhaseSpace(d).form_matrix)) == pytest.approx(1.0)


@given(vec(2), vec(2))
def test_form_is_imaginary_part_of_complex_pairing(x, y):
    sp = PhaseSpace(2)
    z, w = sp.to_complex(x), sp.to_complex(y)
    assert sp.form(x, y) == pytest.approx(np.imag(np.vdot(z, w)), abs=1e-9)
    assert sp.form(x, y) == pytest.approx(-sp.form(y, x), abs=1e-12)
    assert sp.form(x, x) == 0.0


@given(vec(2))
def test_norm_positive(x):
    sp = PhaseSpace(2)
    if np.any(np.abs(x) > 1e-150):  # squares below this underflow to zero
        assert sp.norm2(x) > 0


def test_form_rejects_wrong_length():
    with pytest.raises(ValueError):
        form(PhaseSpace(1), [1, 0, 0], [0, 1])


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_rotations_are_symplectic_and_compose(a, b):
    sp = PhaseSpace(1)
    ra, rb = LinearMap.rotation(sp, a), LinearMap.rotation(sp, b)
    assert is_symplectic(ra) and is_symplectic(ra @ rb)
    assert np.allclose((ra @ rb).matrix, LinearMap.rotation(sp, a + b).matrix)


def test_identity_and_scaling():
    sp = PhaseSpace(1)
    assert is_symplectic(LinearMap.identity(sp))
    assert not is_symplectic(LinearMap.scaling(sp, 2.0))


def test_composition_associative(rng):
    sp = PhaseSpace(1)
    maps = [LinearMap(sp, sp, rng.normal(size=(2, 2))) for _ in range(3)]
    a, b, c = maps
    assert np.allclose(((a @ b) @ c).matrix, (a @ (b @ c)).matrix)
    assert np.allclose((LinearMap.identity(sp) @ a).matrix, a.matrix)


def test_from_complex_matches_complex_multiplication(rng):
    sp = PhaseSpace(2)
    u = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = LinearMap.from_complex(sp, sp, u)
    x = rng.normal(size=4)
    assert np.allclose(sp.to_complex(m(x)), u @ sp.to_complex(x))


def test_unitary_is_symplectic(rng):
    sp = PhaseSpace(2)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    assert is_symplectic(LinearMap.from_complex(sp, sp, q))


def test_direct_sum_blocks(rng):
    a, b = PhaseSpace(1), PhaseSpace(1)
    s = direct_sum(a, b)
    assert s.modes == 2
    x, y = rng.normal(size=2), rng.normal(size=2)
    assert s.form(join(a, b, x, np.zeros(2)), join(a, b, np.zeros(2), y)) == 0.0
    assert s.form(join(a, b, x, np.zeros(2)), join(a, b, y, np.zeros(2))) == pytest.approx(a.form(x, y))
    xs, ys = split(a, b, join(a, b, x, y))
    assert np.array_equal(xs, x) and np.array_equal(ys, y)


def test_zero_mode_space_is_unit():
    a, z = PhaseSpace(1), PhaseSpace(0)
    assert direct_sum(a, z) == a
    assert z.dim == 0 and z.form(np.zeros(0), np.zeros(0)) == 0.0


def test_direct_sum_associative_forms(rng):
    a, b, c = PhaseSpace(1), PhaseSpace(2), PhaseSpace(1)
    left = direct_sum(direct_sum(a, b), c)
    right = direct_sum(a, direct_sum(b, c))
    assert np.array_equal(left.form_matrix, right.form_matrix)


def test_inclusion_is_symplectic():
    inc = LinearMap.inclusion(PhaseSpace(1), PhaseSpace(2), 1)
    assert is_symplectic(inc)
    assert np.array_equal(inc(np.array([1.0, 2.0])), [0, 0, 1, 2])

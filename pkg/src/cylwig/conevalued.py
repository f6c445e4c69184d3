"""Cylindrical measures valued in the cone of k x k positive semidefinite matrices.

A matrix measure is a finite sum of scalar measures times PSD weights. Complete
positivity is certified as positivity of the block Gram matrix. Jordan
decomposition is provided for scalar signed measures on finitely many atoms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import cylmeasure as cm
from .psd import DEFAULT_TOL, PsdReport, certify_psd
from .symbols import CylFunction


def _psd_min(p: np.ndarray) -> float:
    herm = 0.5 * (p + p.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


@dataclass(frozen=True)
class MatrixCylMeasure:
    """x -> sum_i char(mu_i, x) P_i.

    ``strict=False`` admits non-PSD weights; used to build negative controls.
    """

    terms: tuple
    strict: bool = True

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a matrix measure needs at least one term")
        terms = []
        k = None
        for mu, p in self.terms:
            p = np.atleast_2d(np.asarray(p, dtype=complex))
            if p.shape[0] != p.shape[1]:
                raise ValueError("weights must be square")
            if k is None:
                k = p.shape[0]
            if p.shape[0] != k:
                raise ValueError("all weights must have the same size")
            if not np.allclose(p, p.conj().T, atol=1e-12):
                raise ValueError("weights must be Hermitian")
            if self.strict and _psd_min(p) < -1e-12 * max(1.0, np.abs(p).max()):
                raise ValueError("weights must be positive semidefinite")
            terms.append((mu, p))
        if len({mu.space for mu, _ in terms}) != 1:
            raise ValueError("scalar parts live on different spaces")
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def k(self) -> int:
        return self.terms[0][1].shape[0]

    @property
    def space(self):
        return self.terms[0][0].space

    def char(self, x) -> np.ndarray:
        """Matrix characteristic functional; extra leading axes of x are kept."""
        x = self.space.check(x)
        out = np.zeros(x.shape[:-1] + (self.k, self.k), dtype=complex)
        for mu, p in self.terms:
            out = out + np.asarray(mu.char(x))[..., None, None] * p
        return out

    @property
    def mass(self) -> np.ndarray:
        return self.char(np.zeros(self.space.dim))


def matrix_char(m: MatrixCylMeasure, x) -> np.ndarray:
    return m.char(x)


def block_gram(m: MatrixCylMeasure, points) -> np.ndarray:
    """nk x nk matrix whose (i, j) block is char(x_i - x_j)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, k = len(pts), m.k
    blocks = m.char(pts[:, None, :] - pts[None, :, :])
    return blocks.transpose(0, 2, 1, 3).reshape(n * k, n * k)


def cp_check(m: MatrixCylMeasure, points, tol: float = DEFAULT_TOL) -> PsdReport:
    if len(points) == 0:
        raise ValueError("at least one point is required")
    return certify_psd(block_gram(m, points), tol)


def cp_sum_form(m: MatrixCylMeasure, points, vectors) -> complex:
    """sum_{i,j} v_i^* char(x_i - x_j) v_j for a tuple of k-vectors v_i."""
    g = block_gram(m, points)
    v = np.concatenate([np.asarray(vi, dtype=complex) for vi in vectors])
    return complex(v.conj() @ g @ v)


def integrate_matrix(m: MatrixCylMeasure, f: CylFunction, rtol: float = 1e-9) -> np.ndarray:
    out = np.zeros((m.k, m.k), dtype=complex)
    for mu, p in m.terms:
        out = out + cm.integrate_cyl(mu, f, rtol).value * p
    return out


def _atoms(mu: cm.CylMeasure) -> list[tuple[float, np.ndarray]]:
    comps = mu.components()
    if any(np.any(q) for _, _, q in comps):
        raise ValueError("kernel check needs atomic scalar parts")
    return [(w, p) for w, p, _ in comps]


def kernel_block(m: MatrixCylMeasure, functions: Sequence[Callable[[np.ndarray], complex]]) -> np.ndarray:
    """Block (i, j) = sum over atoms a of f_i(a) conj(f_j(a)) mu(a) P."""
    n, k = len(functions), m.k
    out = np.zeros((n * k, n * k), dtype=complex)
    for mu, p in m.terms:
        for w, a in _atoms(mu):
            vals = np.array([complex(f(a)) for f in functions])
            out += np.kron(np.outer(vals, vals.conj()) * w, p)
    return out


def kernel_cp_check(m: MatrixCylMeasure, functions, tol: float = DEFAULT_TOL) -> PsdReport:
    return certify_psd(kernel_block(m, functions), tol)


# -- scalar Jordan decomposition --------------------------------------------------


@dataclass(frozen=True)
class SignedAtomMeasure:
    atoms: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.atoms),):
            raise ValueError("one value per atom is required")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class JordanParts:
    positive: np.ndarray
    negative: np.ndarray
    variation: np.ndarray


def jordan_scalar(mu: SignedAtomMeasure) -> JordanParts:
    pos = np.maximum(mu.values, 0.0)
    neg = np.maximum(-mu.values, 0.0)
    return JordanParts(pos, neg, pos + neg)


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def total_variation_bruteforce(values: Sequence[float]) -> float:
    """sup over partitions of the atoms of sum |mu(E)|."""
    vals = list(values)
    return max(sum(abs(sum(block)) for block in part) for part in _set_partitions(vals))


def minimality_bruteforce(values: Sequence[int], extra: int = 3) -> bool:
    """Every nonnegative integer pair (nu+, nu-) with nu+ - nu- = values dominates the Jordan parts."""
    parts = jordan_scalar(SignedAtomMeasure(tuple(range(len(values))), np.asarray(values, dtype=float)))
    for shifts in itertools.product(range(-extra, extra + 1), repeat=len(values)):
        nu_pos = parts.positive + np.array(shifts)
        nu_neg = parts.negative + np.array(shifts)
        if np.any(nu_pos < 0) or np.any(nu_neg < 0):
            continue
        if np.any(nu_pos < parts.positive) or np.any(nu_neg < parts.negative):
            return False
    return True


# -- cone-dual family ---------------------------------------------------------------


@dataclass(frozen=True)
class FamilyReport:
    additivity_defect: float
    homogeneity_defect: float
    zero_value: float
    min_value: float
    passed: bool


def family_value(m: MatrixCylMeasure, kappa: np.ndarray, x=None) -> complex:
    """Tr(kappa char(x)); with x = 0 this is the scalar mass seen through kappa."""
    x = np.zeros(m.space.dim) if x is None else x
    return complex(np.trace(np.asarray(kappa) @ m.char(x)))


def family_bijection_check(m: MatrixCylMeasure, kappas: Sequence[np.ndarray],
                           scales: Sequence[float] = (0.5, 2.0, 7.0), tol: float = 1e-12) -> FamilyReport:
    add, hom, lo = 0.0, 0.0, np.inf
    ks = [np.asarray(k, dtype=complex) for k in kappas]
    for a, b in itertools.combinations(ks, 2):
        lhs = family_value(m, a + b)
        rhs = family_value(m, a) + family_value(m, b)
        add = max(add, abs(lhs - rhs) / max(1.0, abs(lhs)))
    for a in ks:
        v = family_value(m, a)
        lo = min(lo, v.real)
        for c in scales:
            hom = max(hom, abs(family_value(m, c * a) - c * v) / max(1.0, abs(c * v)))
    zero = abs(family_value(m, np.zeros((m.k, m.k))))
    passed = add <= tol and hom <= tol and zero == 0.0 and lo >= -tol
    return FamilyReport(add, hom, zero, float(lo), passed)


def random_psd(k: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = k if rank is None else rank
    a = rng.normal(size=(k, r)) + 1j * rng.normal(size=(k, r))
    return a @ a.conj().T


def random_indefinite(k: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with one eigenvalue -1 and the rest in [1, 2]."""
    q, _ = np.linalg.qr(rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)))
    eig = np.concatenate([[-1.0], rng.uniform(1, 2, size=k - 1)])
    return (q * eig) @ q.conj().T

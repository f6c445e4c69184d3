"""Cylindrical measures on X* represented by their characteristic functionals.

A measure is an immutable expression tree whose ``char`` evaluates
M^(x) = int exp(i xi(x)) dM(xi). The analytic catalog (Dirac, Gaussian and
everything built from them by mixture, product, push-forward, convolution and
scaling) normalizes to a finite Gaussian mixture, which gives honest Borel
marginals on every finite set of base vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .psd import DEFAULT_TOL, PsdReport, certify_psd
from .symbols import CylFunction
from .symplectic import LinearMap, PhaseSpace, direct_sum, split


class NotAnalyticError(ValueError):
    """Raised when a tree has no finite Gaussian-mixture normal form."""


class QuadratureError(RuntimeError):
    pass


class CylMeasure:
    space: PhaseSpace

    def char(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def mass(self) -> complex:
        return complex(self.char(np.zeros(self.space.dim)))

    @property
    def is_signed(self) -> bool:
        """True for trees containing a Modulate or injected node."""
        return any(c.is_signed for c in self.children)

    @property
    def children(self) -> tuple["CylMeasure", ...]:
        return ()

    def components(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        """Normal form: list of (weight, mean, covariance) on the 2d coordinates."""
        raise NotAnalyticError(f"{type(self).__name__} has no analytic normal form")


@dataclass(frozen=True)
class Dirac(CylMeasure):
    space: PhaseSpace
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", self.space.check(self.p).copy())

    def char(self, x):
        x = self.space.check(x)
        return np.exp(1j * (x @ self.p))

    def components(self):
        return [(1.0, self.p, np.zeros((self.space.dim, self.space.dim)))]


@dataclass(frozen=True)
class Gaussian(CylMeasure):
    space: PhaseSpace
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = self.space.check(self.mean).copy()
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (self.space.dim, self.space.dim):
            raise ValueError("covariance must be a 2d x 2d matrix")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov)[0] < -1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    def char(self, x):
        x = self.space.check(x)
        quad = np.einsum("...i,ij,...j->...", x, self.cov, x)
        return np.exp(1j * (x @ self.mean) - 0.5 * quad)

    def components(self):
        return [(1.0, self.mean, self.cov)]


@dataclass(frozen=True)
class Mixture(CylMeasure):
    weights: tuple
    items: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.items) or not self.items:
            raise ValueError("mixture needs matching, nonempty weights and children")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative")
        spaces = {c.space for c in self.items}
        if len(spaces) != 1:
            raise ValueError("mixture children live on different spaces")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def space(self):
        return self.items[0].space

    @property
    def children(self):
        return self.items

    def char(self, x):
        return sum(w * c.char(x) for w, c in zip(self.weights, self.items))

    def components(self):
        return [(w * cw, m, q) for w, c in zip(self.weights, self.items) for cw, m, q in c.components()]


@dataclass(frozen=True)
class Product(CylMeasure):
    a: CylMeasure
    b: CylMeasure

    @property
    def space(self):
        return direct_sum(self.a.space, self.b.space)

    @property
    def children(self):
        return (self.a, self.b)

    def char(self, x):
        xa, xb = split(self.a.space, self.b.space, x)
        return self.a.char(xa) * self.b.char(xb)

    def components(self):
        out = []
        da, db = self.a.space.dim, self.b.space.dim
        for wa, ma, qa in self.a.components():
            for wb, mb, qb in self.b.components():
                q = np.zeros((da + db, da + db))
                q[:da, :da] = qa
                q[da:, da:] = qb
                out.append((wa * wb, np.concatenate([ma, mb]), q))
        return out


@dataclass(frozen=True)
class Pushforward(CylMeasure):
    """Image of ``child`` under the transpose of u: char_new(y) = char_child(u y)."""

    u: LinearMap
    child: CylMeasure

    def __post_init__(self):
        if self.u.target != self.child.space:
            raise ValueError("push-forward map must land in the child's space")

    @property
    def space(self):
        return self.u.source

    @property
    def children(self):
        return (self.child,)

    def char(self, x):
        return self.child.char(self.u(x))

    def components(self):
        m = self.u.matrix
        return [(w, m.T @ p, m.T @ q @ m) for w, p, q in self.child.components()]


@dataclass(frozen=True)
class Convolution(CylMeasure):
    a: CylMeasure
    b: CylMeasure

    def __post_init__(self):
        if self.a.space != self.b.space:
            raise ValueError("convolution needs measures on the same space")

    @property
    def space(self):
        return self.a.space

    @property
    def children(self):
        return (self.a, self.b)

    def char(self, x):
        return self.a.char(x) * self.b.char(x)

    def components(self):
        return [
            (wa * wb, ma + mb, qa + qb)
            for wa, ma, qa in self.a.components()
            for wb, mb, qb in self.b.components()
        ]


@dataclass(frozen=True)
class Modulate(CylMeasure):
    """exp(i xi(shift)) dM(xi): a complex measure with char x -> M^(x + shift)."""

    shift: np.ndarray
    child: CylMeasure

    def __post_init__(self):
        object.__setattr__(self, "shift", self.child.space.check(self.shift).copy())

    @property
    def space(self):
        return self.child.space

    @property
    def children(self):
        return (self.child,)

    @property
    def is_signed(self):
        return True

    def char(self, x):
        return self.child.char(self.space.check(x) + self.shift)


@dataclass(frozen=True)
class Scale(CylMeasure):
    c: float
    child: CylMeasure

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("scale factor must be nonnegative")

    @property
    def space(self):
        return self.child.space

    @property
    def children(self):
        return (self.child,)

    def char(self, x):
        return self.c * self.child.char(x)

    def components(self):
        return [(self.c * w, m, q) for w, m, q in self.child.components()]


@dataclass(frozen=True)
class Injected(CylMeasure):
    """Arbitrary test functional, used for negative tests of the certifiers."""

    space: PhaseSpace
    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "injected"

    @property
    def is_signed(self):
        return True

    def char(self, x):
        return np.asarray(self.fn(self.space.check(x)), dtype=complex)


def char(measure: CylMeasure, x) -> np.ndarray:
    return measure.char(x)


def anti_gaussian(space: PhaseSpace) -> Injected:
    return Injected(space, lambda x: np.exp(0.5 * np.sum(x * x, axis=-1)), "anti-gaussian")


# -- calculus ----------------------------------------------------------------


def pushforward(measure: CylMeasure, u: LinearMap) -> CylMeasure:
    return Pushforward(u, measure)


def product(a: CylMeasure, b: CylMeasure) -> CylMeasure:
    return Product(a, b)


def convolution(a: CylMeasure, b: CylMeasure) -> CylMeasure:
    return Convolution(a, b)


def modulate(measure: CylMeasure, shift) -> CylMeasure:
    return Modulate(np.asarray(shift, dtype=float), measure)


# -- certification ------------------------------------------------------------


def gram_matrix(fn: Callable[[np.ndarray], np.ndarray], points) -> np.ndarray:
    """B[k, j] = fn(x_j - x_k)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts[None, :, :] - pts[:, None, :]
    return np.asarray(fn(diff), dtype=complex)


def bochner_pd_check(measure: CylMeasure, points, tol: float = DEFAULT_TOL) -> PsdReport:
    if len(points) == 0:
        raise ValueError("at least one point is required")
    return certify_psd(gram_matrix(measure.char, points), tol)


# -- marginals and integration -----------------------------------------------


@dataclass(frozen=True)
class Marginal:
    """Finite-dimensional Borel measure on R^k: a weighted list of Gaussians.

    Components with zero covariance are point masses.
    """

    base_vectors: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @property
    def k(self) -> int:
        return self.base_vectors.shape[0]

    @property
    def is_atomic(self) -> bool:
        return bool(np.all(np.abs(self.covs) == 0))

    def fourier(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lin = np.einsum("...i,ci->...c", t, self.means)
        quad = np.einsum("...i,cij,...j->...c", t, self.covs, t)
        return np.sum(self.weights * np.exp(1j * lin - 0.5 * quad), axis=-1)


def marginal(measure: CylMeasure, base_vectors) -> Marginal:
    base = np.atleast_2d(np.asarray(base_vectors, dtype=float))
    if base.shape[1] != measure.space.dim:
        raise ValueError("base vectors have the wrong dimension")
    if base.shape[0] > measure.space.dim or np.linalg.matrix_rank(base) < base.shape[0]:
        raise ValueError("base vectors must be linearly independent")
    if measure.is_signed:
        raise NotAnalyticError("complex or injected measures have no Borel marginals")
    comps = measure.components()
    weights = np.array([w for w, _, _ in comps])
    means = np.array([base @ m for _, m, _ in comps])
    covs = np.array([base @ q @ base.T for _, _, q in comps])
    return Marginal(base, weights, means, covs)


@dataclass(frozen=True)
class IntegrationResult:
    value: complex
    error: float
    nodes_per_axis: int


def _pseudo_sqrt(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def _gauss_hermite(fn, mean, cov, n: int) -> complex:
    u, w = np.polynomial.hermite.hermgauss(n)
    root = _pseudo_sqrt(cov)
    live = np.any(root != 0, axis=0)
    root = root[:, live]
    k = root.shape[1]
    if k == 0:
        return complex(fn(mean[None, :])[0])
    grids = np.meshgrid(*([u] * k), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1) * math.sqrt(2.0)
    wg = np.meshgrid(*([w] * k), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1) / math.pi ** (k / 2)
    y = mean + nodes @ root.T
    return complex(np.sum(weights * fn(y)))


def integrate_marginal(marg: Marginal, fn, rtol: float = 1e-9, max_nodes: int = 1024,
                       max_points: int = 4_000_000) -> IntegrationResult:
    """Integrate fn over the marginal: atoms exactly, Gaussians by Gauss-Hermite doubling."""
    total = 0j
    worst_err = 0.0
    used = 0
    for w, mean, cov in zip(marg.weights, marg.means, marg.covs):
        if w == 0:
            continue
        if not np.any(cov):
            total += w * complex(np.asarray(fn(mean[None, :]))[0])
            continue
        k_live = int(np.sum(np.linalg.eigvalsh(cov) > 0))
        n, prev, err = 16, None, math.inf
        while True:
            est = _gauss_hermite(fn, mean, cov, n)
            if prev is not None:
                err = abs(est - prev)
                if err <= rtol * max(1.0, abs(est)):
                    break
            nxt = 2 * n
            if nxt > max_nodes or nxt**k_live > max_points:
                raise QuadratureError(
                    f"Gauss-Hermite did not converge: last change {err:.3e} at {n} nodes per axis"
                )
            prev, n = est, nxt
        used = max(used, n)
        worst_err = max(worst_err, abs(w) * err)
        total += w * est
    return IntegrationResult(total, worst_err, used)


def integrate_cyl(measure: CylMeasure, f: CylFunction, rtol: float = 1e-9) -> IntegrationResult:
    return integrate_marginal(marginal(measure, f.base_vectors), f.function, rtol)


# -- invariance and almost-periodic functionals -------------------------------


def invariance_check(measure: CylMeasure, s: LinearMap, points, tol: float = 1e-10) -> bool:
    if s.source != measure.space or s.target != measure.space:
        raise ValueError("invariance needs an endomorphism of the measure's space")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return bool(np.max(np.abs(measure.char(s(pts)) - measure.char(pts))) <= tol)


@dataclass(frozen=True)
class APReport:
    value: complex
    sup_norm: float
    bound: float
    passed: bool


def _sup_norm(coeffs: np.ndarray, vectors: np.ndarray, grid_points: int, seed: int) -> float:
    """Estimate sup_xi |sum_j c_j exp(i xi(x_j))| over the span of the x_j."""
    nonzero = np.linalg.norm(vectors, axis=1) > 0
    const = complex(np.sum(coeffs[~nonzero]))
    vecs, cs = vectors[nonzero], coeffs[nonzero]
    if len(vecs) == 0:
        return abs(const)
    # coordinates of the x_j in an orthonormal basis of their span
    u, s, _ = np.linalg.svd(vecs.T, full_matrices=False)
    basis = u[:, s > 1e-12 * s[0]]
    coords = vecs @ basis
    k = coords.shape[1]

    def mag(v):
        return np.abs(const + np.exp(1j * (v @ coords.T)) @ cs)

    # phases are periodic; search a box that covers one period of the slowest mode
    scale = 2 * np.pi / np.min(np.linalg.norm(coords, axis=1))
    per_axis = max(3, int(round(grid_points ** (1 / k))))
    axes = [np.linspace(-scale, scale, per_axis)] * k
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    rng = np.random.default_rng(seed)
    grid = np.concatenate([grid, rng.uniform(-scale, scale, (grid_points, k))])
    vals = mag(grid)
    best = float(vals.max())
    for start in grid[np.argsort(vals)[-5:]]:
        res = optimize.minimize(lambda v: -mag(v[None, :])[0], start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        best = max(best, float(-res.fun))
    return best


def ap_functional(measure: CylMeasure, combo: Sequence[tuple[complex, Sequence[float]]],
                  grid_points: int = 4096, seed: int = 0) -> APReport:
    """Sum_j c_j M^(x_j), with the bound |value| <= sup|f| * |M^(0)| certified."""
    coeffs = np.array([complex(c) for c, _ in combo])
    vectors = np.atleast_2d(np.array([measure.space.check(v) for _, v in combo]))
    value = complex(np.sum(coeffs * measure.char(vectors)))
    sup = _sup_norm(coeffs, vectors, grid_points, seed)
    bound = sup * abs(measure.mass)
    passed = abs(value) <= bound * (1 + 1e-9) + 1e-14
    return APReport(value, sup, bound, passed)

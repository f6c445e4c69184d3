"""h-parameterized generating functionals x -> omega_h(W_h(x)) of regular states.

A state family is an immutable expression tree. ``eval`` is exact algebra on
the tree; ``limit_measure`` returns the analytic h -> 0 limit as a
cylindrical measure when the tree has one in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cylmeasure as cm
from .conventions import COHERENT_PHASE_FACTOR, TWIST_SIGN
from .psd import DEFAULT_TOL, PsdReport, certify_psd
from .symplectic import LinearMap, PhaseSpace, direct_sum, split


def check_h(h: float) -> float:
    h = float(h)
    if not 0 < h <= 1:
        raise ValueError(f"h must lie in (0, 1], got {h}")
    return h


# -- schedules ---------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """c * h**a * exp(b h), with its h -> 0 limit read off symbolically."""

    c: float
    a: float = 0.0
    b: float = 0.0
    name: str = ""

    def __call__(self, h: float) -> float:
        return self.c * h**self.a * math.exp(self.b * h)

    @property
    def limit(self) -> float:
        """Value at h -> 0; inf (signed) when the schedule blows up."""
        if self.c == 0 or self.a > 0:
            return 0.0
        if self.a == 0:
            return self.c
        return math.copysign(math.inf, self.c)

    @classmethod
    def const(cls, c: float) -> "Schedule":
        return cls(float(c), 0.0, 0.0, "const")

    @classmethod
    def beta_thermo(cls, beta: float, d: int) -> "Schedule":
        """beta * h**((d - 1) / d), the thermodynamic inverse-temperature scaling."""
        return cls(float(beta), (d - 1) / d, 0.0, f"beta_thermo({d})")

    def to_dict(self) -> dict:
        return {"c": self.c, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PhaseSchedule:
    """F_h(y) = s(h) (y^T A y + l.y), a real phase on the pulled-back space."""

    scale: Schedule
    quad: np.ndarray | None = None
    linear: np.ndarray | None = None

    def _shape(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape[:-1])
        if self.quad is not None:
            out = out + np.einsum("...i,ij,...j->...", y, np.asarray(self.quad), y)
        if self.linear is not None:
            out = out + y @ np.asarray(self.linear)
        return out

    def __call__(self, h: float, y) -> np.ndarray:
        return self.scale(h) * self._shape(y)

    def limit(self, y) -> np.ndarray:
        lim = self.scale.limit
        shape = self._shape(y)
        if lim == 0:
            return np.zeros_like(shape)
        return lim * shape

    @property
    def vanishes(self) -> bool:
        return self.scale.limit == 0 or (self.quad is None and self.linear is None)


ZERO_PHASE = PhaseSchedule(Schedule.const(0.0))


# -- state tree ----------------------------------------------------------------


class StateFamily:
    space: PhaseSpace

    def eval(self, h: float, x) -> np.ndarray:
        h = check_h(h)
        return self._eval(h, self.space.check(x))

    def _eval(self, h: float, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def children(self) -> tuple["StateFamily", ...]:
        return ()

    @property
    def has_phase(self) -> bool:
        """True when a Translate/PullBack phase or injected functional sits in the tree."""
        return any(c.has_phase for c in self.children)

    def limit_measure(self) -> cm.CylMeasure:
        raise cm.NotAnalyticError(f"{type(self).__name__} has no closed-form limit")

    def mass(self, h: float) -> float:
        return float(np.real(self.eval(h, np.zeros(self.space.dim))))


def evaluate(s: StateFamily, h: float, x) -> np.ndarray:
    return s.eval(h, x)


def coherent_functional(space: PhaseSpace, z) -> np.ndarray:
    """The real vector p with lambda_z(x) = p.x."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return COHERENT_PHASE_FACTOR * space.from_complex(z)


def coherent_label(space: PhaseSpace, p) -> np.ndarray:
    """Inverse of ``coherent_functional``: the z with lambda_z = p."""
    return space.to_complex(np.asarray(p, dtype=float) / COHERENT_PHASE_FACTOR)


@dataclass(frozen=True)
class Vacuum(StateFamily):
    space: PhaseSpace

    def _eval(self, h, x):
        return np.exp(-0.5 * h * self.space.norm2(x)).astype(complex)

    def limit_measure(self):
        return cm.Dirac(self.space, np.zeros(self.space.dim))


@dataclass(frozen=True)
class Coherent(StateFamily):
    space: PhaseSpace
    z: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if z.shape != (self.space.modes,):
            raise ValueError(f"coherent label needs {self.space.modes} complex entries")
        object.__setattr__(self, "z", z)

    @property
    def functional(self) -> np.ndarray:
        return coherent_functional(self.space, self.z)

    def _eval(self, h, x):
        return np.exp(-0.5 * h * self.space.norm2(x) + 1j * (x @ self.functional))

    def limit_measure(self):
        return cm.Dirac(self.space, self.functional)


@dataclass(frozen=True)
class QuantumGaussian(StateFamily):
    """exp(i l.x - x^T (cov + h cov_h) x / 2).

    A state at h iff cov + h cov_h + i h J is positive semidefinite, J the
    matrix of the symplectic form.
    """

    space: PhaseSpace
    cov: np.ndarray
    ell: np.ndarray | None = None
    cov_h: np.ndarray | None = None

    def __post_init__(self):
        d = self.space.dim
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (d, d) or not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be a symmetric 2d x 2d matrix")
        ell = np.zeros(d) if self.ell is None else self.space.check(self.ell).copy()
        cov_h = np.zeros((d, d)) if self.cov_h is None else np.asarray(self.cov_h, dtype=float)
        if cov_h.shape != (d, d) or not np.allclose(cov_h, cov_h.T, atol=1e-12):
            raise ValueError("cov_h must be a symmetric 2d x 2d matrix")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "cov_h", cov_h)

    def form_at(self, h: float) -> np.ndarray:
        return self.cov + h * self.cov_h

    def admissible(self, h: float, tol: float = 1e-12) -> bool:
        m = self.form_at(h) + 1j * h * self.space.form_matrix
        return bool(np.linalg.eigvalsh(m)[0] >= -tol * max(1.0, np.abs(m).max()))

    def _eval(self, h, x):
        quad = np.einsum("...i,ij,...j->...", x, self.form_at(h), x)
        return np.exp(1j * (x @ self.ell) - 0.5 * quad)

    def limit_measure(self):
        return cm.Gaussian(self.space, self.ell, self.cov)


def n_bar(t) -> np.ndarray:
    """Bose occupation e^{-t} / (1 - e^{-t}) = 1 / expm1(t)."""
    return 1.0 / np.expm1(t)


@dataclass(frozen=True)
class GibbsPaper(StateFamily):
    """exp(-(h/2) sum_j nbar(beta_h (k_j - mu_h)) |eta_j|^2), one energy per mode."""

    space: PhaseSpace
    energies: np.ndarray
    beta: Schedule
    mu: Schedule = Schedule.const(0.0)

    def __post_init__(self):
        k = np.broadcast_to(np.asarray(self.energies, dtype=float), (self.space.modes,)).copy()
        if np.any(k <= 0):
            raise ValueError("mode energies must be positive")
        object.__setattr__(self, "energies", k)

    def exponents(self, h: float) -> np.ndarray:
        t = self.beta(h) * (self.energies - self.mu(h))
        if np.any(t <= 0):
            raise ValueError(f"Gibbs state needs beta_h (k - mu_h) > 0, got {t.tolist()}")
        return t

    def admissible(self, h: float) -> bool:
        """Twisted positivity holds iff every nbar >= 1, i.e. beta_h (k - mu_h) <= log 2."""
        return bool(np.all(n_bar(self.exponents(h)) >= 1.0 - 1e-12))

    def _eval(self, h, x):
        nb = n_bar(self.exponents(h))
        sq = x[..., 0::2] ** 2 + x[..., 1::2] ** 2
        return np.exp(-0.5 * h * (sq @ nb)).astype(complex)

    def limit_variances(self) -> np.ndarray:
        """lim h * nbar(beta_h (k - mu_h)) per mode; inf where the family loses all mass."""
        if self.mu.a < 0:
            raise cm.NotAnalyticError("chemical potential schedule diverges")
        mu0 = self.mu.limit
        gap = self.energies - mu0
        if np.any(gap <= 0):
            raise cm.NotAnalyticError("limit chemical potential reaches a mode energy")
        a = self.beta.a
        if a < 1:
            return np.zeros(self.space.modes)
        if a == 1:
            return 1.0 / (self.beta.c * gap)
        return np.full(self.space.modes, np.inf)

    def limit_measure(self):
        var = self.limit_variances()
        if np.any(np.isinf(var)):
            raise cm.NotAnalyticError("generating functional collapses to 0 off the origin")
        return cm.Gaussian(self.space, np.zeros(self.space.dim), np.diag(np.repeat(var, 2)))


@dataclass(frozen=True)
class Mixture(StateFamily):
    weights: tuple
    items: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.items) or not self.items:
            raise ValueError("mixture needs matching, nonempty weights and children")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative")
        if len({c.space for c in self.items}) != 1:
            raise ValueError("mixture children live on different spaces")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def space(self):
        return self.items[0].space

    @property
    def children(self):
        return self.items

    def _eval(self, h, x):
        return sum(w * c._eval(h, x) for w, c in zip(self.weights, self.items))

    def limit_measure(self):
        return cm.Mixture(self.weights, tuple(c.limit_measure() for c in self.items))


@dataclass(frozen=True)
class Convolution(StateFamily):
    a: StateFamily
    b: StateFamily

    def __post_init__(self):
        if self.a.space != self.b.space:
            raise ValueError("quantum convolution needs states on the same space")

    @property
    def space(self):
        return self.a.space

    @property
    def children(self):
        return (self.a, self.b)

    def _eval(self, h, x):
        return self.a._eval(h, x) * self.b._eval(h, x)

    def limit_measure(self):
        return cm.Convolution(self.a.limit_measure(), self.b.limit_measure())


@dataclass(frozen=True)
class Tensor(StateFamily):
    a: StateFamily
    b: StateFamily

    @property
    def space(self):
        return direct_sum(self.a.space, self.b.space)

    @property
    def children(self):
        return (self.a, self.b)

    def _eval(self, h, x):
        xa, xb = split(self.a.space, self.b.space, x)
        return self.a._eval(h, xa) * self.b._eval(h, xb)

    def limit_measure(self):
        return cm.Product(self.a.limit_measure(), self.b.limit_measure())


@dataclass(frozen=True)
class Translate(StateFamily):
    """x -> exp(-i h form(xi, x)) child(x + xi), the functional of W(xi) acting on the left."""

    xi: np.ndarray
    child: StateFamily

    def __post_init__(self):
        object.__setattr__(self, "xi", self.child.space.check(self.xi).copy())

    @property
    def space(self):
        return self.child.space

    @property
    def children(self):
        return (self.child,)

    @property
    def has_phase(self):
        return True

    def _eval(self, h, x):
        phase = np.exp(-1j * h * self.space.form(self.xi, x))
        return phase * self.child._eval(h, x + self.xi)

    def limit_measure(self):
        return cm.Modulate(self.xi, self.child.limit_measure())


@dataclass(frozen=True)
class PullBack(StateFamily):
    """y -> exp(i F_h(y)) child(u y) for u mapping this space into the child's."""

    u: LinearMap
    child: StateFamily
    phase: PhaseSchedule = ZERO_PHASE

    def __post_init__(self):
        if self.u.target != self.child.space:
            raise ValueError("pull-back map must land in the child's space")

    @property
    def space(self):
        return self.u.source

    @property
    def children(self):
        return (self.child,)

    @property
    def has_phase(self):
        return not (self.phase.quad is None and self.phase.linear is None) or self.child.has_phase

    def _eval(self, h, x):
        return np.exp(1j * self.phase(h, x)) * self.child._eval(h, self.u(x))

    def limit_measure(self):
        if not self.phase.vanishes:
            raise cm.NotAnalyticError("pull-back phase does not vanish as h -> 0")
        return cm.Pushforward(self.u, self.child.limit_measure())


@dataclass(frozen=True)
class Scale(StateFamily):
    factor: Schedule
    child: StateFamily

    def __post_init__(self):
        if isinstance(self.factor, (int, float)):
            object.__setattr__(self, "factor", Schedule.const(float(self.factor)))
        if self.factor.c < 0:
            raise ValueError("scale factor must be nonnegative")

    @property
    def space(self):
        return self.child.space

    @property
    def children(self):
        return (self.child,)

    def _eval(self, h, x):
        return self.factor(h) * self.child._eval(h, x)

    def limit_measure(self):
        c = self.factor.limit
        if math.isinf(c):
            raise cm.NotAnalyticError("scale factor diverges")
        return cm.Scale(c, self.child.limit_measure())


@dataclass(frozen=True)
class Injected(StateFamily):
    """Arbitrary functional fn(h, x); a test hook, not a catalog member."""

    space: PhaseSpace
    fn: Callable[[float, np.ndarray], np.ndarray]
    label: str = "injected"

    @property
    def has_phase(self):
        return True

    def _eval(self, h, x):
        return np.asarray(self.fn(h, x), dtype=complex)


@dataclass(frozen=True)
class OracleState(StateFamily):
    """Generating functional read off a Fock-oracle density built per h.

    ``builder(h)`` returns ``(oracle, density)``; results are cached per h.
    """

    space: PhaseSpace
    builder: Callable
    label: str = "oracle"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def _pair(self, h):
        if h not in self._cache:
            self._cache[h] = self.builder(h)
        return self._cache[h]

    def _eval(self, h, x):
        oracle, density = self._pair(h)
        flat = x.reshape(-1, x.shape[-1])
        vals = np.array([oracle.expect_weyl(density, v) for v in flat], dtype=complex)
        return vals.reshape(x.shape[:-1])


def anti_vacuum(space: PhaseSpace) -> Injected:
    return Injected(space, lambda h, x: np.exp(0.5 * h * np.sum(x * x, axis=-1)), "anti-vacuum")


# -- state-level operations ----------------------------------------------------


def quantum_convolution(a: StateFamily, b: StateFamily) -> StateFamily:
    return Convolution(a, b)


def translate(s: StateFamily, xi) -> StateFamily:
    return Translate(np.asarray(xi, dtype=float), s)


def pull_symplectic(s: StateFamily, u: LinearMap, phase: PhaseSchedule = ZERO_PHASE) -> StateFamily:
    return PullBack(u, s, phase)


def tensor(a: StateFamily, b: StateFamily) -> StateFamily:
    return Tensor(a, b)


def twisted_gram(s: StateFamily, h: float, points, sign: int = TWIST_SIGN) -> np.ndarray:
    """B[k, j] = G(x_j - x_k) exp(sign * i h form(x_j, x_k)).

    With sign = -1 this is the matrix of omega(A* A) for A = sum_j c_j W(x_j)
    under W(x)W(y) = exp(-i h form(x, y)) W(x + y).
    """
    h = check_h(h)
    pts = np.atleast_2d(s.space.check(points))
    diff = pts[None, :, :] - pts[:, None, :]
    g = s.eval(h, diff)
    tw = s.space.form(pts[None, :, :], pts[:, None, :])
    return g * np.exp(sign * 1j * h * tw)


def twisted_pd_check(s: StateFamily, h: float, points, tol: float = DEFAULT_TOL,
                     sign: int = TWIST_SIGN) -> PsdReport:
    if len(points) == 0:
        raise ValueError("at least one point is required")
    return certify_psd(twisted_gram(s, h, points, sign), tol)


def exchange_residual(s: StateFamily, h: float, a_points, b_points, split_modes: int) -> float:
    """max |G(a1,b1)G(a2,b2) - G(a1,b2)G(a2,b1)| over the given first/second-factor points."""
    first = PhaseSpace(split_modes)
    second = PhaseSpace(s.space.modes - split_modes)
    a = np.atleast_2d(first.check(a_points))
    b = np.atleast_2d(second.check(b_points))
    grid = np.concatenate(
        [np.broadcast_to(a[:, None, :], (len(a), len(b), a.shape[1])),
         np.broadcast_to(b[None, :, :], (len(a), len(b), b.shape[1]))], axis=-1)
    g = s.eval(h, grid)
    lhs = g[:, None, :, None] * g[None, :, None, :]
    rhs = g[:, None, None, :] * g[None, :, :, None]
    return float(np.max(np.abs(lhs - rhs)))

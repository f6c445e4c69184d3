"""Finite-dimensional real symplectic phase spaces.

Vectors are dense real arrays of length 2d in the interleaved layout
(q1, p1, ..., qd, pd). Mode i carries the complex coordinate z_i = q_i + i p_i,
and the symplectic form is the imaginary part of the complex pairing
<x, y> = sum conj(x_i) y_i, so that form((1, 0), (0, 1)) = +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PhaseSpace:
    modes: int

    def __post_init__(self):
        if not isinstance(self.modes, (int, np.integer)) or self.modes < 0:
            raise ValueError(f"modes must be a nonnegative integer, got {self.modes!r}")

    @property
    def dim(self) -> int:
        return 2 * self.modes

    @property
    def form_matrix(self) -> np.ndarray:
        return np.kron(np.eye(self.modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))

    @property
    def norm_matrix(self) -> np.ndarray:
        return np.eye(self.dim)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of length {self.dim}, got shape {x.shape}")
        return x

    def to_complex(self, x) -> np.ndarray:
        x = self.check(x)
        return x[..., 0::2] + 1j * x[..., 1::2]

    def from_complex(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.modes:
            raise ValueError(f"expected {self.modes} complex coordinates, got shape {z.shape}")
        out = np.empty(z.shape[:-1] + (self.dim,))
        out[..., 0::2] = z.real
        out[..., 1::2] = z.imag
        return out

    def norm2(self, x) -> np.ndarray:
        x = self.check(x)
        return np.sum(x * x, axis=-1)

    def form(self, x, y) -> np.ndarray:
        x = self.check(x)
        y = self.check(y)
        return np.sum(x[..., 0::2] * y[..., 1::2] - x[..., 1::2] * y[..., 0::2], axis=-1)


def make_standard(d: int) -> PhaseSpace:
    if d < 1:
        raise ValueError("a standard phase space needs at least one mode")
    return PhaseSpace(d)


def form(space: PhaseSpace, x, y) -> float:
    return space.form(x, y)


@dataclass(frozen=True)
class LinearMap:
    """Real-linear map between phase spaces, stored as a (2 d_target, 2 d_source) matrix."""

    source: PhaseSpace
    target: PhaseSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.target.dim, self.source.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match {self.target.dim}x{self.source.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x) -> np.ndarray:
        x = self.source.check(x)
        return x @ self.matrix.T

    def compose(self, inner: "LinearMap") -> "LinearMap":
        """Return self after inner."""
        if inner.target != self.source:
            raise ValueError("cannot compose: spaces do not match")
        return LinearMap(inner.source, self.target, self.matrix @ inner.matrix)

    def __matmul__(self, inner: "LinearMap") -> "LinearMap":
        return self.compose(inner)

    @classmethod
    def identity(cls, space: PhaseSpace) -> "LinearMap":
        return cls(space, space, np.eye(space.dim))

    @classmethod
    def zero(cls, source: PhaseSpace, target: PhaseSpace) -> "LinearMap":
        return cls(source, target, np.zeros((target.dim, source.dim)))

    @classmethod
    def rotation(cls, space: PhaseSpace, theta) -> "LinearMap":
        """Multiply every mode by exp(i theta); theta may be a scalar or per-mode array."""
        thetas = np.broadcast_to(np.asarray(theta, dtype=float), (space.modes,))
        blocks = [np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]) for t in thetas]
        m = np.zeros((space.dim, space.dim))
        for i, b in enumerate(blocks):
            m[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = b
        return cls(space, space, m)

    @classmethod
    def scaling(cls, space: PhaseSpace, c: float) -> "LinearMap":
        return cls(space, space, c * np.eye(space.dim))

    @classmethod
    def from_complex(cls, source: PhaseSpace, target: PhaseSpace, u) -> "LinearMap":
        """Real form of a complex-linear map given as a (d_target, d_source) complex matrix."""
        u = np.asarray(u, dtype=complex)
        m = np.zeros((target.dim, source.dim))
        m[0::2, 0::2] = u.real
        m[0::2, 1::2] = -u.imag
        m[1::2, 0::2] = u.imag
        m[1::2, 1::2] = u.real
        return cls(source, target, m)

    @classmethod
    def inclusion(cls, source: PhaseSpace, target: PhaseSpace, offset_modes: int = 0) -> "LinearMap":
        """Embed source as the block of modes starting at offset_modes in target."""
        if offset_modes + source.modes > target.modes:
            raise ValueError("inclusion does not fit in the target space")
        m = np.zeros((target.dim, source.dim))
        start = 2 * offset_modes
        m[start : start + source.dim, :] = np.eye(source.dim)
        return cls(source, target, m)


def is_symplectic(u: LinearMap, tol: float = 1e-12) -> bool:
    j_src = u.source.form_matrix
    j_tgt = u.target.form_matrix
    defect = u.matrix.T @ j_tgt @ u.matrix - j_src
    return bool(np.max(np.abs(defect), initial=0.0) <= tol)


def direct_sum(a: PhaseSpace, b: PhaseSpace) -> PhaseSpace:
    return PhaseSpace(a.modes + b.modes)


def split(a: PhaseSpace, b: PhaseSpace, x) -> tuple[np.ndarray, np.ndarray]:
    """Split a vector of direct_sum(a, b) into its two components."""
    x = direct_sum(a, b).check(x)
    return x[..., : a.dim], x[..., a.dim :]


def join(a: PhaseSpace, b: PhaseSpace, x, y) -> np.ndarray:
    x = a.check(x)
    y = b.check(y)
    lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    x = np.broadcast_to(x, lead + (a.dim,))
    y = np.broadcast_to(y, lead + (b.dim,))
    return np.concatenate([x, y], axis=-1)

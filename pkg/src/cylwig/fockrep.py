"""Truncated Fock-space oracle for one or two bosonic modes.

The annihilation operator carries the semiclassical parameter,
a|n> = sqrt(h n)|n-1>, so [a, a*] = h below the truncation edge and the Weyl
operator W(x) = exp(i(a*(eta) + a(eta))) with eta the complex view of x obeys
W(x)W(y) = exp(-i h form(x, y)) W(x + y).

Truncated matrices are only faithful away from the cutoff. Every residual
reported here is measured on the leading block of ``N - ceil(N/4)`` basis
states per mode, and vectors are trusted only for ``|x| <= envelope``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .symplectic import PhaseSpace

# x_max(N, h) = ENVELOPE_C * sqrt(N / h); calibrated by scripts/calibrate_oracle.py
ENVELOPE_C = 0.06
MAX_TWO_MODE_N = 64
TAIL_WARN = 1e-6


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Density:
    """Positive operator stored as sum_i weights[i] |v_i><v_i|.

    ``vectors`` is None for operators diagonal in the number basis; then
    ``weights`` holds the diagonal.
    """

    weights: np.ndarray
    vectors: np.ndarray | None
    dim: int
    tail: float = 0.0

    @property
    def trace(self) -> float:
        if self.vectors is None:
            return float(np.sum(self.weights))
        return float(np.real(np.sum(self.weights * np.sum(np.abs(self.vectors) ** 2, axis=0))))

    @property
    def matrix(self) -> np.ndarray:
        if self.vectors is None:
            return np.diag(self.weights.astype(complex))
        return (self.vectors * self.weights) @ self.vectors.conj().T

    def scaled(self, c: float) -> "Density":
        if c < 0:
            raise ValueError("densities only scale by nonnegative factors")
        return Density(self.weights * c, self.vectors, self.dim, self.tail * c)

    def __add__(self, other: "Density") -> "Density":
        if self.dim != other.dim:
            raise ValueError("density dimensions differ")
        a, b = self._as_vectors(), other._as_vectors()
        return Density(
            np.concatenate([a.weights, b.weights]),
            np.concatenate([a.vectors, b.vectors], axis=1),
            self.dim,
            self.tail + other.tail,
        )

    def _as_vectors(self) -> "Density":
        if self.vectors is not None:
            return self
        idx = np.nonzero(self.weights)[0]
        vecs = np.zeros((self.dim, idx.size), dtype=complex)
        vecs[idx, np.arange(idx.size)] = 1.0
        return Density(self.weights[idx], vecs, self.dim, self.tail)


@dataclass(frozen=True)
class QuadratureSpec:
    """Uniform tensor grid on [-half_width, half_width]^m with trapezoid weights."""

    half_width: float
    points: int

    def nodes(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        axis = np.linspace(-self.half_width, self.half_width, self.points)
        step = axis[1] - axis[0] if self.points > 1 else 1.0
        w1 = np.full(self.points, step)
        w1[0] = w1[-1] = step / 2
        grids = np.meshgrid(*([axis] * m), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w1] * m), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return nodes, weights


@dataclass(frozen=True)
class QuantizeResult:
    matrix: np.ndarray
    tail: float


@dataclass(frozen=True)
class FockOracle:
    modes: int
    h: float
    N: int

    def __post_init__(self):
        if self.modes not in (1, 2):
            raise ValueError("the oracle supports one or two modes")
        if not 0 < self.h <= 1:
            raise ValueError(f"h must lie in (0, 1], got {self.h}")
        if self.N < 4:
            raise ValueError("truncation N must be at least 4")
        if self.modes == 2 and self.N > MAX_TWO_MODE_N:
            raise ValueError(f"two-mode oracle is capped at N <= {MAX_TWO_MODE_N}")

    @property
    def space(self) -> PhaseSpace:
        return PhaseSpace(self.modes)

    @property
    def dim(self) -> int:
        return self.N**self.modes

    @property
    def keep(self) -> int:
        """Per-mode size of the block on which assertions are made."""
        return self.N - math.ceil(self.N / 4)

    @property
    def envelope(self) -> float:
        return ENVELOPE_C * math.sqrt(self.N / self.h)

    def within_envelope(self, x) -> bool:
        return bool(np.sqrt(self.space.norm2(x)) <= self.envelope)

    @cached_property
    def annihilation(self) -> np.ndarray:
        """Single-mode annihilation matrix, a[n-1, n] = sqrt(h n)."""
        return np.diag(np.sqrt(self.h * np.arange(1, self.N)), 1)

    @cached_property
    def _field_eig(self) -> tuple[np.ndarray, np.ndarray]:
        off = np.sqrt(self.h * np.arange(1, self.N))
        lam, vec = scipy.linalg.eigh_tridiagonal(np.zeros(self.N), off)
        return lam, vec

    def mode_operator(self, which: int, op: np.ndarray) -> np.ndarray:
        if self.modes == 1:
            return op
        eye = np.eye(self.N)
        return np.kron(op, eye) if which == 0 else np.kron(eye, op)

    def commutator_defect(self) -> float:
        a = self.annihilation
        c = a @ a.T - a.T @ a - self.h * np.eye(self.N)
        k = self.keep
        return float(np.linalg.norm(c[:k, :k], 2))

    # -- Weyl operators ------------------------------------------------------

    def _single_weyl(self, eta: complex) -> np.ndarray:
        lam, vec = self._field_eig
        r, theta = abs(eta), np.angle(eta)
        phase = np.exp(1j * theta * np.arange(self.N))
        core = (vec * np.exp(1j * r * lam)) @ vec.T
        return phase[:, None] * core * phase.conj()[None, :]

    def weyl_matrix(self, x) -> np.ndarray:
        """exp(i(a*(eta) + a(eta))) on the truncated space, eta the complex view of x."""
        eta = self.space.to_complex(x)
        mats = [self._single_weyl(e) for e in eta]
        return mats[0] if self.modes == 1 else np.kron(mats[0], mats[1])

    def weyl_matrix_expm(self, x) -> np.ndarray:
        """Same operator by a dense matrix exponential; slow cross-check path."""
        eta = self.space.to_complex(x)
        a = self.annihilation
        gen = sum(
            self.mode_operator(i, e * a.T + np.conj(e) * a) for i, e in enumerate(eta)
        )
        return scipy.linalg.expm(1j * gen)

    def weyl_apply(self, x, vectors: np.ndarray) -> np.ndarray:
        """W(x) @ vectors without forming the full matrix; vectors has shape (dim, r)."""
        eta = self.space.to_complex(x)
        lam, vec = self._field_eig
        n = np.arange(self.N)

        def apply_mode(e, v):
            # v has the mode index on axis 0
            phase = np.exp(1j * np.angle(e) * n)
            shape = (-1,) + (1,) * (v.ndim - 1)
            v = v * phase.conj().reshape(shape)
            v = np.tensordot(vec.T, v, axes=(1, 0))
            v = v * np.exp(1j * abs(e) * lam).reshape(shape)
            v = np.tensordot(vec, v, axes=(1, 0))
            return v * phase.reshape(shape)

        vectors = np.asarray(vectors, dtype=complex)
        if self.modes == 1:
            return apply_mode(eta[0], vectors)
        r = vectors.shape[1]
        t = vectors.reshape(self.N, self.N, r)
        t = apply_mode(eta[0], t)
        t = np.moveaxis(apply_mode(eta[1], np.moveaxis(t, 1, 0)), 0, 1)
        return t.reshape(self.dim, r)

    def _weyl_diag(self, x) -> np.ndarray:
        lam, vec = self._field_eig
        diags = [(vec**2) @ np.exp(1j * abs(e) * lam) for e in self.space.to_complex(x)]
        return diags[0] if self.modes == 1 else np.kron(diags[0], diags[1])

    def weyl_relation_residual(self, x, y) -> float:
        """Operator-norm residual of W(x)W(y) - exp(-i h form(x,y)) W(x+y) on the kept block."""
        x = self.space.check(x)
        y = self.space.check(y)
        lhs = self.weyl_matrix(x) @ self.weyl_matrix(y)
        rhs = np.exp(-1j * self.h * self.space.form(x, y)) * self.weyl_matrix(x + y)
        return float(np.linalg.norm(self._restrict(lhs - rhs), 2))

    def unitarity_defect(self, x) -> float:
        w = self.weyl_matrix(x)
        return float(np.linalg.norm(w @ w.conj().T - np.eye(self.dim), 2))

    def _restrict(self, m: np.ndarray) -> np.ndarray:
        k = self.keep
        if self.modes == 1:
            return m[:k, :k]
        idx = (np.arange(k)[:, None] * self.N + np.arange(k)[None, :]).ravel()
        return m[np.ix_(idx, idx)]

    # -- states --------------------------------------------------------------

    def _coherent_mode(self, z: complex) -> tuple[np.ndarray, float]:
        # eigenvector of a with eigenvalue z: amplitudes alpha^n / sqrt(n!), alpha = z / sqrt(h)
        alpha = z / math.sqrt(self.h)
        n = np.arange(self.N)
        logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) if alpha != 0 else None
        if logmag is None:
            v = np.zeros(self.N, dtype=complex)
            v[0] = 1.0
            return v, 0.0
        v = np.exp(logmag - 0.5 * abs(alpha) ** 2) * np.exp(1j * n * np.angle(alpha))
        kept = float(np.sum(np.abs(v) ** 2))
        return v / math.sqrt(kept), max(0.0, 1.0 - kept)

    def _product_vector(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return parts[0] if self.modes == 1 else np.kron(parts[0], parts[1])

    def vacuum_vector(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def coherent_vector(self, z) -> tuple[np.ndarray, float]:
        """Normalized product of per-mode eigenvectors of a with eigenvalues z; returns (vector, tail)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if z.shape != (self.modes,):
            raise ValueError(f"coherent label needs {self.modes} complex entries")
        parts, tails = zip(*(self._coherent_mode(zi) for zi in z))
        tail = 1.0 - float(np.prod([1.0 - t for t in tails]))
        return self._product_vector(parts), tail

    def number_vector(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=int))
        if n.shape != (self.modes,) or np.any(n < 0) or np.any(n >= self.N):
            raise ValueError("occupation numbers out of range")
        parts = []
        for ni in n:
            v = np.zeros(self.N, dtype=complex)
            v[ni] = 1.0
            parts.append(v)
        return self._product_vector(parts)

    def pure_density(self, vector: np.ndarray, weight: float = 1.0, tail: float = 0.0) -> Density:
        v = np.asarray(vector, dtype=complex).reshape(self.dim, 1)
        v = v / np.linalg.norm(v)
        return Density(np.array([float(weight)]), v, self.dim, tail * weight)

    def thermal_diagonal(self, k: float, beta: float, mu: float) -> tuple[np.ndarray, float]:
        """Per-mode Gibbs weights for exp(-beta (dGamma_h(k) - mu dGamma_h(1))) = exp(-beta h (k-mu) n)."""
        t = beta * (k - mu)
        if not t > 0:
            raise ValueError(f"thermal state needs beta (k - mu) > 0, got {t}")
        n = np.arange(self.N)
        q = math.exp(-t * self.h)
        w = (1.0 - q) * q**n
        kept = float(np.sum(w))
        return w / kept, max(0.0, 1.0 - kept)

    def state_density(self, spec: dict) -> Density:
        """Density for {kind: vacuum | coherent(z) | thermal(k, beta, mu) | number(n)}.

        Two-mode thermal/coherent parameters may be given per mode. The mass
        lost to truncation is renormalized away and reported in ``tail``.
        """
        kind = spec["kind"]
        if kind == "vacuum":
            return self.pure_density(self.vacuum_vector())
        if kind == "coherent":
            z = spec["z"]
            v, tail = self.coherent_vector(z)
            return self.pure_density(v, tail=tail)
        if kind == "number":
            return self.pure_density(self.number_vector(spec["n"]))
        if kind == "thermal":
            ks = np.broadcast_to(np.asarray(spec["k"], dtype=float), (self.modes,))
            betas = np.broadcast_to(np.asarray(spec["beta"], dtype=float), (self.modes,))
            mus = np.broadcast_to(np.asarray(spec.get("mu", 0.0), dtype=float), (self.modes,))
            diags, tails = zip(*(self.thermal_diagonal(*p) for p in zip(ks, betas, mus)))
            w = diags[0] if self.modes == 1 else np.kron(diags[0], diags[1])
            tail = 1.0 - float(np.prod([1.0 - t for t in tails]))
            return Density(w, None, self.dim, tail)
        raise ValueError(f"unknown density kind {kind!r}")

    # -- expectations --------------------------------------------------------

    def expect(self, density: Density, operator: np.ndarray) -> complex:
        op = np.asarray(operator)
        if op.shape != (self.dim, self.dim) or density.dim != self.dim:
            raise ValueError("shape mismatch between density and operator")
        if density.vectors is None:
            return complex(np.sum(density.weights * np.diag(op)))
        v = density.vectors
        return complex(np.sum(density.weights * np.einsum("ir,ij,jr->r", v.conj(), op, v)))

    def expect_weyl(self, density: Density, x) -> complex:
        """Tr(rho W(x)), computed without forming W(x) when possible."""
        x = self.space.check(x)
        if density.vectors is None:
            return complex(np.sum(density.weights * self._weyl_diag(x)))
        v = density.vectors
        wv = self.weyl_apply(x, v)
        return complex(np.sum(density.weights * np.sum(v.conj() * wv, axis=0)))

    def expect_weyl_many(self, density: Density, xs, batch: int = 2048) -> np.ndarray:
        """Tr(rho W(x)) for each row of xs; batched for one mode."""
        xs = np.atleast_2d(self.space.check(xs))
        if self.modes != 1:
            return np.array([self.expect_weyl(density, x) for x in xs])
        lam, vec = self._field_eig
        eta = self.space.to_complex(xs)[:, 0]
        n = np.arange(self.N)
        out = np.empty(len(xs), dtype=complex)
        for start in range(0, len(xs), batch):
            e = eta[start:start + batch]
            phase = np.exp(1j * np.angle(e)[:, None] * n)
            spec = np.exp(1j * np.abs(e)[:, None] * lam)
            if density.vectors is None:
                out[start:start + batch] = spec @ ((vec**2).T @ density.weights)
                continue
            total = np.zeros(len(e), dtype=complex)
            for w, v in zip(density.weights, density.vectors.T):
                # <v| P V diag(spec) V^T P* |v> with P = diag(phase)
                left = (phase.conj() * v[None, :]) @ vec
                right = (phase * v.conj()[None, :]) @ vec
                total += w * np.sum(right * spec * left, axis=1)
            out[start:start + batch] = total
        return out

    def generating_functional(self, density: Density) -> Callable[[np.ndarray], complex]:
        return lambda x: self.expect_weyl(density, x)

    # -- quantization --------------------------------------------------------

    def quantize(self, symbol, quad: QuadratureSpec, tail_threshold: float = TAIL_WARN) -> QuantizeResult:
        """Sum_i w_i fhat(t_i) W(2 pi B t_i) plus the atomic Fourier part of ``symbol``."""
        nodes, coeffs, tail = _quadrature_terms(symbol, quad)
        _warn_tail(tail, tail_threshold)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for x, c in zip(nodes, coeffs):
            out += c * self.weyl_matrix(x)
        return QuantizeResult(out, tail)

    def expect_quantized(self, density: Density, symbol, quad: QuadratureSpec,
                         tail_threshold: float = TAIL_WARN) -> tuple[complex, float]:
        """Tr(rho Op(f)) by the same quadrature as ``quantize``; returns (value, tail)."""
        nodes, coeffs, tail = _quadrature_terms(symbol, quad)
        _warn_tail(tail, tail_threshold)
        if len(coeffs) == 0:
            return 0j, tail
        return complex(np.sum(coeffs * self.expect_weyl_many(density, nodes))), tail


def _quadrature_terms(symbol, quad: QuadratureSpec):
    """Phase-space nodes 2 pi B t, complex coefficients, and excluded l1 tail of fhat."""
    base = np.atleast_2d(np.asarray(symbol.base_vectors, dtype=float))
    m = base.shape[0]
    nodes, coeffs, tail = [], [], 0.0
    if symbol.fourier is not None:
        t, w = quad.nodes(m)
        vals = symbol.fourier(t)
        keep = vals != 0
        nodes.append(2 * np.pi * t[keep] @ base)
        coeffs.append(w[keep] * vals[keep])
        # l1 mass between the grid box and a box twice as wide, same spacing
        wide = QuadratureSpec(2 * quad.half_width, 2 * quad.points - 1)
        tw, ww = wide.nodes(m)
        outside = np.any(np.abs(tw) > quad.half_width * (1 + 1e-12), axis=-1)
        tail = float(np.sum(ww[outside] * np.abs(symbol.fourier(tw[outside]))))
    for t, c in symbol.fourier_atoms:
        nodes.append((2 * np.pi * np.asarray(t, dtype=float) @ base)[None, :])
        coeffs.append(np.array([complex(c)]))
    if not nodes:
        return np.zeros((0, base.shape[1])), np.zeros(0, dtype=complex), 0.0
    return np.concatenate(nodes), np.concatenate(coeffs).astype(complex), tail


def _warn_tail(tail: float, threshold: float) -> None:
    if tail > threshold:
        warnings.warn(
            f"Fourier tail mass {tail:.3e} outside the quadrature box exceeds {threshold:.1e}",
            TruncationWarning,
            stacklevel=3,
        )


# -- convergence tables -------------------------------------------------------------

STANDARD_PAIR_H = 0.3
STANDARD_PAIR_VECTORS = np.array(
    [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-0.8, 0.6), (0.9, -0.9), (-1.0, -0.5)]
)


def standard_pairs() -> list[tuple[np.ndarray, np.ndarray]]:
    """All ordered pairs of the standard one-mode test vectors."""
    v = STANDARD_PAIR_VECTORS
    return [(x, y) for x in v for y in v]


def weyl_convergence(Ns: Sequence[int], h: float = STANDARD_PAIR_H) -> list[tuple[int, float, str, float]]:
    """Rows (N, h, test-id, residual): max Weyl-relation residual over the standard pairs."""
    rows = []
    for n in Ns:
        o = FockOracle(1, h, n)
        r = max(o.weyl_relation_residual(x, y) for x, y in standard_pairs())
        rows.append((n, h, "weyl_relation", r))
    return rows


def vacuum_convergence(Ns: Sequence[int], h: float, radius: float = 1.0,
                       grid: int = 5) -> list[tuple[int, float, str, float]]:
    """Rows (N, h, test-id, residual): max |<0|W(x)|0> - exp(-h|x|^2/2)| on a grid in the disc."""
    axis = np.linspace(-radius, radius, grid) / math.sqrt(2)
    xs = np.array([(a, b) for a in axis for b in axis])
    rows = []
    for n in Ns:
        o = FockOracle(1, h, n)
        rho = o.state_density({"kind": "vacuum"})
        err = max(abs(o.expect_weyl(rho, x) - math.exp(-0.5 * h * float(x @ x))) for x in xs)
        rows.append((n, h, "vacuum_functional", err))
    return rows

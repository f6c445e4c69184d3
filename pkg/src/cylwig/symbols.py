"""Cylindrical functions on the dual of a phase space.

A cylindrical function f is fixed by base vectors b_1..b_m of X and a base
function F on R^m: f(xi) = F(xi(b_1), ..., xi(b_m)). Quantization needs its
Fourier side under the convention

    F(y) = int fhat(t) exp(2 pi i t.y) dt + sum_j c_j exp(2 pi i t_j.y),

so symbols carry a continuous density ``fourier`` and a list of
``fourier_atoms`` (t_j, c_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, special


@dataclass(frozen=True)
class CylFunction:
    base_vectors: np.ndarray
    function: Callable[[np.ndarray], np.ndarray]
    fourier: Callable[[np.ndarray], np.ndarray] | None = None
    fourier_atoms: tuple = ()
    label: str = ""

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.base_vectors, dtype=float))
        object.__setattr__(self, "base_vectors", b)

    @property
    def rank(self) -> int:
        return self.base_vectors.shape[0]

    def __call__(self, y) -> np.ndarray:
        return self.function(np.asarray(y, dtype=float))

    def on_dual(self, p) -> complex:
        """Evaluate at the functional x -> p.x."""
        return self(np.asarray(p, dtype=float) @ self.base_vectors.T)

    def __add__(self, other: "CylFunction") -> "CylFunction":
        if not np.array_equal(self.base_vectors, other.base_vectors):
            raise ValueError("only symbols on the same base can be added")
        if self.fourier is None and other.fourier is None:
            four = None
        else:
            fa = self.fourier or (lambda t: np.zeros(t.shape[:-1]))
            fb = other.fourier or (lambda t: np.zeros(t.shape[:-1]))
            four = lambda t: fa(t) + fb(t)
        return CylFunction(
            self.base_vectors,
            lambda y: self.function(y) + other.function(y),
            four,
            tuple(self.fourier_atoms) + tuple(other.fourier_atoms),
            f"({self.label}+{other.label})",
        )


def gaussian_bump(base_vectors, center, width: float = 1.0, amplitude: float = 1.0) -> CylFunction:
    """F(y) = amplitude * exp(-|y - center|^2 / (2 width^2))."""
    base = np.atleast_2d(np.asarray(base_vectors, dtype=float))
    c = np.broadcast_to(np.asarray(center, dtype=float), (base.shape[0],)).copy()
    m = base.shape[0]

    def f(y):
        return amplitude * np.exp(-np.sum((y - c) ** 2, axis=-1) / (2 * width**2))

    def fhat(t):
        norm = amplitude * (2 * np.pi * width**2) ** (m / 2)
        return norm * np.exp(-2 * np.pi**2 * width**2 * np.sum(t**2, axis=-1) - 2j * np.pi * (t @ c))

    return CylFunction(base, f, fhat, (), f"bump(c={c.tolist()}, w={width})")


def constant(base_vectors, c: complex) -> CylFunction:
    base = np.atleast_2d(np.asarray(base_vectors, dtype=float))
    zero = np.zeros(base.shape[0])
    return CylFunction(base, lambda y: np.full(np.shape(y)[:-1], c, dtype=complex),
                       None, ((zero, c),), f"const({c})")


def plane_wave(x, coefficient: complex = 1.0) -> CylFunction:
    """xi -> coefficient * exp(i xi(x)), a one-vector cylindrical function."""
    base = np.atleast_2d(np.asarray(x, dtype=float))
    return CylFunction(
        base,
        lambda y: coefficient * np.exp(1j * y[..., 0]),
        None,
        ((np.array([1 / (2 * np.pi)]), coefficient),),
        "plane_wave",
    )


def _smooth_step(u):
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def cutoff_profile(r):
    """Smooth radial cutoff: 1 on [0, 1], 0 beyond 2."""
    return 1.0 - _smooth_step(np.asarray(r, dtype=float) - 1.0)


@dataclass(frozen=True)
class _RadialTransform:
    """Two-dimensional Fourier transform of the radial cutoff, tabulated once."""

    rho_max: float = 12.0
    samples: int = 1201

    @cached_property
    def spline(self):
        rho = np.linspace(0.0, self.rho_max, self.samples)
        # profile is 1 on [0, 1]: closed form J1(k)/k there, Gauss-Legendre on [1, 2]
        k = 2 * np.pi * rho
        with np.errstate(invalid="ignore", divide="ignore"):
            inner = np.where(k > 0, special.j1(k) / np.where(k > 0, k, 1.0), 0.5)
        u, w = np.polynomial.legendre.leggauss(256)
        r = 1.5 + 0.5 * u
        ring = (special.j0(np.outer(k, r)) * (cutoff_profile(r) * r)) @ (0.5 * w)
        return interpolate.CubicSpline(rho, 2 * np.pi * (inner + ring))

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        inside = rho <= self.rho_max
        out[inside] = self.spline(rho[inside])
        return out


_RADIAL = _RadialTransform()


def radial_cutoff(base_vectors, radius: float) -> CylFunction:
    """chi(|y| / radius) on a two-vector base; fourier computed by Hankel transform."""
    base = np.atleast_2d(np.asarray(base_vectors, dtype=float))
    if base.shape[0] != 2:
        raise ValueError("radial_cutoff needs exactly two base vectors")
    R = float(radius)

    def f(y):
        return cutoff_profile(np.linalg.norm(y, axis=-1) / R)

    def fhat(t):
        return R**2 * _RADIAL(R * np.linalg.norm(t, axis=-1))

    return CylFunction(base, f, fhat, (), f"cutoff(R={R})")


def radial_cutoff_support(radius: float) -> float:
    """Half-width in t beyond which the cutoff's transform is treated as zero."""
    return _RADIAL.rho_max / radius


@dataclass(frozen=True)
class PhaseFunction:
    """Smooth function on R^2 (marginal coordinates q, p) with analytic gradient."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def __call__(self, y):
        return self.value(np.asarray(y, dtype=float))

    def __mul__(self, other: "PhaseFunction") -> "PhaseFunction":
        return PhaseFunction(
            lambda y: self.value(y) * other.value(y),
            lambda y: self.gradient(y) * other.value(y)[..., None]
            + self.value(y)[..., None] * other.gradient(y),
            f"{self.label}*{other.label}",
        )


def polynomial(coeffs) -> PhaseFunction:
    """sum_ij coeffs[i, j] q^i p^j."""
    c = np.asarray(coeffs, dtype=float)
    dq = np.polynomial.polynomial.polyder(c, axis=0)
    dp = np.polynomial.polynomial.polyder(c, axis=1)
    pv = np.polynomial.polynomial.polyval2d

    def grad(y):
        return np.stack([pv(y[..., 0], y[..., 1], dq), pv(y[..., 0], y[..., 1], dp)], axis=-1)

    return PhaseFunction(lambda y: pv(y[..., 0], y[..., 1], c), grad, "poly")


def phase_bump(center, width: float = 1.0) -> PhaseFunction:
    c = np.asarray(center, dtype=float)

    def val(y):
        return np.exp(-np.sum((y - c) ** 2, axis=-1) / (2 * width**2))

    return PhaseFunction(val, lambda y: -(y - c) / width**2 * val(y)[..., None], "bump")


def harmonic(omega: float, center: Sequence[float] = (0.0, 0.0)) -> PhaseFunction:
    """omega * |y - center|^2."""
    c = np.asarray(center, dtype=float)
    return PhaseFunction(
        lambda y: omega * np.sum((y - c) ** 2, axis=-1),
        lambda y: 2 * omega * (y - c),
        f"harmonic({omega})",
    )


def poisson_bracket(f: PhaseFunction, g: PhaseFunction, y) -> np.ndarray:
    """{f, g} = d_q f d_p g - d_p f d_q g."""
    gf = f.gradient(y)
    gg = g.gradient(y)
    return gf[..., 0] * gg[..., 1] - gf[..., 1] * gg[..., 0]

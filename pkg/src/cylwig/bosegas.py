"""Ideal Bose gas in a harmonic trap, h -> 0 as the thermodynamic limit.

Levels are E_n = omega h^(1/d) (n + 1) with degeneracy binom(n + d - 1, d - 1),
occupations h / (exp(beta_h (E - mu)) - 1). The chemical potential is solved
from a consistency condition on the summed occupations. Sums run over total
degree n; past ``EXACT_DEGREES`` the remainder is an Euler-Maclaurin integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import genfun as gf
from .fockrep import FockOracle
from .symplectic import PhaseSpace

CUTOFF = 60.0  # keep levels with beta_h (E - mu) <= CUTOFF
EXACT_DEGREES = 200_000
TAIL_LIMIT = 1e-8


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GasConfig:
    """Trap and temperature data.

    beta_scaling: "fixed" uses beta_h = beta; "scaled" uses beta h^((d-1)/d).
    normalization: "fraction" solves sum occupation = 1 (1/h particles);
    "literal" solves sum occupation = 1/h.
    """

    d: int
    omega: float
    beta: float
    h: float
    beta_scaling: str = "fixed"
    normalization: str = "fraction"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.omega <= 0 or self.beta <= 0:
            raise ValueError("omega and beta must be positive")
        if not 0 < self.h < 1:
            raise ValueError("h must lie in (0, 1)")
        if self.beta_scaling not in ("fixed", "scaled"):
            raise ValueError(f"unknown beta scaling {self.beta_scaling!r}")
        if self.normalization not in ("fraction", "literal"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def beta_h(self) -> float:
        if self.beta_scaling == "scaled":
            return self.beta * self.h ** ((self.d - 1) / self.d)
        return self.beta

    @property
    def level_spacing(self) -> float:
        return self.omega * self.h ** (1 / self.d)

    @property
    def ground_energy(self) -> float:
        return self.level_spacing

    @property
    def target(self) -> float:
        """Required value of the summed occupations."""
        return 1.0 if self.normalization == "fraction" else 1.0 / self.h

    def energy(self, m) -> float:
        m = np.asarray(m, dtype=int)
        if m.shape != (self.d,) or np.any(m < 0):
            raise ValueError(f"multi-index must be {self.d} nonnegative integers")
        return self.level_spacing * (int(m.sum()) + 1)


def degeneracy(n, d: int):
    return special.binom(np.asarray(n, dtype=float) + d - 1, d - 1)


def occupation(cfg: GasConfig, m, mu: float) -> float:
    e = cfg.energy(m)
    if mu >= e:
        raise ValueError(f"chemical potential {mu} is not below the level energy {e}")
    return cfg.h / math.expm1(cfg.beta_h * (e - mu))


@dataclass(frozen=True)
class LevelSum:
    total: float
    ground: float
    excited: float
    tail: float
    degrees: int


def _level_sum(cfg: GasConfig, gap: float) -> LevelSum:
    """h * sum_n g(n) / expm1(gap + step n), with gap = beta_h (E_0 - mu) > 0."""
    step = cfg.beta_h * cfg.level_spacing
    d = cfg.d
    n_max = int(max(0.0, (CUTOFF - gap) / step))
    n_exact = min(n_max, EXACT_DEGREES)
    n = np.arange(1, n_exact + 1, dtype=float)
    terms = degeneracy(n, d) / np.expm1(gap + step * n)
    excited = math.fsum(terms[::-1])

    def f(x):
        return degeneracy(x, d) / np.expm1(gap + step * x)

    if n_max > n_exact:
        a, b = float(n_exact + 1), float(n_max)

        def df(x):
            g = degeneracy(x, d)
            dg = g * (special.digamma(x + d) - special.digamma(x + 1)) if d > 1 else 0.0
            e = np.expm1(gap + step * x)
            return dg / e - g * step * (e + 1) / e**2

        body, _ = integrate.quad(f, a, b, limit=200, epsabs=0.0, epsrel=1e-13)
        # Euler-Maclaurin for the sum over n = a..b; the exact part stopped at a - 1
        excited += body + 0.5 * (f(a) + f(b)) + (df(b) - df(a)) / 12.0
    tail, _ = integrate.quad(f, float(n_max) + 0.5, np.inf, limit=200)
    ground = 1.0 / math.expm1(gap)
    h = cfg.h
    return LevelSum(h * (ground + excited), h * ground, h * excited, h * tail, n_max)


@dataclass(frozen=True)
class MuSolution:
    mu: float
    gap: float  # beta_h (E_0 - mu)
    mu_gap: float  # E_0 - mu
    sums: LevelSum
    residual: float

    @property
    def tail_fraction(self) -> float:
        return self.sums.tail / self.sums.total


def solve_mu(cfg: GasConfig) -> MuSolution:
    """Chemical potential below E_0 making the summed occupations equal cfg.target."""
    target = cfg.target

    def g(log_gap):
        return _level_sum(cfg, math.exp(log_gap)).total / target - 1.0

    lo, hi = math.log(1e-300), math.log(CUTOFF)
    # at large gap the sum falls below target; at tiny gap the ground term dominates
    if g(hi) > 0:
        hi_val = hi
        while g(hi_val) > 0:
            hi_val += 1.0
            if hi_val > math.log(1e6):
                raise TruncationError("no chemical potential reaches the target occupation")
        hi = hi_val
    log_gap = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    gap = math.exp(log_gap)
    sums = _level_sum(cfg, gap)
    residual = abs(sums.total - target) / target
    if sums.tail > TAIL_LIMIT * sums.total:
        raise TruncationError(
            f"truncation tail {sums.tail / sums.total:.2e} exceeds {TAIL_LIMIT:.0e}; "
            f"raise the cutoff beyond {sums.degrees} degrees"
        )
    mu_gap = gap / cfg.beta_h
    return MuSolution(cfg.ground_energy - mu_gap, gap, mu_gap, sums, residual)


@dataclass(frozen=True)
class Fraction:
    f0: float
    f0_complement: float
    solution: MuSolution


def condensed_fraction(cfg: GasConfig, solution: MuSolution | None = None) -> Fraction:
    """Ground-level share of the occupations, and 1 minus the excited share."""
    sol = solution or solve_mu(cfg)
    total = cfg.target
    f0 = sol.sums.ground / total
    return Fraction(f0, 1.0 - sol.sums.excited / total, sol)


@dataclass(frozen=True)
class ScanRow:
    d: int
    omega: float
    beta: float
    h: float
    mu_gap: float
    f0: float
    f0_complement: float
    tail: float
    residual: float
    beta_star_flag: bool


@dataclass(frozen=True)
class ScanResult:
    rows: list
    beta_star: dict  # h -> estimate (nan if never below threshold)
    beta_star_limit: float

    def column(self, name: str, h: float | None = None) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if h is None or r.h == h])


def scan(d: int, omega: float, betas: Sequence[float], hs: Sequence[float],
         threshold: float = 0.01, beta_scaling: str = "fixed",
         normalization: str = "fraction") -> ScanResult:
    rows, stars = [], {}
    for h in hs:
        f0s = []
        for beta in betas:
            cfg = GasConfig(d, omega, float(beta), float(h), beta_scaling, normalization)
            fr = condensed_fraction(cfg)
            f0s.append(fr.f0)
            rows.append(ScanRow(d, omega, float(beta), float(h), fr.solution.mu_gap, fr.f0,
                                fr.f0_complement, fr.solution.tail_fraction,
                                fr.solution.residual, False))
        below = [b for b, f in zip(betas, f0s) if f <= threshold]
        star = float(max(below)) if below else math.nan
        stars[float(h)] = star
        for i, r in enumerate(rows):
            if r.h == h and r.beta == star:
                rows[i] = replace(r, beta_star_flag=True)
    return ScanResult(rows, stars, _extrapolate_star(stars, d))


def _extrapolate_star(stars: dict, d: int) -> float:
    """Linear extrapolation in h^(1/d) through the two smallest h with an estimate."""
    pts = sorted((h, b) for h, b in stars.items() if not math.isnan(b))
    if not pts:
        return math.nan
    if len(pts) == 1:
        return pts[0][1]
    (h0, b0), (h1, b1) = pts[0], pts[1]
    s0, s1 = h0 ** (1 / d), h1 ** (1 / d)
    return b0 - s0 * (b1 - b0) / (s1 - s0)


def critical_beta(d: int, omega: float) -> float:
    """Thermodynamic critical inverse temperature for the fixed scaling: zeta(d)^(1/d) / omega."""
    if d == 1:
        return math.inf
    return float(special.zeta(d)) ** (1 / d) / omega


# -- generating functional of the trapped gas --------------------------------------


@dataclass(frozen=True)
class GibbsComparison:
    eta_norms: np.ndarray
    formula: np.ndarray
    oracle: np.ndarray
    constants: np.ndarray
    constant_mean: float
    constant_std: float
    predicted_constant: float
    factorization_defect: float


def gibbs_genfun_check(energies: Sequence[float], beta: float, mu: float, h: float,
                       etas, N: int = 128) -> GibbsComparison:
    """Closed-form Gibbs functional vs the truncated Fock thermal state, mode by mode.

    The agreement constant is log(oracle) / log(formula) per eta; it is constant
    in eta when the two differ only by a convention.
    """
    k = np.asarray(energies, dtype=float)
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    one = PhaseSpace(1)
    formula, oracle_vals, consts = [], [], []
    for kj in k:
        s = gf.GibbsPaper(one, [kj], gf.Schedule.const(beta), gf.Schedule.const(mu))
        o = FockOracle(1, h, N)
        rho = o.state_density({"kind": "thermal", "k": kj, "beta": beta, "mu": mu})
        fv = s.eval(h, etas).real
        ov = np.array([o.expect_weyl(rho, e).real for e in etas])
        formula.append(fv)
        oracle_vals.append(ov)
        nz = np.linalg.norm(etas, axis=1) > 0
        consts.append(np.log(ov[nz]) / np.log(fv[nz]))
    consts = np.concatenate(consts)
    # multi-mode closed form must factorize over modes
    multi = gf.GibbsPaper(PhaseSpace(len(k)), k, gf.Schedule.const(beta), gf.Schedule.const(mu))
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(8, 2 * len(k)))
    prod = np.ones(8, dtype=complex)
    for j, kj in enumerate(k):
        s = gf.GibbsPaper(one, [kj], gf.Schedule.const(beta), gf.Schedule.const(mu))
        prod *= s.eval(h, xs[:, 2 * j : 2 * j + 2])
    fact = float(np.max(np.abs(multi.eval(h, xs) - prod)))
    t = beta * (k[0] - mu)
    predicted = (1 + 2 * float(gf.n_bar(t * h))) / float(gf.n_bar(t))
    return GibbsComparison(
        np.linalg.norm(etas, axis=1), np.array(formula), np.array(oracle_vals), consts,
        float(np.mean(consts)), float(np.std(consts)), predicted, fact,
    )

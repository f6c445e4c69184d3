"""The h -> 0 engine: limits of generating functionals and their diagnostics.

Pointwise limits are extracted by Richardson extrapolation along a geometric
h schedule and then identified with a catalog measure by least squares.
Quantized-observable checks go through the Fock oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from . import cylmeasure as cm
from . import genfun as gf
from .conventions import VACUUM_INFLATION
from .fockrep import Density, FockOracle, QuadratureSpec, _quadrature_terms
from .symbols import CylFunction, PhaseFunction, radial_cutoff, radial_cutoff_support
from .symplectic import LinearMap, PhaseSpace


def default_schedule(k_max: int = 20) -> np.ndarray:
    return 2.0 ** -np.arange(1, k_max + 1)


def _check_schedule(hs) -> np.ndarray:
    hs = np.asarray(hs if hs is not None else default_schedule(), dtype=float)
    if hs.ndim != 1 or len(hs) < 3:
        raise ValueError("an h schedule needs at least three values")
    if np.any(np.diff(hs) >= 0) or hs[0] > 1 or hs[-1] <= 0:
        raise ValueError("h schedule must decrease strictly inside (0, 1]")
    return hs


def richardson(hs, values) -> np.ndarray:
    """Value at h = 0 of the quadratic through the last three (h, value) pairs.

    ``values`` has the schedule on axis -1.
    """
    h = np.asarray(hs, dtype=float)[-3:]
    v = np.asarray(values)[..., -3:]
    # Lagrange basis polynomials evaluated at 0
    l0 = h[1] * h[2] / ((h[0] - h[1]) * (h[0] - h[2]))
    l1 = h[0] * h[2] / ((h[1] - h[0]) * (h[1] - h[2]))
    l2 = h[0] * h[1] / ((h[2] - h[0]) * (h[2] - h[1]))
    return l0 * v[..., 0] + l1 * v[..., 1] + l2 * v[..., 2]


def tabulate(s: gf.StateFamily, points, hs) -> np.ndarray:
    pts = np.atleast_2d(s.space.check(points))
    return np.stack([s.eval(h, pts) for h in hs], axis=-1)


def numeric_limit(s: gf.StateFamily, points, hs=None) -> np.ndarray:
    hs = _check_schedule(hs)
    return richardson(hs, tabulate(s, points, hs))


# -- catalog fitting -------------------------------------------------------------


@dataclass(frozen=True)
class _Component:
    kind: str  # "dirac" or "gauss"


def _n_params(kind: str, dim: int) -> int:
    return 1 + dim + (dim * (dim + 1) // 2 if kind == "gauss" else 0)


def _unpack(kinds, dim, theta):
    comps, i = [], 0
    tri = np.tril_indices(dim)
    for kind in kinds:
        w = theta[i]
        p = theta[i + 1 : i + 1 + dim]
        i += 1 + dim
        if kind == "gauss":
            low = np.zeros((dim, dim))
            n = dim * (dim + 1) // 2
            low[tri] = theta[i : i + n]
            i += n
            comps.append((w, p, low @ low.T))
        else:
            comps.append((w, p, None))
    return comps


def _pack(comps) -> np.ndarray:
    out = []
    for w, p, q in comps:
        out += [w, *p]
        if q is not None:
            vals, vecs = np.linalg.eigh(0.5 * (q + q.T))
            root = vecs * np.sqrt(np.clip(vals, 0, None))
            # lower-triangular factor of the same Gram matrix via QR of root^T
            r = np.linalg.qr(root.T, mode="r")
            low = r.T * np.sign(np.diag(r) + (np.diag(r) == 0))
            out += list(low[np.tril_indices(len(p))])
    return np.array(out, dtype=float)


def _char_of(comps, x) -> np.ndarray:
    total = np.zeros(x.shape[:-1], dtype=complex)
    for w, p, q in comps:
        phase = 1j * (x @ p)
        if q is not None:
            phase = phase - 0.5 * np.einsum("...i,ij,...j->...", x, q, x)
        total = total + w * np.exp(phase)
    return total


def _measure_of(space: PhaseSpace, comps) -> cm.CylMeasure:
    items, weights = [], []
    for w, p, q in comps:
        items.append(cm.Dirac(space, p) if q is None else cm.Gaussian(space, p, q))
        weights.append(max(float(w), 0.0))
    if len(items) == 1:
        return items[0] if abs(weights[0] - 1.0) < 1e-15 else cm.Scale(weights[0], items[0])
    return cm.Mixture(tuple(weights), tuple(items))


def _components_of(measure: cm.CylMeasure):
    out = []
    for w, p, q in measure.components():
        out.append((w, p, None if not np.any(q) else q))
    return out


@dataclass(frozen=True)
class FitResult:
    measure: cm.CylMeasure
    kind: str
    residual: float
    parameters: list


def fit_catalog(space: PhaseSpace, points, values, kinds: Sequence[str] | None = None,
                start=None) -> FitResult:
    """Least-squares identification of a Dirac/Gaussian mixture from char values."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=complex)
    if start is not None:
        comps0 = start if isinstance(start, list) else _components_of(start)
    else:
        comps0 = _initial_guess(space, pts, vals, kinds)
    kinds = ["dirac" if q is None else "gauss" for _, _, q in comps0]
    theta0 = _pack(comps0)

    def resid(theta):
        r = _char_of(_unpack(kinds, space.dim, theta), pts) - vals
        return np.concatenate([r.real, r.imag])

    sol = optimize.least_squares(resid, theta0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    best = sol.x if np.max(np.abs(resid(sol.x))) <= np.max(np.abs(resid(theta0))) else theta0
    comps = _unpack(kinds, space.dim, best)
    residual = float(np.max(np.abs(_char_of(comps, pts) - vals)))
    kind = kinds[0] if len(kinds) == 1 else "mixture"
    params = [{"weight": float(w), "mean": p.tolist(), "cov": None if q is None else q.tolist()}
              for w, p, q in comps]
    return FitResult(_measure_of(space, comps), kind, residual, params)


def _initial_guess(space, pts, vals, kinds):
    """Single Dirac or Gaussian read off log-char values near the origin."""
    dim = space.dim
    kind = (kinds or ["dirac"])[0]
    if kinds and len(kinds) > 1:
        raise ValueError("multi-component fits need a starting measure")
    origin = np.all(pts == 0, axis=1)
    w = float(np.real(vals[origin][0])) if origin.any() else float(np.abs(vals).max())
    w = max(w, 1e-300)
    # linear fit of log(char / w) = i p.x - x^T Q x / 2 over points with |char| not tiny
    ok = np.abs(vals) > 1e-8 * w
    logs = np.log(vals[ok] / w)
    x = pts[ok]
    # unwrap phases only approximately: use principal branch, fine for small |x|
    p, *_ = np.linalg.lstsq(x, logs.imag, rcond=None)
    if kind == "dirac":
        return [(w, p, None)]
    tri = np.triu_indices(dim)
    design = np.stack([x[:, i] * x[:, j] * (1 if i == j else 2) for i, j in zip(*tri)], axis=1)
    coef, *_ = np.linalg.lstsq(design, -2 * logs.real, rcond=None)
    q = np.zeros((dim, dim))
    q[tri] = coef
    q = q + np.triu(q, 1).T
    vals_q, vecs = np.linalg.eigh(q)
    q = (vecs * np.clip(vals_q, 1e-12, None)) @ vecs.T
    return [(w, p, q)]


def auto_fit(space: PhaseSpace, points, values, tol: float) -> FitResult:
    """Try a Dirac, then a Gaussian; keep the first that fits within tol, else the best."""
    best = None
    for kinds in (["dirac"], ["gauss"]):
        try:
            res = fit_catalog(space, points, values, kinds)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if res.residual <= tol:
            return res
        if best is None or res.residual < best.residual:
            best = res
    if best is None:
        raise RuntimeError("no catalog fit could be started")
    return best


# -- limit reports -------------------------------------------------------------


@dataclass(frozen=True)
class LimitReport:
    test_points: np.ndarray
    h_schedule: np.ndarray
    values: np.ndarray
    limit_values: np.ndarray
    cauchy_defect: np.ndarray
    richardson_defect: np.ndarray
    converged: np.ndarray
    limit_candidate: cm.CylMeasure | None
    fit: FitResult | None
    mass_limit: float
    mass_defect: float

    @property
    def fit_residual(self) -> float:
        return math.inf if self.fit is None else self.fit.residual

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def limit_char(s: gf.StateFamily, points, h_schedule=None, tol: float = 1e-8,
               candidate: cm.CylMeasure | None = None, fit: bool = True,
               fit_tol: float = 1e-6) -> LimitReport:
    hs = _check_schedule(h_schedule)
    pts = np.atleast_2d(s.space.check(points))
    values = tabulate(s, pts, hs)
    lim = richardson(hs, values)
    cauchy = np.abs(values[:, -1] - values[:, -2])
    prev = richardson(hs[:-1], values[:, :-1])
    rdef = np.abs(lim - prev)
    converged = rdef <= tol
    zero = np.zeros((1, s.space.dim))
    mass_lim = float(np.real(richardson(hs, tabulate(s, zero, hs))[0]))

    result = None
    if fit:
        try:
            if candidate is not None:
                result = fit_catalog(s.space, pts, lim, start=candidate)
            else:
                result = auto_fit(s.space, pts, lim, fit_tol)
        except (RuntimeError, ValueError, np.linalg.LinAlgError, cm.NotAnalyticError):
            result = None
    target = candidate if candidate is not None else (result.measure if result else None)
    mass_defect = abs(mass_lim - target.mass) if target is not None else math.nan
    return LimitReport(pts, hs, values, lim, cauchy, rdef, converged, candidate, result,
                       mass_lim, mass_defect)


@dataclass(frozen=True)
class MassReport:
    extrapolated: float
    target: float
    defect: float
    passed: bool


def mass_check(s: gf.StateFamily, measure: cm.CylMeasure, h_schedule=None,
               tol: float = 1e-10) -> MassReport:
    hs = _check_schedule(h_schedule)
    masses = np.array([s.mass(h) for h in hs])
    ext = float(richardson(hs, masses))
    target = float(np.real(measure.mass))
    defect = abs(ext - target)
    return MassReport(ext, target, defect, defect <= tol)


# -- oracle counterparts --------------------------------------------------------


def oracle_density(s: gf.StateFamily, oracle: FockOracle) -> Density:
    """Density matrix on the oracle whose generating functional is s at oracle.h."""
    h = oracle.h
    if s.space.modes != oracle.modes:
        raise ValueError("state and oracle have different numbers of modes")
    if isinstance(s, gf.Vacuum):
        return oracle.state_density({"kind": "vacuum"})
    if isinstance(s, gf.Coherent):
        return oracle.state_density({"kind": "coherent", "z": s.z})
    if isinstance(s, gf.GibbsPaper):
        return oracle.state_density({"kind": "thermal", "k": s.energies,
                                     "beta": s.beta(h), "mu": s.mu(h)})
    if isinstance(s, gf.Mixture):
        parts = [oracle_density(c, oracle).scaled(w) for w, c in zip(s.weights, s.items)]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out
    if isinstance(s, gf.Scale):
        return oracle_density(s.child, oracle).scaled(s.factor(h))
    if isinstance(s, gf.OracleState):
        return s._pair(h)[1]
    raise ValueError(f"{type(s).__name__} has no density-matrix counterpart")


@dataclass(frozen=True)
class PconvReport:
    h_values: np.ndarray
    expectations: np.ndarray
    target: complex
    gaps: np.ndarray
    relative_gaps: np.ndarray
    extrapolated_gap: float
    tails: np.ndarray
    envelope_ok: bool

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.gaps) < 0))


def pconv_check(s: gf.StateFamily, measure: cm.CylMeasure, f: CylFunction, h_values,
                N: int = 256, quad: QuadratureSpec = QuadratureSpec(1.6, 64)) -> PconvReport:
    """Compare Tr(rho_h Op(f)) with the integral of f against the limit measure."""
    hv = np.asarray(h_values, dtype=float)
    target = cm.integrate_cyl(measure, f).value
    exps, tails, env_ok = [], [], True
    reach = _effective_reach(f, quad)
    for h in hv:
        oracle = FockOracle(s.space.modes, float(h), N)
        rho = oracle_density(s, oracle)
        val, tail = oracle.expect_quantized(rho, f, quad)
        exps.append(val)
        tails.append(tail + rho.tail)
        env_ok &= reach <= oracle.envelope
    exps = np.array(exps)
    gaps = np.abs(exps - target)
    rel = gaps / max(abs(target), 1e-300)
    # linear extrapolation of the gap to h = 0 from the two smallest h
    order = np.argsort(hv)
    if len(hv) >= 2:
        h0, h1 = hv[order[0]], hv[order[1]]
        g0, g1 = gaps[order[0]], gaps[order[1]]
        ext = float(abs(g0 - h0 * (g1 - g0) / (h1 - h0)))
    else:
        ext = float(gaps[0])
    return PconvReport(hv, exps, complex(target), gaps, rel, ext, np.array(tails), bool(env_ok))


def _effective_reach(f: CylFunction, quad: QuadratureSpec, rel: float = 1e-12) -> float:
    """Largest |node| whose quadrature coefficient is not negligible."""
    nodes, coeffs, _ = _quadrature_terms(f, quad)
    if len(coeffs) == 0:
        return 0.0
    mags = np.abs(coeffs)
    live = mags > rel * mags.sum()
    return float(np.max(np.linalg.norm(nodes[live], axis=1), initial=0.0))


def cutoff_mass_diagnostic(s: gf.StateFamily, h_values, radii, N: int = 256,
                           points: int | None = None, reach: float = 8.0) -> np.ndarray:
    """Table [h, R, Re Tr(rho_h Op(chi_R))] with chi_R the smooth radial cutoff.

    The trapezoid grid in t periodizes the symbol in phase space; by default
    the spacing keeps the period above 4R + ``reach`` so images of the cutoff
    stay clear of the state.
    """
    if s.space.modes != 1:
        raise ValueError("the cutoff diagnostic is one-mode only")
    base = np.eye(2)
    rows = []
    for h in h_values:
        oracle = FockOracle(1, float(h), N)
        rho = oracle_density(s, oracle)
        for r in radii:
            chi = radial_cutoff(base, r)
            hw = radial_cutoff_support(r)
            n = points if points is not None else int(math.ceil(2 * hw * (4 * r + reach))) + 1
            quad = QuadratureSpec(hw, n)
            val, _ = oracle.expect_quantized(rho, chi, quad, tail_threshold=math.inf)
            rows.append((float(h), float(r), float(np.real(val))))
    return np.array(rows)


# -- converse construction -----------------------------------------------------


def construct_state_for_measure(measure: cm.CylMeasure) -> gf.StateFamily:
    """A state family whose h -> 0 limit is ``measure`` (Dirac, Gaussian or mixtures)."""
    space = measure.space
    if isinstance(measure, cm.Dirac):
        if not np.any(measure.p):
            return gf.Vacuum(space)
        z = gf.coherent_label(space, measure.p)
        assert np.allclose(gf.coherent_functional(space, z), measure.p)
        return gf.Coherent(space, z)
    if isinstance(measure, cm.Gaussian):
        return gf.QuantumGaussian(space, measure.cov, measure.mean,
                                  VACUUM_INFLATION * np.eye(space.dim))
    if isinstance(measure, cm.Mixture):
        return gf.Mixture(measure.weights, tuple(construct_state_for_measure(c) for c in measure.items))
    if isinstance(measure, cm.Scale):
        return gf.Scale(gf.Schedule.const(measure.c), construct_state_for_measure(measure.child))
    raise TypeError(f"no state construction for {type(measure).__name__}")


# -- calculus commutation ---------------------------------------------------------


@dataclass(frozen=True)
class CommutationReport:
    numeric_gap: float
    analytic_gap: float | None
    passed: bool


def _analytic_char(build, points):
    try:
        return build().char(points)
    except cm.NotAnalyticError:
        return None


def map_commutes_with_limit_check(s: gf.StateFamily, u: LinearMap,
                                  phase: gf.PhaseSchedule = gf.ZERO_PHASE,
                                  h_schedule=None, points=None, tol: float = 1e-6) -> CommutationReport:
    pulled = gf.pull_symplectic(s, u, phase)
    pts = np.atleast_2d(u.source.check(points))
    left = numeric_limit(pulled, pts, h_schedule)
    right = numeric_limit(s, u(pts), h_schedule)
    gap = float(np.max(np.abs(left - right)))
    ana = _analytic_char(lambda: cm.pushforward(s.limit_measure(), u), pts)
    agap = None if ana is None else float(np.max(np.abs(left - ana)))
    return CommutationReport(gap, agap, gap <= tol and (agap is None or agap <= tol))


def convolution_limit_check(a: gf.StateFamily, b: gf.StateFamily, h_schedule=None,
                            points=None, tol: float = 1e-6) -> CommutationReport:
    pts = np.atleast_2d(a.space.check(points))
    left = numeric_limit(gf.quantum_convolution(a, b), pts, h_schedule)
    right = numeric_limit(a, pts, h_schedule) * numeric_limit(b, pts, h_schedule)
    gap = float(np.max(np.abs(left - right)))
    ana = _analytic_char(lambda: cm.convolution(a.limit_measure(), b.limit_measure()), pts)
    agap = None if ana is None else float(np.max(np.abs(left - ana)))
    return CommutationReport(gap, agap, gap <= tol and (agap is None or agap <= tol))


# -- entanglement ------------------------------------------------------------------


@dataclass(frozen=True)
class EntanglementReport:
    h_values: np.ndarray
    residuals: np.ndarray
    slope: float
    prefactor: float
    limit_residual: float
    limit_factorizes: bool


def perturbed_product(a: gf.StateFamily, b: gf.StateFamily, perturbation: gf.StateFamily) -> gf.StateFamily:
    """a (x) b + h * perturbation."""
    return gf.Mixture((1.0, 1.0), (gf.Tensor(a, b), gf.Scale(gf.Schedule(1.0, 1.0), perturbation)))


def entanglement_destruction_demo(a: gf.StateFamily, b: gf.StateFamily,
                                  perturbation: gf.StateFamily | None, h_values,
                                  a_points, b_points, limit_tol: float = 1e-10) -> EntanglementReport:
    hv = np.asarray(h_values, dtype=float)
    state = gf.Tensor(a, b) if perturbation is None else perturbed_product(a, b, perturbation)
    res = np.array([gf.exchange_residual(state, h, a_points, b_points, a.space.modes) for h in hv])
    positive = res > 0
    if positive.sum() >= 2:
        slope, icept = np.polyfit(np.log(hv[positive]), np.log(res[positive]), 1)
        pref = float(np.exp(icept))
    else:
        slope, pref = math.nan, 0.0
    # the limit of the product part: exchange residual of the factors' limits
    limit_state = gf.Tensor(a, b)
    lim = max(gf.exchange_residual(limit_state, h, a_points, b_points, a.space.modes)
              for h in hv[-3:])
    return EntanglementReport(hv, res, float(slope), pref, float(lim), lim <= limit_tol)


def cat_state_perturbation(z: complex, w: complex, N: int = 48) -> gf.OracleState:
    """Normalized (|z, w> + |w, z>) on a two-mode oracle, rebuilt at each h."""
    space = PhaseSpace(2)

    def build(h):
        oracle = FockOracle(2, h, N)
        v1, t1 = oracle.coherent_vector([z, w])
        v2, t2 = oracle.coherent_vector([w, z])
        return oracle, oracle.pure_density(v1 + v2, tail=max(t1, t2))

    return gf.OracleState(space, build, f"cat({z}, {w})")


# -- invariance -----------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceReport:
    status: str  # "pass", "fail" or "not applicable"
    premise_defect: float
    conclusion_defect: float


def invariant_limit_check(s: gf.StateFamily, maps: Sequence[LinearMap], points,
                          h_schedule=None, tol: float = 1e-10) -> InvarianceReport:
    hs = _check_schedule(h_schedule)
    pts = np.atleast_2d(s.space.check(points))
    premise = 0.0
    for u in maps:
        for h in hs[:: max(1, len(hs) // 5)]:
            premise = max(premise, float(np.max(np.abs(s.eval(h, u(pts)) - s.eval(h, pts)))))
    if premise > tol:
        return InvarianceReport("not applicable", premise, math.nan)
    lim = numeric_limit(s, pts, hs)
    concl = 0.0
    for u in maps:
        concl = max(concl, float(np.max(np.abs(numeric_limit(s, u(pts), hs) - lim))))
        try:
            m = s.limit_measure()
            concl = max(concl, float(np.max(np.abs(m.char(u(pts)) - m.char(pts)))))
        except cm.NotAnalyticError:
            pass
    return InvarianceReport("pass" if concl <= tol else "fail", premise, concl)


# -- KMS and ground states ----------------------------------------------------------


@dataclass(frozen=True)
class KmsReport:
    lhs: complex
    rhs: complex
    residual: float


def classical_kms_check(measure: cm.CylMeasure, hamiltonian: PhaseFunction,
                        a: PhaseFunction, b: PhaseFunction, beta: float,
                        rtol: float = 1e-12) -> KmsReport:
    """|int {a, b} dM - beta int b {a, h} dM| by Gauss-Hermite on the full one-mode marginal."""
    from .symbols import poisson_bracket

    if measure.space.modes != 1:
        raise ValueError("the KMS check is one-mode only")
    marg = cm.marginal(measure, np.eye(2))
    lhs = cm.integrate_marginal(marg, lambda y: poisson_bracket(a, b, y), rtol).value
    rhs = beta * cm.integrate_marginal(
        marg, lambda y: b(y) * poisson_bracket(a, hamiltonian, y), rtol).value
    return KmsReport(lhs, rhs, abs(lhs - rhs))


@dataclass(frozen=True)
class GroundStateReport:
    energy: float
    infimum: float
    passed: bool
    dirac_at_minimizer: bool
    fit_kind: str | None


def ground_state_check(s: gf.StateFamily, hamiltonian: PhaseFunction, h_schedule=None,
                       infimum: float | None = None, points=None, tol: float = 1e-8,
                       seed: int = 0) -> GroundStateReport:
    if s.space.modes != 1:
        raise ValueError("the ground-state check is one-mode only")
    if points is None:
        rng = np.random.default_rng(seed)
        points = np.concatenate([np.zeros((1, 2)), 0.5 * rng.normal(size=(24, 2))])
    rep = limit_char(s, points, h_schedule, fit_tol=tol)
    if rep.fit is None:
        raise RuntimeError("limit measure could not be identified")
    measure = rep.fit.measure
    if infimum is None:
        starts = np.random.default_rng(seed).normal(scale=2.0, size=(8, 2))
        infimum = min(optimize.minimize(lambda y: float(hamiltonian(y)), x0).fun for x0 in starts)
    energy = float(np.real(cm.integrate_marginal(cm.marginal(measure, np.eye(2)), hamiltonian).value))
    energy /= max(float(np.real(measure.mass)), 1e-300)
    dirac = rep.fit.kind == "dirac" and abs(float(hamiltonian(np.asarray(rep.fit.parameters[0]["mean"]))) - infimum) <= tol
    return GroundStateReport(energy, float(infimum), abs(energy - infimum) <= tol, bool(dirac), rep.fit.kind)

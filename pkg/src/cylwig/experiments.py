"""Experiment pipelines behind the command line.

Each kind has a ``plan`` step (schema, dimension and schedule checks, no
numerics) and a ``run`` step producing tables and a JSON summary.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bosegas as bg
from . import config as cf
from . import conevalued as cv
from . import cylmeasure as cm
from . import genfun as gf
from . import semiclassics as sc
from .fockrep import QuadratureSpec
from .symplectic import PhaseSpace


@dataclass
class Outcome:
    passed: bool
    summary: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)


@dataclass
class Plan:
    kind: str
    run: Callable[[], Outcome]


# -- formatting and atomic output ---------------------------------------------------


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    return v


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outcome(outcome: Outcome, out_dir: Path, stem: str) -> list[Path]:
    """Render everything first, then move files into place one by one."""
    rendered = {}
    for name, (header, rows) in outcome.tables.items():
        rendered[out_dir / f"{stem}{name}.csv"] = csv_text(header, rows)
    summary = dict(outcome.summary, passed=outcome.passed)
    rendered[out_dir / f"{stem}.json"] = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    for path, text in rendered.items():
        atomic_write(path, text)
    return list(rendered)


# -- shared validation helpers ----------------------------------------------------------


def _walk(s: gf.StateFamily):
    yield s
    for c in s.children:
        yield from _walk(c)


def check_gibbs(s: gf.StateFamily, hs, path: str) -> None:
    for node in _walk(s):
        if isinstance(node, gf.GibbsPaper):
            for h in hs:
                try:
                    node.exponents(float(h))
                except ValueError:
                    raise cf.ConfigError(
                        path, f"Gibbs state requires beta_h (k - mu_h) > 0 at every h; violated at h={h:g}"
                    ) from None


def _keys(payload: dict, path: str, required=(), optional=()) -> dict:
    return cf._obj(payload, path, required, optional)


# -- kinds --------------------------------------------------------------------------------


def plan_limit(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("state",), ("points", "schedule", "candidate", "fit"))
    s = cf.state(p["state"], "payload.state")
    hs = cf.h_schedule(p.get("schedule", {"k_max": 20}), "payload.schedule")
    pts = cf.points(p.get("points", {"random": 24}), "payload.points", s.space.dim, rng)
    cand = cf.measure(p["candidate"], "payload.candidate") if "candidate" in p else None
    if cand is not None and cand.space != s.space:
        raise cf.ConfigError("payload.candidate", "candidate lives on a different space")
    check_gibbs(s, hs, "payload.state")
    fit_tol = tol.get("fit_tol", 1e-6)
    mass_tol = tol.get("mass_tol", 1e-8)
    conv_tol = tol.get("tol", 1e-8)

    def run():
        rep = sc.limit_char(s, pts, hs, conv_tol, cand, bool(p.get("fit", True)), fit_tol)
        rows = []
        for i in range(len(pts)):
            for j, h in enumerate(hs):
                rows.append((i, h, rep.values[i, j].real, rep.values[i, j].imag))
            rows.append((i, 0.0, rep.limit_values[i].real, rep.limit_values[i].imag))
        fit_ok = rep.fit is not None and rep.fit.residual <= fit_tol
        mass_ok = not math.isnan(rep.mass_defect) and rep.mass_defect <= mass_tol
        summary = {
            "kind": "limit",
            "fit": None if rep.fit is None else rep.fit.kind,
            "fit_parameters": None if rep.fit is None else rep.fit.parameters,
            "fit_residual": rep.fit_residual,
            "mass_limit": rep.mass_limit,
            "mass_defect": rep.mass_defect,
            "converged": rep.all_converged,
            "max_richardson_defect": float(rep.richardson_defect.max()),
            "points": pts,
            "checks": {"converged": rep.all_converged, "fit": fit_ok, "mass": mass_ok},
        }
        return Outcome(rep.all_converged and fit_ok and mass_ok, summary,
                       {"": (["point_id", "h", "re", "im"], rows)})

    return Plan("limit", run)


def plan_bose(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("d", "omega", "beta_min", "beta_max", "beta_steps", "h_list"),
              ("f0_threshold", "beta_scaling", "normalization"))
    d = cf._int(p["d"], "payload.d")
    if d not in (1, 2, 3):
        raise cf.ConfigError("payload.d", "dimension must be 1, 2 or 3")
    omega = cf._num(p["omega"], "payload.omega")
    bmin, bmax = cf._num(p["beta_min"], "payload.beta_min"), cf._num(p["beta_max"], "payload.beta_max")
    steps = cf._int(p["beta_steps"], "payload.beta_steps")
    if not 0 < bmin < bmax or steps < 2:
        raise cf.ConfigError("payload.beta_min", "need 0 < beta_min < beta_max and beta_steps >= 2")
    if omega <= 0:
        raise cf.ConfigError("payload.omega", "trap constant must be positive")
    hs = cf._vec(p["h_list"], "payload.h_list")
    for i, h in enumerate(hs):
        if not 0 < h < 1:
            raise cf.ConfigError(f"payload.h_list[{i}]", f"h must lie in (0, 1), got {h}")
    thr = cf._num(p.get("f0_threshold", "0.01"), "payload.f0_threshold")
    scaling = p.get("beta_scaling", "fixed")
    norm = p.get("normalization", "fraction")
    for key, val, allowed in (("beta_scaling", scaling, ("fixed", "scaled")),
                              ("normalization", norm, ("fraction", "literal"))):
        if val not in allowed:
            raise cf.ConfigError(f"payload.{key}", f"must be one of {allowed}")
    betas = np.geomspace(bmin, bmax, steps)
    res_tol = tol.get("tol", 1e-10)

    def run():
        res = bg.scan(d, omega, betas, hs, thr, scaling, norm)
        rows = [(r.d, r.omega, r.beta, r.h, r.mu_gap, r.f0, r.tail, r.beta_star_flag) for r in res.rows]
        mono = all(np.all(np.diff(res.column("f0", h)) >= -1e-6) for h in hs)
        resid = float(res.column("residual").max())
        agree = float(np.max(np.abs(res.column("f0") - res.column("f0_complement"))))
        tail = float(res.column("tail").max())
        checks = {"consistency": resid <= res_tol, "monotone": bool(mono),
                  "f0_agreement": agree <= 1e-9, "tail": tail <= bg.TAIL_LIMIT}
        summary = {"kind": "bose", "beta_star": res.beta_star, "beta_star_limit": res.beta_star_limit,
                   "critical_beta_fixed_scaling": bg.critical_beta(d, omega),
                   "max_consistency_residual": resid, "max_f0_disagreement": agree,
                   "max_tail_fraction": tail, "checks": checks}
        header = ["d", "omega", "beta", "h", "mu_gap", "f0", "tail", "beta_star_flag"]
        return Outcome(all(checks.values()), summary, {"": (header, rows)})

    return Plan("bose", run)


def plan_bochner(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", (), ("measure", "state", "h", "points", "sets", "max_points", "scale"))
    if ("measure" in p) == ("state" in p):
        raise cf.ConfigError("payload", "give exactly one of 'measure' or 'state'")
    psd_tol = tol.get("psd_tol", 1e-9)
    if "measure" in p:
        obj = cf.measure(p["measure"], "payload.measure")
        check = lambda pts: cm.bochner_pd_check(obj, pts, psd_tol)
    else:
        obj = cf.state(p["state"], "payload.state")
        if "h" not in p:
            raise cf.ConfigError("payload.h", "twisted check needs h")
        h = cf._h(p["h"], "payload.h")
        check_gibbs(obj, [h], "payload.state")
        check = lambda pts: gf.twisted_pd_check(obj, h, pts, psd_tol)
    dim = obj.space.dim
    if "points" in p:
        sets = [cf.points(p["points"], "payload.points", dim, rng)]
    else:
        n_sets = cf._int(p.get("sets", 100), "payload.sets")
        n_max = cf._int(p.get("max_points", 8), "payload.max_points")
        scale = cf._num(p.get("scale", 1), "payload.scale")
        if n_sets < 1 or n_max < 1:
            raise cf.ConfigError("payload.sets", "need at least one set of at least one point")
        sets = [scale * rng.uniform(-1, 1, size=(rng.integers(1, n_max + 1), dim)) for _ in range(n_sets)]

    def run():
        rows, ok = [], True
        for i, pts in enumerate(sets):
            r = check(pts)
            ok &= r.passed
            rows.append((i, len(pts), r.min_eigenvalue, r.max_eigenvalue, r.passed))
        summary = {"kind": "bochner", "twisted": "state" in p, "sets": len(sets),
                   "min_eigenvalue": min(r[2] for r in rows), "failures": sum(not r[4] for r in rows)}
        return Outcome(bool(ok), summary, {"": (["set_id", "n", "min_eig", "max_eig", "passed"], rows)})

    return Plan("bochner", run)


def plan_quantize(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("state", "symbol", "h_list"), ("N", "quadrature", "measure"))
    s = cf.state(p["state"], "payload.state")
    f = cf.symbol(p["symbol"], "payload.symbol", s.space.dim)
    hv = np.array([cf._h(e, f"payload.h_list[{i}]") for i, e in enumerate(p["h_list"])])
    N = cf._int(p.get("N", 256), "payload.N")
    q = cf._obj(p.get("quadrature", {}), "payload.quadrature", optional=("half_width", "points"))
    quad = QuadratureSpec(cf._num(q.get("half_width", "1.6"), "payload.quadrature.half_width"),
                          cf._int(q.get("points", 64), "payload.quadrature.points"))
    check_gibbs(s, hv, "payload.state")
    if s.space.modes == 2 and N > 64:
        raise cf.ConfigError("payload.N", "two-mode oracle is capped at N <= 64")
    if "measure" in p:
        m = cf.measure(p["measure"], "payload.measure")
    else:
        try:
            m = s.limit_measure()
        except cm.NotAnalyticError as exc:
            raise cf.ConfigError("payload.measure", f"state has no closed-form limit: {exc}") from None
    rel_tol = tol.get("tol", 0.02)

    def run():
        rep = sc.pconv_check(s, m, f, hv, N, quad)
        rows = [(h, e.real, e.imag, rep.target.real, rep.target.imag, g, rg, t)
                for h, e, g, rg, t in zip(hv, rep.expectations, rep.gaps, rep.relative_gaps, rep.tails)]
        order = np.argsort(-hv)
        mono = bool(np.all(np.diff(rep.gaps[order]) < 0))
        final = float(rep.relative_gaps[np.argmin(hv)])
        summary = {"kind": "quantize-demo", "target": rep.target, "relative_gaps": rep.relative_gaps,
                   "extrapolated_gap": rep.extrapolated_gap, "monotone": mono,
                   "envelope_ok": rep.envelope_ok, "checks": {"monotone": mono, "final_gap": final <= rel_tol}}
        header = ["h", "re", "im", "target_re", "target_im", "gap", "rel_gap", "tail"]
        return Outcome(mono and final <= rel_tol, summary, {"": (header, rows)})

    return Plan("quantize-demo", run)


def plan_convolve(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("a", "b"), ("points", "states", "schedule"))
    a = cf.measure(p["a"], "payload.a")
    b = cf.measure(p["b"], "payload.b")
    if a.space != b.space:
        raise cf.ConfigError("payload.b", "convolution needs measures on the same space")
    conv = cm.convolution(a, b)
    pts = cf.points(p.get("points", {"random": 24}), "payload.points", a.space.dim, rng)
    states = None
    if "states" in p:
        if not isinstance(p["states"], list) or len(p["states"]) != 2:
            raise cf.ConfigError("payload.states", "expected two states")
        states = [cf.state(v, f"payload.states[{i}]") for i, v in enumerate(p["states"])]
        if states[0].space != a.space or states[1].space != a.space:
            raise cf.ConfigError("payload.states", "states must live on the measures' space")
    hs = cf.h_schedule(p.get("schedule", {"k_max": 20}), "payload.schedule")
    if states is not None:
        for i, s in enumerate(states):
            check_gibbs(s, hs, f"payload.states[{i}]")
    t = tol.get("tol", 1e-6)

    def run():
        vals = conv.char(pts)
        dim = a.space.dim
        header = [f"x{i}" for i in range(dim)] + ["re", "im"]
        rows = [tuple(x) + (v.real, v.imag) for x, v in zip(pts, vals)]
        checks = {}
        summary = {"kind": "convolve", "mass": conv.mass}
        if not conv.is_signed:
            checks["bochner"] = bool(cm.bochner_pd_check(conv, pts).passed)
        if states is not None:
            lim = sc.numeric_limit(gf.quantum_convolution(*states), pts, hs)
            gap = float(np.max(np.abs(lim - vals)))
            rep = sc.convolution_limit_check(states[0], states[1], hs, pts, t)
            summary.update(limit_gap_to_measure=gap, commutation_gap=rep.numeric_gap)
            checks["limit_matches_measure"] = gap <= t
            checks["commutation"] = rep.passed
        summary["checks"] = checks
        return Outcome(all(checks.values()), summary, {"": (header, rows)})

    return Plan("convolve", run)


def plan_kms(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("measure", "hamiltonian", "a", "b", "beta"))
    m = cf.measure(p["measure"], "payload.measure")
    if m.space.modes != 1:
        raise cf.ConfigError("payload.measure", "the KMS check is one-mode only")
    ham = cf.phase_function(p["hamiltonian"], "payload.hamiltonian")
    fa = cf.phase_function(p["a"], "payload.a")
    fb = cf.phase_function(p["b"], "payload.b")
    beta = cf._num(p["beta"], "payload.beta")
    if beta <= 0:
        raise cf.ConfigError("payload.beta", "inverse temperature must be positive")
    t = tol.get("tol", 1e-8)

    def run():
        r = sc.classical_kms_check(m, ham, fa, fb, beta)
        summary = {"kind": "kms", "lhs": r.lhs, "rhs": r.rhs, "residual": r.residual}
        return Outcome(r.residual <= t, summary)

    return Plan("kms", run)


def plan_cp(p: dict, tol: dict, rng) -> Plan:
    p = _keys(p, "payload", ("terms", "points"))
    if not isinstance(p["terms"], list) or not p["terms"]:
        raise cf.ConfigError("payload.terms", "expected a nonempty list")
    terms = []
    for i, t in enumerate(p["terms"]):
        path = f"payload.terms[{i}]"
        d = cf._obj(t, path, ("measure", "weight"))
        w = cf._cmat(d["weight"], f"{path}.weight")
        if w.shape[0] != w.shape[1] or not np.allclose(w, w.conj().T):
            raise cf.ConfigError(f"{path}.weight", "weight must be a Hermitian square matrix")
        terms.append((cf.measure(d["measure"], f"{path}.measure"), w))
    try:
        mm = cv.MatrixCylMeasure(tuple(terms), strict=False)
    except ValueError as exc:
        raise cf.ConfigError("payload.terms", str(exc)) from None
    pts = cf.points(p["points"], "payload.points", mm.space.dim, rng)
    psd_tol = tol.get("psd_tol", 1e-9)

    def run():
        r = cv.cp_check(mm, pts, psd_tol)
        summary = {"kind": "cp-check", "k": mm.k, "n_points": len(pts),
                   "min_eigenvalue": r.min_eigenvalue, "max_eigenvalue": r.max_eigenvalue,
                   "hermitian_defect": r.hermitian_defect, "diagnostic": r.diagnostic}
        return Outcome(r.passed, summary)

    return Plan("cp-check", run)


PLANNERS = {
    "limit": plan_limit,
    "bose": plan_bose,
    "bochner": plan_bochner,
    "quantize-demo": plan_quantize,
    "convolve": plan_convolve,
    "kms": plan_kms,
    "cp-check": plan_cp,
}


def plan(cfg: cf.ExperimentConfig, seed: int) -> Plan:
    rng = np.random.default_rng(seed)
    return PLANNERS[cfg.kind](cfg.payload, cfg.tolerances, rng)

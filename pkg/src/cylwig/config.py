"""Strict JSON experiment configs: parsing, schema checks and object builders.

Numbers may be JSON numbers or decimal strings; both are read through
``decimal.Decimal`` so the text is parsed exactly before rounding to float.
Every error names the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any

import numpy as np

from . import cylmeasure as cm
from . import genfun as gf
from .symbols import CylFunction, PhaseFunction, gaussian_bump, harmonic, phase_bump, polynomial
from .symplectic import LinearMap, PhaseSpace

SUPPORTED_VERSIONS = ("1",)
KINDS = ("limit", "bose", "bochner", "quantize-demo", "convolve", "kms", "cp-check")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- primitive readers ---------------------------------------------------------------


def _num(v: Any, path: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(v, (int, Decimal)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(Decimal(v))
        except InvalidOperation:
            raise ConfigError(path, f"not a decimal number: {v!r}") from None
    raise ConfigError(path, f"expected a number, got {type(v).__name__}")


def _int(v: Any, path: str) -> int:
    x = _num(v, path)
    if x != int(x):
        raise ConfigError(path, "expected an integer")
    return int(x)


def _vec(v: Any, path: str, length: int | None = None) -> np.ndarray:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of numbers")
    out = np.array([_num(e, f"{path}[{i}]") for i, e in enumerate(v)])
    if length is not None and out.shape != (length,):
        raise ConfigError(path, f"expected {length} entries, got {len(v)}")
    return out


def _mat(v: Any, path: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list of rows")
    out = np.array([_vec(r, f"{path}[{i}]", cols) for i, r in enumerate(v)])
    if out.ndim != 2:
        raise ConfigError(path, "rows have different lengths")
    if rows is not None and out.shape[0] != rows:
        raise ConfigError(path, f"expected {rows} rows, got {out.shape[0]}")
    return out


def _complex(v: Any, path: str) -> complex:
    if isinstance(v, list):
        if len(v) != 2:
            raise ConfigError(path, "complex numbers are [re, im] pairs")
        return complex(_num(v[0], path + "[0]"), _num(v[1], path + "[1]"))
    return complex(_num(v, path))


def _cmat(v: Any, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list of rows")
    rows = []
    for i, r in enumerate(v):
        if not isinstance(r, list):
            raise ConfigError(f"{path}[{i}]", "expected a row")
        rows.append([_complex(e, f"{path}[{i}][{j}]") for j, e in enumerate(r)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(path, "rows have different lengths")
    return np.array(rows, dtype=complex)


def _obj(v: Any, path: str, required: tuple = (), optional: tuple = ()) -> dict:
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object")
    allowed = set(required) | set(optional)
    for k in v:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in v:
            raise ConfigError(f"{path}.{k}", "missing required field")
    return v


def _h(v: Any, path: str) -> float:
    h = _num(v, path)
    if not 0 < h <= 1:
        raise ConfigError(path, f"h must lie in (0, 1], got {h}")
    return h


def _space_of(n: int, path: str) -> PhaseSpace:
    if n % 2:
        raise ConfigError(path, "vectors must have even length (q, p pairs)")
    return PhaseSpace(n // 2)


# -- schedules ---------------------------------------------------------------------


def schedule(v: Any, path: str) -> gf.Schedule:
    if isinstance(v, (int, str, Decimal)) and not isinstance(v, bool):
        return gf.Schedule.const(_num(v, path))
    d = _obj(v, path, optional=("c", "a", "b", "preset", "value", "beta", "d"))
    preset = d.get("preset")
    if preset is None:
        if "c" not in d:
            raise ConfigError(f"{path}.c", "missing required field")
        return gf.Schedule(_num(d["c"], f"{path}.c"), _num(d.get("a", 0), f"{path}.a"),
                           _num(d.get("b", 0), f"{path}.b"))
    if preset == "const":
        return gf.Schedule.const(_num(d.get("value"), f"{path}.value"))
    if preset == "beta_thermo":
        dim = _int(d.get("d"), f"{path}.d")
        if dim < 1:
            raise ConfigError(f"{path}.d", "dimension must be positive")
        return gf.Schedule.beta_thermo(_num(d.get("beta"), f"{path}.beta"), dim)
    raise ConfigError(f"{path}.preset", f"unknown preset {preset!r}")


def phase_schedule(v: Any, path: str, dim: int) -> gf.PhaseSchedule:
    d = _obj(v, path, required=("scale",), optional=("quad", "linear"))
    quad = _mat(d["quad"], f"{path}.quad", dim, dim) if "quad" in d else None
    lin = _vec(d["linear"], f"{path}.linear", dim) if "linear" in d else None
    return gf.PhaseSchedule(schedule(d["scale"], f"{path}.scale"), quad, lin)


# -- state trees -----------------------------------------------------------------------


def _children(d: dict, path: str, n: int | None = None, builder=None) -> list:
    kids = d["children"]
    if not isinstance(kids, list) or not kids or (n is not None and len(kids) != n):
        raise ConfigError(f"{path}.children", f"expected {n or 'a nonempty list of'} children")
    return [builder(c, f"{path}.children[{i}]") for i, c in enumerate(kids)]


def state(v: Any, path: str = "state") -> gf.StateFamily:
    if not isinstance(v, dict) or "node" not in v:
        raise ConfigError(path, "state nodes are objects with a 'node' tag")
    node = v["node"]
    try:
        return _state_node(node, v, path)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _state_node(node: str, v: dict, path: str) -> gf.StateFamily:
    if node == "vacuum":
        d = _obj(v, path, ("node", "modes"))
        return gf.Vacuum(PhaseSpace(_int(d["modes"], f"{path}.modes")))
    if node == "coherent":
        d = _obj(v, path, ("node", "z"))
        if not isinstance(d["z"], list) or not d["z"]:
            raise ConfigError(f"{path}.z", "expected a list of [re, im] pairs")
        z = [_complex(e, f"{path}.z[{i}]") for i, e in enumerate(d["z"])]
        return gf.Coherent(PhaseSpace(len(z)), z)
    if node == "quantum_gaussian":
        d = _obj(v, path, ("node", "cov"), ("ell", "cov_h"))
        cov = _mat(d["cov"], f"{path}.cov")
        space = _space_of(cov.shape[0], f"{path}.cov")
        ell = _vec(d["ell"], f"{path}.ell", space.dim) if "ell" in d else None
        cov_h = _mat(d["cov_h"], f"{path}.cov_h", space.dim, space.dim) if "cov_h" in d else None
        return gf.QuantumGaussian(space, cov, ell, cov_h)
    if node == "gibbs":
        d = _obj(v, path, ("node", "energies", "beta"), ("mu",))
        k = _vec(d["energies"], f"{path}.energies")
        mu = schedule(d["mu"], f"{path}.mu") if "mu" in d else gf.Schedule.const(0.0)
        return gf.GibbsPaper(PhaseSpace(len(k)), k, schedule(d["beta"], f"{path}.beta"), mu)
    if node == "mixture":
        d = _obj(v, path, ("node", "weights", "children"))
        kids = _children(d, path, builder=state)
        w = _vec(d["weights"], f"{path}.weights", len(kids))
        return gf.Mixture(tuple(w), tuple(kids))
    if node in ("convolution", "tensor"):
        d = _obj(v, path, ("node", "children"))
        a, b = _children(d, path, 2, state)
        return gf.Convolution(a, b) if node == "convolution" else gf.Tensor(a, b)
    if node == "translate":
        d = _obj(v, path, ("node", "xi", "child"))
        child = state(d["child"], f"{path}.child")
        return gf.Translate(_vec(d["xi"], f"{path}.xi", child.space.dim), child)
    if node == "pullback":
        d = _obj(v, path, ("node", "matrix", "child"), ("phase",))
        child = state(d["child"], f"{path}.child")
        m = _mat(d["matrix"], f"{path}.matrix", child.space.dim)
        source = _space_of(m.shape[1], f"{path}.matrix")
        phase = phase_schedule(d["phase"], f"{path}.phase", source.dim) if "phase" in d else gf.ZERO_PHASE
        return gf.PullBack(LinearMap(source, child.space, m), child, phase)
    if node == "scale":
        d = _obj(v, path, ("node", "factor", "child"))
        return gf.Scale(schedule(d["factor"], f"{path}.factor"), state(d["child"], f"{path}.child"))
    raise ConfigError(f"{path}.node", f"unknown state node {node!r}")


# -- measure trees ----------------------------------------------------------------------


def measure(v: Any, path: str = "measure") -> cm.CylMeasure:
    if not isinstance(v, dict) or "node" not in v:
        raise ConfigError(path, "measure nodes are objects with a 'node' tag")
    try:
        return _measure_node(v["node"], v, path)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _measure_node(node: str, v: dict, path: str) -> cm.CylMeasure:
    if node == "dirac":
        d = _obj(v, path, ("node", "p"))
        p = _vec(d["p"], f"{path}.p")
        return cm.Dirac(_space_of(len(p), f"{path}.p"), p)
    if node == "gaussian":
        d = _obj(v, path, ("node", "cov"), ("mean",))
        cov = _mat(d["cov"], f"{path}.cov")
        space = _space_of(cov.shape[0], f"{path}.cov")
        mean = _vec(d["mean"], f"{path}.mean", space.dim) if "mean" in d else np.zeros(space.dim)
        return cm.Gaussian(space, mean, cov)
    if node == "mixture":
        d = _obj(v, path, ("node", "weights", "children"))
        kids = _children(d, path, builder=measure)
        return cm.Mixture(tuple(_vec(d["weights"], f"{path}.weights", len(kids))), tuple(kids))
    if node in ("product", "convolution"):
        d = _obj(v, path, ("node", "children"))
        a, b = _children(d, path, 2, measure)
        return cm.Product(a, b) if node == "product" else cm.Convolution(a, b)
    if node == "pushforward":
        d = _obj(v, path, ("node", "matrix", "child"))
        child = measure(d["child"], f"{path}.child")
        m = _mat(d["matrix"], f"{path}.matrix", child.space.dim)
        return cm.Pushforward(LinearMap(_space_of(m.shape[1], f"{path}.matrix"), child.space, m), child)
    if node == "modulate":
        d = _obj(v, path, ("node", "xi", "child"))
        child = measure(d["child"], f"{path}.child")
        return cm.Modulate(_vec(d["xi"], f"{path}.xi", child.space.dim), child)
    if node == "scale":
        d = _obj(v, path, ("node", "c", "child"))
        return cm.Scale(_num(d["c"], f"{path}.c"), measure(d["child"], f"{path}.child"))
    raise ConfigError(f"{path}.node", f"unknown measure node {node!r}")


# -- symbols and phase-space functions ------------------------------------------------------


def symbol(v: Any, path: str, dim: int) -> CylFunction:
    d = _obj(v, path, ("kind", "center"), ("width", "amplitude", "base"))
    if d["kind"] != "gaussian_bump":
        raise ConfigError(f"{path}.kind", f"unknown symbol kind {d['kind']!r}")
    base = _mat(d["base"], f"{path}.base", cols=dim) if "base" in d else np.eye(dim)
    center = _vec(d["center"], f"{path}.center", base.shape[0])
    return gaussian_bump(base, center, _num(d.get("width", 1), f"{path}.width"),
                         _num(d.get("amplitude", 1), f"{path}.amplitude"))


def phase_function(v: Any, path: str) -> PhaseFunction:
    d = _obj(v, path, ("kind",), ("omega", "center", "coeffs", "width"))
    kind = d["kind"]
    if kind == "harmonic":
        c = _vec(d.get("center", [0, 0]), f"{path}.center", 2)
        return harmonic(_num(d.get("omega", 1), f"{path}.omega"), c)
    if kind == "polynomial":
        if "coeffs" not in d:
            raise ConfigError(f"{path}.coeffs", "missing required field")
        return polynomial(_mat(d["coeffs"], f"{path}.coeffs"))
    if kind == "bump":
        return phase_bump(_vec(d.get("center", [0, 0]), f"{path}.center", 2),
                          _num(d.get("width", 1), f"{path}.width"))
    raise ConfigError(f"{path}.kind", f"unknown function kind {kind!r}")


# -- point sets and schedules -----------------------------------------------------------------


def points(v: Any, path: str, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Explicit list, or {"random": n, "scale": s, "include_origin": bool}."""
    if isinstance(v, list):
        return _mat(v, path, cols=dim)
    d = _obj(v, path, ("random",), ("scale", "include_origin"))
    n = _int(d["random"], f"{path}.random")
    if n < 1:
        raise ConfigError(f"{path}.random", "need at least one point")
    pts = _num(d.get("scale", 1), f"{path}.scale") * rng.uniform(-1, 1, size=(n, dim))
    if d.get("include_origin", True):
        pts = np.concatenate([np.zeros((1, dim)), pts])
    return pts


def h_schedule(v: Any, path: str) -> np.ndarray:
    if isinstance(v, dict):
        d = _obj(v, path, (), ("k_max", "base"))
        base = _num(d.get("base", 2), f"{path}.base")
        k_max = _int(d.get("k_max", 20), f"{path}.k_max")
        if base <= 1 or k_max < 3:
            raise ConfigError(path, "geometric schedule needs base > 1 and k_max >= 3")
        return base ** -np.arange(1, k_max + 1, dtype=float)
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of h values or a geometric spec")
    hs = np.array([_h(e, f"{path}[{i}]") for i, e in enumerate(v)])
    if len(hs) < 3 or np.any(np.diff(hs) >= 0):
        raise ConfigError(path, "h schedule needs at least three strictly decreasing values")
    return hs


# -- top level ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    version: str
    kind: str
    payload: dict
    output: str
    tolerances: dict = field(default_factory=dict)


def loads(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    d = _obj(raw, "<root>", ("version", "kind", "payload"), ("output", "tolerances"))
    if str(d["version"]) not in SUPPORTED_VERSIONS:
        raise ConfigError("version", f"unsupported version {d['version']!r}; supported {SUPPORTED_VERSIONS}")
    if d["kind"] not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {d['kind']!r}")
    tol = _obj(d.get("tolerances", {}), "tolerances", optional=("tol", "fit_tol", "mass_tol", "psd_tol"))
    tol = {k: _num(v, f"tolerances.{k}") for k, v in tol.items()}
    out = d.get("output", d["kind"].replace("-", "_"))
    if not isinstance(out, str) or not out or "/" in out:
        raise ConfigError("output", "output must be a plain file stem")
    return ExperimentConfig(str(d["version"]), d["kind"], _obj(d["payload"], "payload",
                            optional=tuple(d["payload"]) if isinstance(d["payload"], dict) else ()),
                            out, tol)


def load(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read config: {exc}") from None
    return loads(text)

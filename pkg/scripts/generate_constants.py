"""Derive the sign and scale conventions from the Fock oracle and write constants.json."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from cylwig import conventions
from cylwig.fockrep import Density, FockOracle
from cylwig.symplectic import PhaseSpace


def coherent_factor(h: float = 0.1, N: int = 128) -> float:
    """c with <z|W(x)|z> = exp(-h|x|^2/2 + i c (Re z, Im z).x), by least squares."""
    o = FockOracle(1, h, N)
    sp = PhaseSpace(1)
    rng = np.random.default_rng(0)
    rows, rhs = [], []
    for _ in range(6):
        z = complex(*rng.uniform(-0.4, 0.4, 2))
        rho = o.state_density({"kind": "coherent", "z": [z]})
        for x in rng.uniform(-0.5, 0.5, (4, 2)):
            g = o.expect_weyl(rho, x) / np.exp(-0.5 * h * sp.norm2(x))
            rows.append(sp.from_complex([z]) @ x)
            rhs.append(np.angle(g))
    return float(np.linalg.lstsq(np.array(rows)[:, None], np.array(rhs), rcond=None)[0][0])


def twist_sign(h: float = 0.2, N: int = 96) -> int:
    """Sign s for which omega(A*A) = c* B c with B[k,j] = G(x_j - x_k) exp(s i h form(x_j, x_k))."""
    o = FockOracle(1, h, N)
    sp = PhaseSpace(1)
    rng = np.random.default_rng(1)
    v = np.zeros((N, 2), dtype=complex)
    v[:20] = rng.normal(size=(20, 2)) + 1j * rng.normal(size=(20, 2))
    rho = Density(np.array([0.7, 0.3]), v / np.linalg.norm(v, axis=0), N)
    pts = rng.uniform(-0.8, 0.8, (5, 2))
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    a = sum(cj * o.weyl_matrix(x) for cj, x in zip(c, pts))
    exact = o.expect(rho, a.conj().T @ a)
    err = {}
    for s in (-1, 1):
        b = np.array([[o.expect_weyl(rho, xj - xk) * np.exp(s * 1j * h * sp.form(xj, xk))
                       for xj in pts] for xk in pts])
        err[s] = abs(c.conj() @ b @ c - exact)
    return min(err, key=err.get)


def vacuum_inflation() -> float:
    """Smallest c with c h I + i h J positive semidefinite (one mode)."""
    j = PhaseSpace(1).form_matrix
    # eigenvalues of c I + i J are c -+ 1
    return float(max(np.linalg.eigvalsh(1j * j)))


def number_scale(h: float = 0.37, N: int = 16) -> str:
    o = FockOracle(1, h, N)
    a = o.annihilation
    n1 = o.number_vector([1])
    val = float(np.real(n1.conj() @ (a.T @ a) @ n1))
    return "h" if abs(val - h) < 1e-12 else ("1" if abs(val - 1) < 1e-12 else f"{val}")


def derive() -> dict:
    return {
        "coherent_phase_factor": round(coherent_factor(), 10),
        "twist_sign": twist_sign(),
        "vacuum_inflation": vacuum_inflation(),
        "number_scale": number_scale(),
    }


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=conventions.CONSTANTS_FILE)
    args = p.parse_args()
    data = derive()
    args.out.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(json.dumps(data, indent=2, sort_keys=True))
    if data != conventions.as_dict():
        raise SystemExit("derived constants differ from cylwig.conventions; update the module")


if __name__ == "__main__":
    main()

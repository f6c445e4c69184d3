"""Eigenvalue certification of Hermitian (block) Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PsdReport:
    min_eigenvalue: float
    max_eigenvalue: float
    hermitian_defect: float
    passed: bool
    diagnostic: str = ""

    def __bool__(self):
        return self.passed


def certify_psd(matrix, tol: float = DEFAULT_TOL) -> PsdReport:
    """Hermitize ``matrix`` and test min eig >= -tol * max(1, max eig)."""
    b = np.asarray(matrix, dtype=complex)
    herm = 0.5 * (b + b.conj().T)
    defect = float(np.max(np.abs(b - herm), initial=0.0))
    if not np.all(np.isfinite(herm)):
        return PsdReport(np.nan, np.nan, defect, False, "non-finite entries")
    try:
        eig = np.linalg.eigvalsh(herm)
    except np.linalg.LinAlgError as exc:
        return PsdReport(np.nan, np.nan, defect, False, f"eigensolver failed: {exc}")
    lo, hi = float(eig[0]), float(eig[-1])
    passed = lo >= -tol * max(1.0, hi)
    return PsdReport(lo, hi, defect, passed)

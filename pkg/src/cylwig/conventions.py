"""Sign and scale conventions fixed against the Fock oracle.

The values are regenerated by scripts/generate_constants.py, which writes
constants.json next to this file; tests assert the two agree.
"""

from __future__ import annotations

import json
from pathlib import Path

# lambda_z(x) = COHERENT_PHASE_FACTOR * (Re z, Im z).x, i.e. 2 Re<z, x>
COHERENT_PHASE_FACTOR = 2.0
# Gram matrices carry exp(TWIST_SIGN * i h form(x_j, x_k))
TWIST_SIGN = -1
# QuantumGaussian(Q + VACUUM_INFLATION * h * I) is the state attached to Gaussian(Q)
VACUUM_INFLATION = 1.0
# the oracle's number operator a*a has eigenvalues h n
NUMBER_SCALE = "h"

CONSTANTS_FILE = Path(__file__).with_name("constants.json")


def as_dict() -> dict:
    return {
        "coherent_phase_factor": COHERENT_PHASE_FACTOR,
        "twist_sign": TWIST_SIGN,
        "vacuum_inflation": VACUUM_INFLATION,
        "number_scale": NUMBER_SCALE,
    }


def load_generated() -> dict:
    return json.loads(CONSTANTS_FILE.read_text())

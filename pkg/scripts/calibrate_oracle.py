"""Sweep |x| to find where the truncated Weyl relation stops holding.

For each (N, h) the largest s with residual(s e1, s e2) <= target is located on
a grid; the ratio s / sqrt(N / h) is the envelope constant. The library uses a
value safely below the smallest ratio found.
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from cylwig.fockrep import ENVELOPE_C, FockOracle


def largest_valid(o: FockOracle, target: float, s_grid: np.ndarray) -> float:
    best = 0.0
    for s in s_grid:
        if o.weyl_relation_residual(np.array([s, 0.0]), np.array([0.0, s])) > target:
            break
        best = s
    return best


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--target", type=float, default=1e-6)
    args = p.parse_args()
    ratios = []
    print("N\th\tx_max\tratio")
    for h in (0.5, 0.3, 0.1, 0.03):
        for n in (32, 64, 128):
            o = FockOracle(1, h, n)
            scale = math.sqrt(n / h)
            xm = largest_valid(o, args.target, np.linspace(0.01, 0.4, 40) * scale)
            ratios.append(xm / scale)
            print(f"{n}\t{h}\t{xm:.4f}\t{xm / scale:.4f}")
    print(f"smallest ratio {min(ratios):.4f}; library constant {ENVELOPE_C}")


if __name__ == "__main__":
    main()

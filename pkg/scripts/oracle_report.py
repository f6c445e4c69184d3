"""Write the oracle convergence table (N, h, test-id, residual) as CSV."""

from __future__ import annotations

import argparse
from pathlib import Path

from cylwig.experiments import atomic_write, csv_text
from cylwig.fockrep import vacuum_convergence, weyl_convergence


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("oracle_report.csv"))
    p.add_argument("--N", default="32,64,128,256")
    args = p.parse_args()
    Ns = [int(n) for n in args.N.split(",")]
    rows = weyl_convergence(Ns)
    for h in (0.5, 0.1, 0.01):
        rows += vacuum_convergence(Ns, h)
    atomic_write(args.out, csv_text(["N", "h", "test_id", "residual"], rows))
    for r in rows:
        print(*r, sep="\t")


if __name__ == "__main__":
    main()

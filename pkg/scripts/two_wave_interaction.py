#!/usr/bin/env python3
"""Two solitary waves on a moving mesh, tracked through t = 150.

Runs the H1- and H2-preserving moving-mesh schemes with the configured wave
centers and writes snapshots at the times used in the standard comparison.
Note: with the default centers the faster wave starts 45 units ahead and no
overtaking occurs inside the time window; pass --swap-centers to place the
faster wave behind so the waves interact around t = 90.
"""

import argparse

import numpy as np

from bbmfem.config import RunConfig
from bbmfem.runner import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out/two_wave")
    ap.add_argument("--elements", type=int, default=1000)
    ap.add_argument("--t-end", type=float, default=150.0)
    ap.add_argument("--swap-centers", action="store_true",
                    help="start the faster wave behind the slower one")
    args = ap.parse_args()

    x_r, x_s = (105.0, 150.0) if args.swap_centers else (150.0, 105.0)
    for scheme in ("DG1", "DG2"):
        cfg = RunConfig(
            problem="two_wave", scheme=scheme, moving_mesh=True,
            c_r=2.0, c_s=1.5, x_r=x_r, x_s=x_s, L=200.0,
            M=args.elements, dt=0.1, t_end=args.t_end,
            snapshot_times=(0.0, 50.0, 75.0, 100.0, 150.0),
            output_dir=f"{args.outdir}/{scheme}MM",
        )
        res = run(cfg, quiet=False)
        ham = res.h1 if scheme == "DG1" else res.h2
        drift = np.abs((ham - ham[0]) / ham[0])
        print(f"{scheme}MM: max relative drift of the preserved integral "
              f"{drift.max():.3e}")


if __name__ == "__main__":
    main()

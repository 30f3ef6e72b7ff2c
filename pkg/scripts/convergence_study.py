#!/usr/bin/env python3
"""Temporal convergence of the two conservative steppers on a fixed mesh.

Errors are measured at t = 1 against a tiny-step fourth-order reference on
the same semidiscretization, isolating the time-integration error; the
table should show ratios near 4 per halving of dt (second order).
"""

import argparse

import numpy as np

from bbmfem.assembly import AssemblyCache
from bbmfem.basis import BasisSet, impose_function
from bbmfem.bbm import SolitonParams, exact_soliton, gradient_h2
from bbmfem.mesh import Mesh1D
from bbmfem.steppers import SolverConfig, dg1_step_fixed, dg2_step_fixed, rk4_step


def rk4_reference_h1(u0, cache, dt, steps):
    u = u0.copy()
    for _ in range(steps):
        def rhs(v):
            return -cache.AE_lu.solve(cache.skew_h1_apply(v, v))
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--elements", type=int, default=128)
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()

    params = SolitonParams(c=2.0, half_length=20.0)
    mesh = Mesh1D.uniform(args.elements, params.half_length)
    cfg = SolverConfig()
    dts = (0.1, 0.05, 0.025)

    for label, make, stepper in (
        ("H1-preserving", BasisSet.cubic_lagrange, dg1_step_fixed),
        ("H2-preserving", BasisSet.periodic_bspline, dg2_step_fixed),
    ):
        basis = make(mesh)
        cache = AssemblyCache(basis)
        u0 = impose_function(basis, lambda x: exact_soliton(x, 0.0, params))
        dt_ref = dts[-1] / 16.0
        if label.startswith("H1"):
            ref = rk4_reference_h1(u0, cache, dt_ref, int(round(args.t_end / dt_ref)))
        else:
            ref = u0.copy()
            for _ in range(int(round(args.t_end / dt_ref))):
                ref = rk4_step(ref, cache, dt_ref).u_next

        errs = []
        for dt in dts:
            u = u0.copy()
            for _ in range(int(round(args.t_end / dt))):
                u = stepper(u, cache, dt, cfg).u_next
            diff = u - ref
            errs.append(float(np.sqrt(diff @ (cache.A @ diff))))
        print(f"{label}: errors {['%.3e' % e for e in errs]}")
        for a, b in zip(errs[:-1], errs[1:]):
            print(f"  ratio per halving: {a / b:.2f}")


if __name__ == "__main__":
    main()

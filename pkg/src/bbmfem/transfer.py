"""Field transfer between meshes: plain interpolation and the conservative
(integral-preserving) constrained minimization with a Lagrange multiplier.

The conservative transfer minimizes the continuous L2 distance between the
old and new discrete fields subject to equality of the chosen Hamiltonian.
Its stationarity system couples the new-mesh mass matrix, the cross-mass
matrix against the old basis, and the Hamiltonian gradient.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssemblyCache, cross_mass_sparse
from .basis import BasisKind, BasisSet, eval_field_many, nodal_points
from .bbm import gradient_h2, hamiltonian_h1, hamiltonian_h2
from .errors import DimensionMismatchError, FactorizationError, NewtonFailureError
from .steppers import HAMILTONIANS, SolverConfig

_MAX_MULTIPLIER_ITERS = 40


def interp_transfer(
    u_old: np.ndarray,
    basis_old: BasisSet,
    basis_new: BasisSet,
    cache_new: AssemblyCache | None = None,
) -> np.ndarray:
    """Re-express the old field on the new basis without any conservation
    guarantee: nodal evaluation for Lagrange dofs, L2 projection for
    B-spline dofs.  Identical meshes return the coefficients unchanged."""
    u_old = np.asarray(u_old, dtype=float)
    if u_old.shape != (basis_old.dof_count,):
        raise DimensionMismatchError("coefficients do not match the old basis")
    if basis_old.kind is not basis_new.kind:
        raise DimensionMismatchError("transfer requires a common basis kind")
    if basis_old.mesh.half_length != basis_new.mesh.half_length:
        raise DimensionMismatchError("transfer requires a common domain")
    if np.array_equal(basis_old.mesh.nodes, basis_new.mesh.nodes):
        return u_old.copy()

    if basis_new.kind is BasisKind.CUBIC_LAGRANGE:
        return eval_field_many(basis_old, u_old, nodal_points(basis_new))

    rhs = cross_mass_sparse(basis_old, basis_new) @ u_old
    if cache_new is not None:
        lu = spla.splu(cache_new.A.tocsc())
    else:
        cache_new = AssemblyCache(basis_new)
        lu = spla.splu(cache_new.A.tocsc())
    return lu.solve(rhs)


def _conservative_h1(u_old, cache_old, cache_new, cross, cfg):
    """Scalar safeguarded Newton on the multiplier; the stationarity system is
    linear in the new coefficients for the quadratic Hamiltonian."""
    i_old = hamiltonian_h1(u_old, cache_old.A, cache_old.E)
    tol = cfg.newton_tol * max(1.0, abs(i_old))
    rhs = cross @ u_old
    a_new = cache_new.A.tocsc()
    ae_new = cache_new.AE.tocsc()

    def solve_for(lam):
        try:
            lu = spla.splu(a_new - lam * ae_new)
        except RuntimeError as exc:
            raise FactorizationError(str(exc)) from exc
        u_hat = lu.solve(rhs)
        defect = 0.5 * float(u_hat @ (ae_new @ u_hat)) - i_old
        du_dlam = lu.solve(ae_new @ u_hat)
        slope = float(u_hat @ (ae_new @ du_dlam))
        return u_hat, defect, slope

    lam = 0.0
    lo = hi = None  # bracket [lo, hi] with defect(lo) < 0 < defect(hi)
    for _ in range(_MAX_MULTIPLIER_ITERS):
        u_hat, defect, slope = solve_for(lam)
        if abs(defect) <= tol:
            return u_hat, lam
        if defect < 0.0:
            lo = lam if lo is None else max(lo, lam)
        else:
            hi = lam if hi is None else min(hi, lam)
        if slope > 0.0:
            step = -defect / slope
        else:
            step = np.sign(-defect) * max(abs(lam), 1e-8)
        lam_next = lam + step
        if lo is not None and hi is not None and not (lo < lam_next < hi):
            lam_next = 0.5 * (lo + hi)  # bisection safeguard
        lam = lam_next
    raise NewtonFailureError(
        f"conservative transfer stalled at defect {defect:.3e}",
        last_iterate=u_hat,
        residual_norm=abs(defect),
    )


def _conservative_h2(u_old, u_init, cache_old, cache_new, cross, cfg):
    """Full bordered Newton on (coefficients, multiplier)."""
    i_old = hamiltonian_h2(u_old, cache_old.A, cache_old.D)
    tol = cfg.newton_tol * max(1.0, abs(i_old))
    rhs = cross @ u_old
    a_new = cache_new.A

    u_hat = u_init.copy()
    lam = 0.0
    for _ in range(cfg.max_newton_iters):
        grad = gradient_h2(u_hat, a_new, cache_new.D)
        f1 = a_new @ u_hat - rhs - lam * grad
        f2 = hamiltonian_h2(u_hat, a_new, cache_new.D) - i_old
        if max(float(np.abs(f1).max()), abs(f2)) <= tol:
            return u_hat, lam
        j11 = a_new - lam * (a_new + cache_new.weighted_mass_sparse(u_hat))
        try:
            lu = spla.splu(sp.csc_matrix(j11))
        except RuntimeError as exc:
            raise FactorizationError(str(exc)) from exc
        # Bordered elimination: [j11, -grad; grad^T, 0] [du; dlam] = [f1; f2]
        p = lu.solve(f1)
        q = lu.solve(grad)
        denom = float(grad @ q)
        if denom == 0.0:
            raise FactorizationError("singular bordered system in conservative transfer")
        dlam = (f2 - float(grad @ p)) / denom
        du = p + dlam * q
        u_hat = u_hat - du
        lam = lam - dlam
    raise NewtonFailureError(
        "conservative transfer (cubic Hamiltonian) did not converge",
        last_iterate=u_hat,
        residual_norm=max(float(np.abs(f1).max()), abs(f2)),
    )


def conservative_transfer(
    u_old: np.ndarray,
    basis_old: BasisSet,
    basis_new: BasisSet,
    hamiltonian: str,
    cache_old: AssemblyCache,
    cache_new: AssemblyCache,
    cfg: SolverConfig,
) -> tuple[np.ndarray, float]:
    """Transfer preserving the chosen Hamiltonian exactly (to solver tolerance).

    Returns the new coefficients and the Lagrange multiplier of the
    constrained L2-distance minimization; identical meshes short-circuit to
    the unchanged coefficients with a zero multiplier.
    """
    if hamiltonian not in HAMILTONIANS:
        raise ValueError(f"hamiltonian must be one of {HAMILTONIANS}")
    u_old = np.asarray(u_old, dtype=float)
    if u_old.shape != (basis_old.dof_count,):
        raise DimensionMismatchError("coefficients do not match the old basis")
    if np.array_equal(basis_old.mesh.nodes, basis_new.mesh.nodes):
        return u_old.copy(), 0.0

    cross = cross_mass_sparse(basis_old, basis_new)
    if hamiltonian == "H1":
        return _conservative_h1(u_old, cache_old, cache_new, cross, cfg)
    u_init = interp_transfer(u_old, basis_old, basis_new, cache_new)
    return _conservative_h2(u_old, u_init, cache_old, cache_new, cross, cfg)

"""Time integration: conservative discrete-gradient steps on fixed and moving
meshes, the non-conservative reference steppers, and the Newton solver.

The semidiscrete momentum equation reads d/dt[(A+E)u] = -B(.) w, where B is
the skew matrix paired with the chosen Hamiltonian and w its discrete
gradient mapped to momentum space.  The discrete-gradient step replaces w by
the AVF discrete gradient; on a moving mesh a correction term proportional to
the transfer defect restores exact conservation (direction z chosen as the
discrete gradient itself, so the defect cancels identically).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssemblyCache
from .bbm import (
    avf_gradient_h2,
    gradient_h2,
    hamiltonian_h1,
    hamiltonian_h2,
)
from .errors import (
    DegenerateCorrectionError,
    DimensionMismatchError,
    FactorizationError,
    NewtonFailureError,
)

JACOBIAN_MODES = ("analytic", "finite_difference")
HAMILTONIANS = ("H1", "H2")


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-12
    max_newton_iters: int = 50
    jacobian_mode: str = "analytic"
    fd_epsilon: float = 1e-7
    euler_predictor: bool = False

    def __post_init__(self):
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be at least 1")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(f"jacobian_mode must be one of {JACOBIAN_MODES}")


@dataclass(frozen=True, eq=False)
class StepResult:
    u_next: np.ndarray
    newton_iters: int
    residual_norm: float
    hamiltonian_value: float


@dataclass(frozen=True, eq=False)
class NewtonResult:
    u: np.ndarray
    iterations: int
    residual_norm: float


def _solve_linear(jac, rhs: np.ndarray) -> np.ndarray:
    """Solve J x = rhs for J given as dense array, sparse matrix, a
    (sparse, [(alpha, p, q)]) pair meaning J = sparse + alpha * outer(p, q),
    or a callable rhs -> x implementing the solve directly."""
    if callable(jac):
        return jac(rhs)
    if isinstance(jac, tuple):
        base, rank_ones = jac
        try:
            lu = spla.splu(sp.csc_matrix(base))
        except RuntimeError as exc:
            raise FactorizationError(str(exc)) from exc
        x = lu.solve(rhs)
        if rank_ones:
            if len(rank_ones) != 1:
                raise NotImplementedError("only a single rank-one update is supported")
            alpha, p, q = rank_ones[0]
            sp_inv_p = lu.solve(p)
            denom = 1.0 + alpha * (q @ sp_inv_p)
            if denom == 0.0:
                raise FactorizationError("singular rank-one update")
            x = x - sp_inv_p * (alpha * (q @ x) / denom)
        return x
    if sp.issparse(jac):
        try:
            return spla.splu(sp.csc_matrix(jac)).solve(rhs)
        except RuntimeError as exc:
            raise FactorizationError(str(exc)) from exc
    try:
        return scipy.linalg.solve(np.asarray(jac), rhs)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise FactorizationError(str(exc)) from exc


def _fd_jacobian(residual_fn, u: np.ndarray, r0: np.ndarray, eps: float) -> np.ndarray:
    n = u.size
    jac = np.empty((n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = eps
        jac[:, k] = (residual_fn(u + step) - r0) / eps
    return jac


def newton_solve_full(
    residual_fn, u_init: np.ndarray, cfg: SolverConfig, jacobian_fn=None
) -> NewtonResult:
    """Newton iteration to an infinity-norm residual tolerance."""
    u = np.array(u_init, dtype=float)
    r = residual_fn(u)
    if r.shape != u.shape:
        raise DimensionMismatchError("residual dimension does not match unknowns")
    rnorm = float(np.abs(r).max()) if r.size else 0.0
    use_fd = jacobian_fn is None or cfg.jacobian_mode == "finite_difference"
    for it in range(cfg.max_newton_iters + 1):
        if rnorm <= cfg.newton_tol:
            return NewtonResult(u, it, rnorm)
        if it == cfg.max_newton_iters:
            break
        jac = _fd_jacobian(residual_fn, u, r, cfg.fd_epsilon) if use_fd else jacobian_fn(u)
        u = u - _solve_linear(jac, r)
        if not np.all(np.isfinite(u)):
            raise NewtonFailureError(
                "Newton iterate became non-finite", last_iterate=u, residual_norm=np.inf
            )
        r = residual_fn(u)
        rnorm = float(np.abs(r).max())
    raise NewtonFailureError(
        f"Newton stalled at residual {rnorm:.3e} after {cfg.max_newton_iters} iterations",
        last_iterate=u,
        residual_norm=rnorm,
    )


def newton_solve(residual_fn, u_init: np.ndarray, cfg: SolverConfig, jacobian_fn=None) -> np.ndarray:
    return newton_solve_full(residual_fn, u_init, cfg, jacobian_fn).u


def _correction_weight(z: np.ndarray, u_scale: float) -> float:
    zz = float(z @ z)
    if zz <= 1e-28 * max(1.0, u_scale):
        raise DegenerateCorrectionError(
            "discrete gradient direction vanished; correction term undefined"
        )
    return zz


def _dg_h1_step(
    u_hat: np.ndarray,
    i_old: float,
    cache: AssemblyCache,
    dt: float,
    cfg: SolverConfig,
    conservative: bool,
    frozen_operator: bool,
) -> StepResult:
    ae = cache.AE
    i_hat = hamiltonian_h1(u_hat, cache.A, cache.E)
    delta = 0.0 if conservative else i_hat - i_old
    u_scale = float(u_hat @ u_hat)
    frozen = cache.skew_h1(u_hat) if frozen_operator else None

    def residual(u):
        z = 0.5 * (u_hat + u)
        if frozen_operator:
            r = ae @ (u - u_hat) + dt * (frozen @ z)
        else:
            r = ae @ (u - u_hat) + dt * cache.skew_h1_apply(z, z)
        if delta != 0.0:
            r = r + (delta / _correction_weight(z, u_scale)) * z
        return r

    def jacobian(u):
        z = 0.5 * (u_hat + u)
        if frozen_operator:
            jac = ae + (0.5 * dt) * frozen
        else:
            jac = ae + (0.5 * dt) * cache.skew_h1_quadratic_jacobian(z)
        rank_ones = []
        if delta != 0.0:
            zz = _correction_weight(z, u_scale)
            jac = jac + (0.5 * delta / zz) * sp.identity(cache.n, format="csr")
            rank_ones = [(-delta / zz**2, z, z)]
        return (jac, rank_ones)

    guess = u_hat
    if cfg.euler_predictor:
        guess = u_hat + dt * cache.AE_lu.solve(-cache.skew_h1_apply(u_hat, u_hat))
    res = newton_solve_full(residual, guess, cfg, jacobian)
    return StepResult(
        res.u, res.iterations, res.residual_norm, hamiltonian_h1(res.u, cache.A, cache.E)
    )


def _coupled_direction_solver(ae, block12, grad_matrix, n: int, rank1=None):
    """Newton-direction solver for J = AE + block12 @ AE^{-1} @ grad_matrix.

    Solves the equivalent sparse system
        [AE,            block12] [du]   [rhs]
        [-grad_matrix,  AE     ] [ds] = [0  ]
    (with ds = AE^{-1} grad_matrix du), optionally plus one rank-one update
    acting as alpha * p (q . ds) on the first block row.
    """
    coupled = sp.bmat([[ae, block12], [-grad_matrix, ae]], format="csc")
    try:
        lu = spla.splu(coupled)
    except RuntimeError as exc:
        raise FactorizationError(str(exc)) from exc

    def solve(rhs):
        b = np.concatenate([rhs, np.zeros(n)])
        x = lu.solve(b)
        if rank1 is not None:
            alpha, p, q = rank1
            pe = np.concatenate([p, np.zeros(n)])
            qe = np.concatenate([np.zeros(n), q])
            k_inv_p = lu.solve(pe)
            denom = 1.0 + alpha * (qe @ k_inv_p)
            if denom == 0.0:
                raise FactorizationError("singular rank-one update")
            x = x - k_inv_p * (alpha * (qe @ x) / denom)
        return x[:n]

    return solve


def _dg_h2_step(
    u_hat: np.ndarray,
    i_old: float,
    cache: AssemblyCache,
    dt: float,
    cfg: SolverConfig,
    conservative: bool,
) -> StepResult:
    ae = cache.AE
    b2 = cache.B2
    i_hat = hamiltonian_h2(u_hat, cache.A, cache.D)
    delta = 0.0 if conservative else i_hat - i_old
    u_scale = float(u_hat @ u_hat)
    w_hat = cache.weighted_mass_sparse(u_hat)
    eye = sp.identity(cache.n, format="csr")

    def gradient_dir(u):
        g = avf_gradient_h2(u_hat, u, cache.A, cache.D)
        return cache.AE_lu.solve(g)

    def residual(u):
        z = gradient_dir(u)
        r = ae @ (u - u_hat) + dt * (b2 @ z)
        if delta != 0.0:
            r = r + (delta / _correction_weight(z, u_scale)) * z
        return r

    def jacobian(u):
        grad_matrix = 0.5 * cache.A + (w_hat + 2.0 * cache.weighted_mass_sparse(u)) / 6.0
        block12 = dt * b2
        rank1 = None
        if delta != 0.0:
            z = gradient_dir(u)
            zz = _correction_weight(z, u_scale)
            block12 = block12 + (delta / zz) * eye
            rank1 = (-2.0 * delta / zz**2, z, z)
        return _coupled_direction_solver(ae, block12, grad_matrix, cache.n, rank1)

    guess = u_hat
    if cfg.euler_predictor:
        rhs = -(b2 @ cache.AE_lu.solve(gradient_h2(u_hat, cache.A, cache.D)))
        guess = u_hat + dt * cache.AE_lu.solve(rhs)
    res = newton_solve_full(residual, guess, cfg, jacobian)
    return StepResult(
        res.u, res.iterations, res.residual_norm, hamiltonian_h2(res.u, cache.A, cache.D)
    )


def dg_moving_step(
    u_hat: np.ndarray,
    i_old: float,
    cache_new: AssemblyCache,
    hamiltonian: str,
    dt: float,
    cfg: SolverConfig,
    transfer_was_conservative: bool,
    frozen_operator: bool = False,
) -> StepResult:
    """One discrete-gradient step on the (possibly new) mesh.

    `u_hat` is the transferred state on the new mesh and `i_old` the
    Hamiltonian value on the old mesh before transfer.  When the transfer was
    conservative the correction numerator is exactly zero and the step reduces
    to the fixed-mesh scheme; otherwise the correction restores
    I_new(u_next) = i_old to solver tolerance.
    """
    if hamiltonian not in HAMILTONIANS:
        raise ValueError(f"hamiltonian must be one of {HAMILTONIANS}")
    u_hat = np.asarray(u_hat, dtype=float)
    if u_hat.shape != (cache_new.n,):
        raise DimensionMismatchError("transferred state does not match the new basis")
    if hamiltonian == "H1":
        return _dg_h1_step(
            u_hat, i_old, cache_new, dt, cfg, transfer_was_conservative, frozen_operator
        )
    return _dg_h2_step(u_hat, i_old, cache_new, dt, cfg, transfer_was_conservative)


def dg1_step_fixed(
    u_n: np.ndarray,
    cache: AssemblyCache,
    dt: float,
    cfg: SolverConfig,
    frozen_operator: bool = False,
) -> StepResult:
    """Fixed-mesh step conserving the quadratic Hamiltonian (Lagrange basis)."""
    u_n = np.asarray(u_n, dtype=float)
    i_old = hamiltonian_h1(u_n, cache.A, cache.E)
    return dg_moving_step(u_n, i_old, cache, "H1", dt, cfg, True, frozen_operator)


def dg2_step_fixed(
    u_n: np.ndarray, cache: AssemblyCache, dt: float, cfg: SolverConfig
) -> StepResult:
    """Fixed-mesh step conserving the cubic Hamiltonian (B-spline basis)."""
    u_n = np.asarray(u_n, dtype=float)
    i_old = hamiltonian_h2(u_n, cache.A, cache.D)
    return dg_moving_step(u_n, i_old, cache, "H2", dt, cfg, True)


def trapezoidal_step(
    u_n: np.ndarray, cache: AssemblyCache, dt: float, cfg: SolverConfig
) -> StepResult:
    """Trapezoidal rule on the full nonlinear H1-pairing right-hand side."""
    u_n = np.asarray(u_n, dtype=float)
    ae = cache.AE
    f_n = cache.skew_h1_apply(u_n, u_n)

    def residual(u):
        return ae @ (u - u_n) + (0.5 * dt) * (f_n + cache.skew_h1_apply(u, u))

    def jacobian(u):
        return (ae + (0.5 * dt) * cache.skew_h1_quadratic_jacobian(u), [])

    res = newton_solve_full(residual, u_n, cfg, jacobian)
    return StepResult(
        res.u, res.iterations, res.residual_norm, hamiltonian_h1(res.u, cache.A, cache.E)
    )


def implicit_midpoint_step(
    u_n: np.ndarray, cache: AssemblyCache, dt: float, cfg: SolverConfig
) -> StepResult:
    """Implicit midpoint rule on the H2-pairing semidiscretization."""
    u_n = np.asarray(u_n, dtype=float)
    ae = cache.AE
    b2 = cache.B2

    def residual(u):
        mid = 0.5 * (u_n + u)
        return ae @ (u - u_n) + dt * (b2 @ cache.AE_lu.solve(gradient_h2(mid, cache.A, cache.D)))

    def jacobian(u):
        mid = 0.5 * (u_n + u)
        grad_matrix = 0.5 * (cache.A + cache.weighted_mass_sparse(mid))
        return _coupled_direction_solver(ae, dt * b2, grad_matrix, cache.n)

    res = newton_solve_full(residual, u_n, cfg, jacobian)
    return StepResult(
        res.u, res.iterations, res.residual_norm, hamiltonian_h2(res.u, cache.A, cache.D)
    )


def rk4_step(u_n: np.ndarray, cache: AssemblyCache, dt: float) -> StepResult:
    """Classic explicit Runge-Kutta step on the H2-pairing semidiscretization."""
    u_n = np.asarray(u_n, dtype=float)
    b2 = cache.B2

    def rhs(u):
        g = gradient_h2(u, cache.A, cache.D)
        return -cache.AE_lu.solve(b2 @ cache.AE_lu.solve(g))

    k1 = rhs(u_n)
    k2 = rhs(u_n + 0.5 * dt * k1)
    k3 = rhs(u_n + 0.5 * dt * k2)
    k4 = rhs(u_n + dt * k3)
    u_next = u_n + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return StepResult(u_next, 0, 0.0, hamiltonian_h2(u_next, cache.A, cache.D))

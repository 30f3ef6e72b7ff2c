"""BBM problem data: the two conserved Hamiltonians, their (AVF discrete)
gradients, and the analytic solitary-wave solutions.

The discrete momentum vector is always derived as (A+E) u on demand; the two
Hamiltonians are H1 = (1/2) int u^2 + u_x^2 and H2 = (1/2) int u^2 + u^3/3,
evaluated exactly on the trial space through the assembled matrices/tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import TripleTensor
from .basis import BasisSet
from .errors import DimensionMismatchError, ParameterError


@dataclass(frozen=True, eq=False)
class State:
    """Coefficient vector tied to a basis at a time level."""

    u: np.ndarray
    basis: BasisSet
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "u", u)
        if u.shape != (self.basis.dof_count,):
            raise DimensionMismatchError("coefficient vector does not match basis")
        if not np.all(np.isfinite(u)):
            raise ValueError("state contains non-finite coefficients")


@dataclass(frozen=True)
class SolitonParams:
    """Solitary-wave parameters; two-wave runs use the (r, s) pairs."""

    c: float = 3.0
    half_length: float = 200.0
    c_r: float = 2.0
    c_s: float = 1.5
    x_r: float = 150.0
    x_s: float = 105.0


def _check_dims(u, *mats):
    n = u.shape[0]
    for m in mats:
        if m.shape[-1] != n:
            raise DimensionMismatchError("matrix/tensor does not match coefficients")


def hamiltonian_h1(u: np.ndarray, mass, stiffness) -> float:
    """H1 = (1/2) u^T (A+E) u, the exact integral of (u^h)^2 + (u^h_x)^2 over 2."""
    u = np.asarray(u, dtype=float)
    _check_dims(u, mass, stiffness)
    return 0.5 * float(u @ (mass @ u) + u @ (stiffness @ u))


def hamiltonian_h2(u: np.ndarray, mass, triple: TripleTensor) -> float:
    """H2 = (1/2) u^T A u + (1/6) D_ijk u_i u_j u_k."""
    u = np.asarray(u, dtype=float)
    _check_dims(u, mass)
    return 0.5 * float(u @ (mass @ u)) + triple.contract_three(u, u, u) / 6.0


def gradient_h1(u: np.ndarray, mass, stiffness) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    _check_dims(u, mass, stiffness)
    return mass @ u + stiffness @ u


def gradient_h2(u: np.ndarray, mass, triple: TripleTensor) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    _check_dims(u, mass)
    return mass @ u + 0.5 * triple.contract_two(u, u)


def avf_gradient_h1(u_a: np.ndarray, u_b: np.ndarray, mass, stiffness) -> np.ndarray:
    """AVF discrete gradient of H1 with respect to u: (A+E)(u_a+u_b)/2.

    Exact for the quadratic Hamiltonian, so the discrete-gradient identity
    holds to roundoff.
    """
    u_a = np.asarray(u_a, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    if u_a.shape != u_b.shape:
        raise DimensionMismatchError("AVF endpoints must share a basis")
    mid = 0.5 * (u_a + u_b)
    return gradient_h1(mid, mass, stiffness)


def avf_gradient_h2(u_a: np.ndarray, u_b: np.ndarray, mass, triple: TripleTensor) -> np.ndarray:
    """AVF discrete gradient of H2 with respect to u (closed form, exact)."""
    u_a = np.asarray(u_a, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    if u_a.shape != u_b.shape:
        raise DimensionMismatchError("AVF endpoints must share a basis")
    _check_dims(u_a, mass)
    quad = 0.5 * (mass @ (u_a + u_b))
    cubic = (
        triple.contract_two(u_a, u_a)
        + triple.contract_two(u_a, u_b)
        + triple.contract_two(u_b, u_b)
    ) / 6.0
    return quad + cubic


def wrap_periodic(x, half_length: float):
    """Wrap coordinates into [-L, L)."""
    two_l = 2.0 * half_length
    return (np.asarray(x, dtype=float) + half_length) % two_l - half_length


def exact_soliton(x, t: float, params: SolitonParams):
    """Travelling sech^2 wave of speed c > 1, periodically wrapped."""
    c = params.c
    if c <= 1.0:
        raise ParameterError(f"wave speed must exceed 1, got {c}")
    ell = wrap_periodic(np.asarray(x, dtype=float) - c * t, params.half_length)
    width = 0.5 * np.sqrt(1.0 - 1.0 / c)
    return 3.0 * (c - 1.0) / np.cosh(width * ell) ** 2


def initial_two_wave(x, params: SolitonParams):
    """Two solitary-wave profiles centred at x_r and x_s at t = 0."""
    for c in (params.c_r, params.c_s):
        if c <= 1.0:
            raise ParameterError(f"wave speed must exceed 1, got {c}")
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x, dtype=float)
    for c, center in ((params.c_r, params.x_r), (params.c_s, params.x_s)):
        ell = wrap_periodic(x - center, params.half_length)
        width = 0.5 * np.sqrt(1.0 - 1.0 / c)
        total = total + 3.0 * (c - 1.0) / np.cosh(width * ell) ** 2
    return total

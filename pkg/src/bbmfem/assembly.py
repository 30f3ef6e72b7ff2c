"""Element-loop assembly of all mesh/basis-dependent matrices and tensors.

Public `assemble_*` functions return dense arrays (problem sizes are small in
unit tests).  `AssemblyCache` keeps the per-element quadrature tables and
sparse (CSR) copies of the matrices plus a cached factorization of the
combined mass+stiffness operator, which the time steppers reuse; moving-mesh
runs rebuild one cache per step, so everything here is vectorized over
elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import (
    DEFAULT_QUAD_POINTS,
    BasisKind,
    BasisSet,
    dof_map,
    eval_basis_many,
    gauss_rule,
)
from .errors import DimensionMismatchError, InvalidMeshError, UnsupportedBasisError


def _quad_tables(basis: BasisSet, n_points: int = DEFAULT_QUAD_POINTS, third: bool = False):
    """Per-element Gauss data: weights (M, Q), basis values/derivatives (M, Q, 4)."""
    mesh = basis.mesh
    h = mesh.element_sizes
    if np.any(h <= 0.0):
        raise InvalidMeshError("degenerate element in assembly")
    rule = gauss_rule(n_points)
    m = basis.num_elements
    xi = 0.5 * (rule.points + 1.0)
    elems = np.repeat(np.arange(m), n_points)
    xis = np.tile(xi, m)
    weights = 0.5 * h[:, None] * rule.weights[None, :]
    phi = eval_basis_many(basis, elems, xis, 0).reshape(m, n_points, 4)
    dphi = eval_basis_many(basis, elems, xis, 1).reshape(m, n_points, 4)
    d3phi = None
    if third:
        d3phi = eval_basis_many(basis, elems, xis, 3).reshape(m, n_points, 4)
    x = mesh.nodes[:-1, None] + h[:, None] * xi[None, :]
    return weights, x, phi, dphi, d3phi


def _scatter_dense(blocks: np.ndarray, dofs: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    np.add.at(out, (dofs[:, :, None], dofs[:, None, :]), blocks)
    return out


def _scatter_sparse(blocks: np.ndarray, dofs: np.ndarray, n: int) -> sp.csr_matrix:
    rows = np.broadcast_to(dofs[:, :, None], blocks.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], blocks.shape).ravel()
    mat = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def _mass_blocks(w, phi):
    return np.einsum("eq,eqa,eqb->eab", w, phi, phi)


def _stiffness_blocks(w, dphi):
    return np.einsum("eq,eqa,eqb->eab", w, dphi, dphi)


def assemble_mass(basis: BasisSet) -> np.ndarray:
    """Mass matrix: integrals of phi_i phi_j over the periodic domain."""
    w, _, phi, _, _ = _quad_tables(basis)
    return _scatter_dense(_mass_blocks(w, phi), dof_map(basis), basis.dof_count)


def assemble_stiffness(basis: BasisSet) -> np.ndarray:
    """Stiffness matrix: integrals of phi_i' phi_j' (constants in its null space)."""
    w, _, _, dphi, _ = _quad_tables(basis)
    return _scatter_dense(_stiffness_blocks(w, dphi), dof_map(basis), basis.dof_count)


def _skew_h1_blocks(w, phi, dphi, u_q, ux_q):
    # Row index = test function j, column = i:
    #   -(2/3 u + 1) * phi_i dphi_j  -  (1/3) u_x * phi_i phi_j
    a = -(2.0 / 3.0 * u_q + 1.0) * w
    b = -(1.0 / 3.0) * ux_q * w
    return np.einsum("eq,eqb,eqa->eab", a, phi, dphi) + np.einsum(
        "eq,eqb,eqa->eab", b, phi, phi
    )


def _field_at_quad(phi, dofs, coeffs):
    return np.einsum("eqa,ea->eq", phi, coeffs[dofs])


def assemble_skew_h1(basis: BasisSet, u: np.ndarray) -> np.ndarray:
    """State-dependent skew matrix of the quadratic-Hamiltonian pairing.

    Entry (j, i) is -(2/3) int u phi_i phi_j' - int phi_i phi_j'
    - (1/3) int u_x phi_i phi_j, with u the discrete field of `u`.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (basis.dof_count,):
        raise DimensionMismatchError("coefficient vector does not match basis")
    w, _, phi, dphi, _ = _quad_tables(basis)
    dofs = dof_map(basis)
    u_q = _field_at_quad(phi, dofs, u)
    ux_q = _field_at_quad(dphi, dofs, u)
    blocks = _skew_h1_blocks(w, phi, dphi, u_q, ux_q)
    return _scatter_dense(blocks, dofs, basis.dof_count)


def assemble_skew_h2(basis: BasisSet) -> np.ndarray:
    """Constant skew matrix of the cubic-Hamiltonian pairing.

    Entry (j, i) is -int phi_i phi_j' + int phi_i phi_j'''; needs the C2
    B-spline basis for the third derivative to be skew-consistent.
    """
    if basis.kind is not BasisKind.PERIODIC_CUBIC_BSPLINE:
        raise UnsupportedBasisError(
            "third-derivative skew matrix requires the C2 B-spline basis"
        )
    w, _, phi, dphi, d3phi = _quad_tables(basis, third=True)
    blocks = np.einsum("eq,eqb,eqa->eab", w, phi, -dphi + d3phi)
    return _scatter_dense(blocks, dof_map(basis), basis.dof_count)


@dataclass(frozen=True, eq=False)
class TripleTensor:
    """Symmetric sparse 3-tensor of triple products int phi_i phi_j phi_k.

    Stored as per-element 4x4x4 blocks plus the element dof map; contractions
    are einsum reductions over the blocks.
    """

    blocks: np.ndarray  # (M, 4, 4, 4)
    dofs: np.ndarray  # (M, 4)
    n: int

    def contract_one(self, w: np.ndarray) -> np.ndarray:
        """Matrix D_ijk w_k (a mass matrix weighted by the field of w)."""
        out = np.zeros((self.n, self.n))
        partial = np.einsum("eabc,ec->eab", self.blocks, np.asarray(w)[self.dofs])
        np.add.at(out, (self.dofs[:, :, None], self.dofs[:, None, :]), partial)
        return out

    def contract_two(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Vector D_ijk v_j w_k."""
        out = np.zeros(self.n)
        partial = np.einsum(
            "eabc,eb,ec->ea", self.blocks, np.asarray(v)[self.dofs], np.asarray(w)[self.dofs]
        )
        np.add.at(out, self.dofs, partial)
        return out

    def contract_three(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
        ue, ve, we = (np.asarray(a)[self.dofs] for a in (u, v, w))
        return float(np.einsum("eabc,ea,eb,ec->", self.blocks, ue, ve, we))

    def total(self) -> float:
        return float(self.blocks.sum())

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.n, self.n, self.n))
        np.add.at(
            out,
            (self.dofs[:, :, None, None], self.dofs[:, None, :, None], self.dofs[:, None, None, :]),
            self.blocks,
        )
        return out


def assemble_triple_product(basis: BasisSet) -> TripleTensor:
    """Triple-product tensor over element-sharing index triples."""
    w, _, phi, _, _ = _quad_tables(basis)
    blocks = np.einsum("eq,eqa,eqb,eqc->eabc", w, phi, phi, phi)
    return TripleTensor(blocks, dof_map(basis), basis.dof_count)


def _merged_panels(basis_old: BasisSet, basis_new: BasisSet):
    """Union-breakpoint panels with the old/new element containing each."""
    pts = np.union1d(basis_old.mesh.nodes, basis_new.mesh.nodes)
    keep = np.concatenate([np.diff(pts) > 1e-14 * basis_old.mesh.half_length, [True]])
    pts = pts[keep]
    lo, hi = pts[:-1], pts[1:]
    mid = 0.5 * (lo + hi)
    e_old = np.clip(
        np.searchsorted(basis_old.mesh.nodes, mid, side="right") - 1,
        0,
        basis_old.num_elements - 1,
    )
    e_new = np.clip(
        np.searchsorted(basis_new.mesh.nodes, mid, side="right") - 1,
        0,
        basis_new.num_elements - 1,
    )
    return lo, hi, e_old, e_new


def cross_mass_sparse(basis_old: BasisSet, basis_new: BasisSet) -> sp.csr_matrix:
    """Sparse cross mass matrix of the new basis against the old one."""
    if basis_old.kind is not basis_new.kind:
        raise UnsupportedBasisError("cross mass needs both bases of the same kind")
    if (
        basis_old.mesh.half_length != basis_new.mesh.half_length
    ):
        raise DimensionMismatchError("cross mass needs a common domain")

    lo, hi, e_old, e_new = _merged_panels(basis_old, basis_new)
    rule = gauss_rule(DEFAULT_QUAD_POINTS)
    npan = lo.size
    nq = rule.points.size
    half = 0.5 * (hi - lo)
    x = lo[:, None] + half[:, None] * (rule.points[None, :] + 1.0)
    w = half[:, None] * rule.weights[None, :]

    elems_old = np.repeat(e_old, nq)
    elems_new = np.repeat(e_new, nq)
    xf = x.ravel()
    xi_old = (xf - basis_old.mesh.nodes[elems_old]) / basis_old.mesh.element_sizes[elems_old]
    xi_new = (xf - basis_new.mesh.nodes[elems_new]) / basis_new.mesh.element_sizes[elems_new]
    phi_old = eval_basis_many(basis_old, elems_old, xi_old, 0).reshape(npan, nq, 4)
    phi_new = eval_basis_many(basis_new, elems_new, xi_new, 0).reshape(npan, nq, 4)

    blocks = np.einsum("pq,pqa,pqb->pab", w, phi_new, phi_old)
    dofs_old = dof_map(basis_old)[e_old]
    dofs_new = dof_map(basis_new)[e_new]
    rows = np.broadcast_to(dofs_new[:, :, None], blocks.shape).ravel()
    cols = np.broadcast_to(dofs_old[:, None, :], blocks.shape).ravel()
    mat = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)),
        shape=(basis_new.dof_count, basis_old.dof_count),
    )
    return mat.tocsr()


def assemble_cross_mass(basis_old: BasisSet, basis_new: BasisSet) -> np.ndarray:
    """Cross mass matrix of the new basis against the old one.

    Entry (i, j) integrates newphi_i oldphi_j over the merged breakpoint
    partition, so every quadrature panel sees plain polynomials.
    """
    return cross_mass_sparse(basis_old, basis_new).toarray()


class AssemblyCache:
    """Quadrature tables plus sparse matrices for one (mesh, basis) pair.

    Immutable after construction; steppers hold one per mesh and rebuild it
    whenever the mesh moves.
    """

    def __init__(self, basis: BasisSet, n_quad: int = DEFAULT_QUAD_POINTS):
        self.basis = basis
        self.dofs = dof_map(basis)
        self.n = basis.dof_count
        third = basis.kind is BasisKind.PERIODIC_CUBIC_BSPLINE
        self.quad_w, self.quad_x, self.phi, self.dphi, self.d3phi = _quad_tables(
            basis, n_quad, third=third
        )
        self.A = _scatter_sparse(_mass_blocks(self.quad_w, self.phi), self.dofs, self.n)
        self.E = _scatter_sparse(
            _stiffness_blocks(self.quad_w, self.dphi), self.dofs, self.n
        )
        self.B2 = None
        if third:
            blocks = np.einsum(
                "eq,eqb,eqa->eab", self.quad_w, self.phi, -self.dphi + self.d3phi
            )
            self.B2 = _scatter_sparse(blocks, self.dofs, self.n)

    @cached_property
    def AE(self) -> sp.csr_matrix:
        return (self.A + self.E).tocsr()

    @cached_property
    def AE_lu(self):
        return spla.splu(self.AE.tocsc())

    @cached_property
    def A_dense(self) -> np.ndarray:
        return self.A.toarray()

    @cached_property
    def AE_dense(self) -> np.ndarray:
        return self.AE.toarray()

    @cached_property
    def D(self) -> TripleTensor:
        blocks = np.einsum("eq,eqa,eqb,eqc->eabc", self.quad_w, self.phi, self.phi, self.phi)
        return TripleTensor(blocks, self.dofs, self.n)

    def field_at_quad(self, coeffs: np.ndarray, deriv: int = 0) -> np.ndarray:
        table = (self.phi, self.dphi)[deriv]
        return _field_at_quad(table, self.dofs, np.asarray(coeffs, dtype=float))

    def skew_h1(self, u: np.ndarray) -> sp.csr_matrix:
        """Sparse version of `assemble_skew_h1` for the solver loops."""
        u_q = self.field_at_quad(u)
        ux_q = self.field_at_quad(u, 1)
        blocks = _skew_h1_blocks(self.quad_w, self.phi, self.dphi, u_q, ux_q)
        return _scatter_sparse(blocks, self.dofs, self.n)

    def skew_h1_apply(self, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Product skew_h1(w) @ v assembled directly from quadrature values."""
        w_q = self.field_at_quad(w)
        wx_q = self.field_at_quad(w, 1)
        v_q = self.field_at_quad(v)
        a = -(2.0 / 3.0 * w_q + 1.0) * v_q * self.quad_w
        b = -(1.0 / 3.0) * wx_q * v_q * self.quad_w
        parts = np.einsum("eq,eqa->ea", a, self.dphi) + np.einsum(
            "eq,eqa->ea", b, self.phi
        )
        out = np.zeros(self.n)
        np.add.at(out, self.dofs, parts)
        return out

    def skew_h1_quadratic_jacobian(self, g: np.ndarray) -> sp.csr_matrix:
        """Derivative of g -> skew_h1(g) @ g, assembled from quadrature values."""
        g_q = self.field_at_quad(g)
        gx_q = self.field_at_quad(g, 1)
        a = -(4.0 / 3.0 * g_q + 1.0) * self.quad_w
        b = -(1.0 / 3.0) * gx_q * self.quad_w
        c = -(1.0 / 3.0) * g_q * self.quad_w
        blocks = (
            np.einsum("eq,eqb,eqa->eab", a, self.phi, self.dphi)
            + np.einsum("eq,eqb,eqa->eab", b, self.phi, self.phi)
            + np.einsum("eq,eqb,eqa->eab", c, self.dphi, self.phi)
        )
        return _scatter_sparse(blocks, self.dofs, self.n)

    def weighted_mass(self, w_coeffs: np.ndarray) -> np.ndarray:
        """Dense matrix int phi_i phi_j w^h, i.e. D contracted with w."""
        w_q = self.field_at_quad(w_coeffs)
        blocks = np.einsum("eq,eqa,eqb->eab", self.quad_w * w_q, self.phi, self.phi)
        return _scatter_dense(blocks, self.dofs, self.n)

    def weighted_mass_sparse(self, w_coeffs: np.ndarray) -> sp.csr_matrix:
        w_q = self.field_at_quad(w_coeffs)
        blocks = np.einsum("eq,eqa,eqb->eab", self.quad_w * w_q, self.phi, self.phi)
        return _scatter_sparse(blocks, self.dofs, self.n)

    def integrate_field_power(self, coeffs: np.ndarray, power: int) -> float:
        """Exact integral of (u^h)^power for power <= 3."""
        u_q = self.field_at_quad(coeffs)
        return float(np.einsum("eq,eq->", self.quad_w, u_q**power))

    def moment_of_power(self, coeffs: np.ndarray, power: int) -> np.ndarray:
        """Vector of integrals phi_i (u^h)^power."""
        u_q = self.field_at_quad(coeffs)
        parts = np.einsum("eq,eqa->ea", self.quad_w * u_q**power, self.phi)
        out = np.zeros(self.n)
        np.add.at(out, self.dofs, parts)
        return out

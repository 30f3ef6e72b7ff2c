"""Trial spaces on a periodic mesh: C0 cubic Lagrange and C2 cubic B-splines.

Both spaces are cubic on each element.  Lagrange elements carry nodal dofs
(3 per element after the periodic wrap); B-splines carry one dof per element
with simple knots at the mesh nodes, giving C2 continuity everywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UnsupportedBasisError
from .mesh import Mesh1D


class BasisKind(enum.Enum):
    CUBIC_LAGRANGE = "cubic_lagrange"
    PERIODIC_CUBIC_BSPLINE = "periodic_cubic_bspline"


DEGREE = 3  # both spaces are cubic; fixed, not a parameter

# Nodal cubics on the reference element [0, 1] with nodes at 0, 1/3, 2/3, 1.
# Row r holds the monomial coefficients (1, xi, xi^2, xi^3) of shape function r.
_LAGRANGE_COEFFS = np.array(
    [
        [1.0, -5.5, 9.0, -4.5],
        [0.0, 9.0, -22.5, 13.5],
        [0.0, -4.5, 18.0, -13.5],
        [0.0, 1.0, -4.5, 4.5],
    ]
)


def _poly_derivative(coeffs: np.ndarray, order: int) -> np.ndarray:
    c = coeffs
    for _ in range(order):
        c = c[:, 1:] * np.arange(1, c.shape[1])
    return c


_LAGRANGE_DERIV_COEFFS = [_poly_derivative(_LAGRANGE_COEFFS, d) for d in range(4)]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre points/weights on (-1, 1)."""

    points: np.ndarray
    weights: np.ndarray


def gauss_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with n points, exact for polynomials of degree 2n-1."""
    if not 1 <= n_points <= 8:
        raise ValueError(f"unsupported Gauss rule size {n_points} (need 1..8)")
    pts, wts = np.polynomial.legendre.leggauss(n_points)
    return QuadratureRule(pts, wts)


DEFAULT_QUAD_POINTS = 5  # exact through degree 9: triple products of cubics


@dataclass(frozen=True, eq=False)
class BasisSet:
    """A concrete finite-dimensional trial space over a periodic mesh."""

    kind: BasisKind
    mesh: Mesh1D
    dof_count: int

    @classmethod
    def cubic_lagrange(cls, mesh: Mesh1D) -> "BasisSet":
        return cls(BasisKind.CUBIC_LAGRANGE, mesh, 3 * mesh.num_elements)

    @classmethod
    def periodic_bspline(cls, mesh: Mesh1D) -> "BasisSet":
        return cls(BasisKind.PERIODIC_CUBIC_BSPLINE, mesh, mesh.num_elements)

    @property
    def num_elements(self) -> int:
        return self.mesh.num_elements

    def extended_knots(self) -> np.ndarray:
        """Mesh nodes extended periodically by 3 on each side.

        Entry k holds the unwrapped position of breakpoint k-3, so the knot
        window of (unwrapped) spline j is indices j+3 .. j+7.
        """
        x = self.mesh.nodes
        two_l = 2.0 * self.mesh.half_length
        left = x[-4:-1] - two_l
        right = x[1:4] + two_l
        return np.concatenate([left, x, right])


def supported_dofs(basis: BasisSet, element_index: int) -> list[int]:
    """Global dof indices of the 4 basis functions supported on an element."""
    m = basis.num_elements
    if not 0 <= element_index < m:
        raise IndexError(f"element index {element_index} out of range 0..{m - 1}")
    e = element_index
    if basis.kind is BasisKind.CUBIC_LAGRANGE:
        n = basis.dof_count
        return [3 * e, 3 * e + 1, 3 * e + 2, (3 * e + 3) % n]
    return [(e - 3) % m, (e - 2) % m, (e - 1) % m, e]


def dof_map(basis: BasisSet) -> np.ndarray:
    """(M, 4) array of supported dofs for every element."""
    m = basis.num_elements
    e = np.arange(m)
    if basis.kind is BasisKind.CUBIC_LAGRANGE:
        n = basis.dof_count
        return np.stack([3 * e, 3 * e + 1, 3 * e + 2, (3 * e + 3) % n], axis=1)
    return np.stack([(e - 3) % m, (e - 2) % m, (e - 1) % m, e], axis=1)


def _lagrange_values(basis, elements, xi, deriv_order):
    coeffs = _LAGRANGE_DERIV_COEFFS[deriv_order]
    powers = xi[:, None] ** np.arange(coeffs.shape[1])
    vals = powers @ coeffs.T
    if deriv_order:
        h = basis.mesh.element_sizes[elements]
        vals = vals / h[:, None] ** deriv_order
    return vals


def _bspline_span_tables(knots, elements, x):
    """Nonzero B-spline values of degrees 0..3 on each point's knot span.

    Returns a list N[d] of shape (npts, d+1); column r of N[d] is the value of
    the degree-d spline starting at breakpoint (e - d + r).
    """
    npts = x.shape[0]
    base = elements + 3  # index of the span's left knot in the extended array
    tables = [np.ones((npts, 1))]
    left = np.empty((npts, DEGREE + 1))
    right = np.empty((npts, DEGREE + 1))
    for l in range(1, DEGREE + 1):
        left[:, l] = x - knots[base + 1 - l]
        right[:, l] = knots[base + l] - x
    for d in range(1, DEGREE + 1):
        prev = tables[-1]
        cur = np.zeros((npts, d + 1))
        saved = np.zeros(npts)
        for r in range(d):
            temp = prev[:, r] / (right[:, r + 1] + left[:, d - r])
            cur[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, d - r] * temp
        cur[:, d] = saved
        tables.append(cur)
    return tables


def _bspline_derivs(knots, elements, tables, order):
    """k-th derivatives of the 4 nonzero cubic splines from the span tables."""
    if order == 0:
        return tables[DEGREE]

    def deriv(p, k):
        if k == 0:
            return tables[p]
        lower = deriv(p - 1, k - 1)  # (npts, p)
        npts = lower.shape[0]
        out = np.zeros((npts, p + 1))
        for r in range(p + 1):
            j = elements - p + r  # unwrapped spline index, knots j+3 .. j+3+p+1
            den1 = knots[j + 3 + p] - knots[j + 3]
            den2 = knots[j + 4 + p] - knots[j + 4]
            term = np.zeros(npts)
            if r - 1 >= 0:
                term += lower[:, r - 1] / den1
            if r <= p - 1:
                term -= lower[:, r] / den2
            out[:, r] = p * term
        return out

    return deriv(DEGREE, order)


def eval_basis_many(
    basis: BasisSet, elements: np.ndarray, xi: np.ndarray, deriv_order: int = 0
) -> np.ndarray:
    """Values of the 4 supported basis functions at local coords xi in [0, 1].

    Physical-coordinate derivatives (chain-rule factors included); columns are
    ordered as `supported_dofs`.  Vectorized over points.
    """
    if not 0 <= deriv_order <= 3:
        raise ValueError(f"derivative order {deriv_order} out of range 0..3")
    elements = np.asarray(elements, dtype=int)
    xi = np.asarray(xi, dtype=float)
    if basis.kind is BasisKind.CUBIC_LAGRANGE:
        return _lagrange_values(basis, elements, xi, deriv_order)
    knots = basis.extended_knots()
    x = basis.mesh.nodes[elements] + xi * basis.mesh.element_sizes[elements]
    tables = _bspline_span_tables(knots, elements, x)
    return _bspline_derivs(knots, elements, tables, deriv_order)


def eval_basis(
    basis: BasisSet, element_index: int, xi: float, deriv_order: int = 0
) -> np.ndarray:
    """Single-point version of `eval_basis_many` (4 values)."""
    m = basis.num_elements
    if not 0 <= element_index < m:
        raise IndexError(f"element index {element_index} out of range 0..{m - 1}")
    return eval_basis_many(
        basis, np.array([element_index]), np.array([float(xi)]), deriv_order
    )[0]


def locate_elements(basis: BasisSet, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Containing element and local coordinate for each physical point."""
    nodes = basis.mesh.nodes
    x = np.asarray(x, dtype=float)
    if np.any(x < nodes[0]) or np.any(x > nodes[-1]):
        raise ValueError("evaluation point outside the domain [-L, L]")
    elems = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, basis.num_elements - 1)
    xi = (x - nodes[elems]) / basis.mesh.element_sizes[elems]
    return elems, xi


def eval_field_many(
    basis: BasisSet, coeffs: np.ndarray, x: np.ndarray, deriv_order: int = 0
) -> np.ndarray:
    """Evaluate u^h(x) = sum_i coeffs_i phi_i(x) at an array of points."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.dof_count,):
        raise DimensionMismatchError(
            f"expected {basis.dof_count} coefficients, got {coeffs.shape}"
        )
    elems, xi = locate_elements(basis, x)
    vals = eval_basis_many(basis, elems, xi, deriv_order)
    dofs = dof_map(basis)[elems]
    return np.einsum("pa,pa->p", vals, coeffs[dofs])


def eval_field(basis: BasisSet, coeffs: np.ndarray, x: float) -> float:
    """Evaluate the discrete field at a single point (x = +-L hit the seam)."""
    return float(eval_field_many(basis, coeffs, np.array([float(x)]))[0])


def nodal_points(basis: BasisSet) -> np.ndarray:
    """Interpolation points of the Lagrange dofs, in dof order."""
    if basis.kind is not BasisKind.CUBIC_LAGRANGE:
        raise UnsupportedBasisError("nodal points only exist for the Lagrange basis")
    x = basis.mesh.nodes
    h = basis.mesh.element_sizes
    pts = x[:-1, None] + h[:, None] * np.array([0.0, 1.0 / 3.0, 2.0 / 3.0])
    return pts.reshape(-1)


def node_values(basis: BasisSet, coeffs: np.ndarray) -> np.ndarray:
    """u^h at the M+1 mesh nodes (last value repeats the first)."""
    if basis.kind is BasisKind.CUBIC_LAGRANGE:
        vals = np.asarray(coeffs, dtype=float)[::3]
        return np.append(vals, vals[0])
    m = basis.num_elements
    vals = eval_field_many(basis, coeffs, basis.mesh.nodes[:m])
    return np.append(vals, vals[0])


def impose_function(basis: BasisSet, fn, n_quad: int = 8) -> np.ndarray:
    """Coefficients representing a smooth function on the trial space.

    Nodal interpolation for Lagrange dofs; global L2 projection (mass-matrix
    solve with an elementwise Gauss right-hand side) for B-spline dofs, whose
    coefficients are not nodal values.
    """
    if basis.kind is BasisKind.CUBIC_LAGRANGE:
        return np.asarray(fn(nodal_points(basis)), dtype=float)

    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    mesh = basis.mesh
    m = basis.num_elements
    rule = gauss_rule(n_quad)
    xi = 0.5 * (rule.points + 1.0)
    h = mesh.element_sizes
    x = mesh.nodes[:-1, None] + h[:, None] * xi[None, :]
    w = 0.5 * h[:, None] * rule.weights[None, :]
    elems = np.repeat(np.arange(m), n_quad)
    phi = eval_basis_many(basis, elems, np.tile(xi, m), 0).reshape(m, n_quad, 4)
    rhs = np.zeros(basis.dof_count)
    np.add.at(rhs, dof_map(basis), np.einsum("eq,eqa->ea", w * fn(x), phi))

    mass_blocks = np.einsum("eq,eqa,eqb->eab", w, phi, phi)
    dofs = dof_map(basis)
    rows = np.broadcast_to(dofs[:, :, None], mass_blocks.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], mass_blocks.shape).ravel()
    mass = sp.coo_matrix(
        (mass_blocks.ravel(), (rows, cols)), shape=(basis.dof_count, basis.dof_count)
    ).tocsc()
    return spla.splu(mass).solve(rhs)

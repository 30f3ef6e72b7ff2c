import numpy as np
import pytest

from bbmfem.assembly import (
    AssemblyCache,
    assemble_cross_mass,
    assemble_mass,
    assemble_skew_h1,
    assemble_skew_h2,
    assemble_stiffness,
    assemble_triple_product,
)
from bbmfem.basis import BasisKind, BasisSet, nodal_points
from bbmfem.errors import UnsupportedBasisError
from bbmfem.mesh import Mesh1D
from helpers import BOTH_KINDS, make_basis, random_mesh
import oracles


@pytest.fixture(params=BOTH_KINDS, ids=["lagrange", "bspline"])
def small_basis(request, rng):
    return make_basis(request.param, random_mesh(5, 1.0, rng))


class TestMass:
    def test_total_integral_is_domain_length(self, small_basis):
        a = assemble_mass(small_basis)
        assert a.sum() == pytest.approx(2.0, rel=1e-13)

    def test_row_sums_positive(self, small_basis):
        a = assemble_mass(small_basis)
        assert np.all(a.sum(axis=1) > 0)

    def test_symmetric_positive_definite(self, small_basis, rng):
        a = assemble_mass(small_basis)
        np.testing.assert_allclose(a, a.T, atol=1e-15)
        for _ in range(5):
            v = rng.normal(size=a.shape[0])
            assert v @ (a @ v) > 0

    def test_lagrange_element_matrix_closed_form(self):
        # Exact symbolic integration of the equispaced nodal cubics on one
        # reference element, scaled by the element width.
        sympy = pytest.importorskip("sympy")
        x = sympy.Symbol("x")
        nodes = [sympy.Rational(r, 3) for r in range(4)]
        polys = []
        for a in range(4):
            p = sympy.prod(
                (x - nodes[b]) / (nodes[a] - nodes[b]) for b in range(4) if b != a
            )
            polys.append(sympy.expand(p))
        exact = np.array(
            [
                [float(sympy.integrate(polys[a] * polys[b], (x, 0, 1))) for b in range(4)]
                for a in range(4)
            ]
        )
        mesh = Mesh1D.uniform(4, 2.0)  # h = 1 per element
        basis = BasisSet.cubic_lagrange(mesh)
        cache = AssemblyCache(basis)
        h = mesh.element_sizes[0]
        blocks = np.einsum("q,qa,qb->ab", cache.quad_w[0], cache.phi[0], cache.phi[0])
        np.testing.assert_allclose(blocks, exact * h, rtol=1e-13)


class TestStiffness:
    def test_row_sums_vanish(self, small_basis):
        e = assemble_stiffness(small_basis)
        np.testing.assert_allclose(e.sum(axis=1), 0.0, atol=1e-12)

    def test_constants_in_null_space(self, small_basis):
        e = assemble_stiffness(small_basis)
        np.testing.assert_allclose(e @ np.ones(e.shape[0]), 0.0, atol=1e-12)

    def test_energy_of_sine_matches_analytic(self):
        # u = nodal interpolant of sin(pi x / L): u^T E u approximates
        # the integral of u_x^2, which is (pi/L)^2 * L.
        half_length = 2.0
        mesh = Mesh1D.uniform(40, half_length)
        basis = BasisSet.cubic_lagrange(mesh)
        u = np.sin(np.pi * nodal_points(basis) / half_length)
        e = assemble_stiffness(basis)
        analytic = (np.pi / half_length) ** 2 * half_length
        assert u @ (e @ u) == pytest.approx(analytic, rel=1e-6)


class TestSkewH1:
    def test_zero_state_row_sums(self, small_basis):
        b1 = assemble_skew_h1(small_basis, np.zeros(small_basis.dof_count))
        np.testing.assert_allclose(b1.sum(axis=1), 0.0, atol=1e-13)

    def test_skew_symmetry_random_state(self, rng):
        for m in (5, 8, 13):
            basis = BasisSet.cubic_lagrange(random_mesh(m, 1.0, rng))
            u = rng.normal(size=basis.dof_count)
            b1 = assemble_skew_h1(basis, u)
            scale = np.abs(b1).max()
            assert np.abs(b1 + b1.T).max() <= 1e-12 * scale

    def test_constant_state_scales_zero_matrix(self, rng):
        # With u = c * ones the cubic term contributes (2c/3) times the
        # transport part and the u_x term vanishes, so
        # B(c) = (1 + 2c/3) B(0) by the partition of unity.
        basis = BasisSet.cubic_lagrange(random_mesh(6, 1.0, rng))
        c = 1.7
        b0 = assemble_skew_h1(basis, np.zeros(basis.dof_count))
        bc = assemble_skew_h1(basis, np.full(basis.dof_count, c))
        np.testing.assert_allclose(bc, (1.0 + 2.0 * c / 3.0) * b0, atol=1e-13)


class TestSkewH2:
    def test_requires_bspline(self):
        basis = BasisSet.cubic_lagrange(Mesh1D.uniform(5, 1.0))
        with pytest.raises(UnsupportedBasisError):
            assemble_skew_h2(basis)

    def test_skew_symmetry(self, rng):
        for m in (5, 8, 13):
            basis = BasisSet.periodic_bspline(random_mesh(m, 1.0, rng))
            b2 = assemble_skew_h2(basis)
            scale = np.abs(b2).max()
            assert np.abs(b2 + b2.T).max() <= 1e-12 * scale

    def test_annihilates_constants(self, rng):
        basis = BasisSet.periodic_bspline(random_mesh(8, 1.0, rng))
        b2 = assemble_skew_h2(basis)
        np.testing.assert_allclose(b2 @ np.ones(8), 0.0, atol=1e-11)

    def test_circulant_on_uniform_mesh(self):
        basis = BasisSet.periodic_bspline(Mesh1D.uniform(8, 1.0))
        b2 = assemble_skew_h2(basis)
        for i in range(1, 8):
            np.testing.assert_allclose(b2[i], np.roll(b2[0], i), atol=1e-11)

    def test_combined_operator_is_skew(self, rng):
        # (A+E)^{-1} B2 (A+E)^{-1} inherits skewness from B2.
        basis = BasisSet.periodic_bspline(random_mesh(8, 1.0, rng))
        a = assemble_mass(basis)
        e = assemble_stiffness(basis)
        b2 = assemble_skew_h2(basis)
        ae_inv = np.linalg.inv(a + e)
        s = ae_inv @ b2 @ ae_inv
        assert np.abs(s + s.T).max() <= 1e-10 * np.abs(s).max()


class TestTripleProduct:
    def test_total_is_domain_length(self, small_basis):
        d = assemble_triple_product(small_basis)
        assert d.total() == pytest.approx(2.0, rel=1e-13)

    def test_contracting_ones_gives_mass(self, small_basis):
        d = assemble_triple_product(small_basis)
        a = assemble_mass(small_basis)
        np.testing.assert_allclose(d.contract_one(np.ones(a.shape[0])), a, atol=1e-14)

    def test_permutation_symmetry(self, small_basis):
        # The six permutations sum identical terms in different orders, so
        # agreement is to float associativity (a few ulps), not bitwise.
        d = assemble_triple_product(small_basis).toarray()
        tol = 1e-15 * np.abs(d).max()
        np.testing.assert_allclose(d, d.transpose(1, 0, 2), atol=tol)
        np.testing.assert_allclose(d, d.transpose(0, 2, 1), atol=tol)
        np.testing.assert_allclose(d, d.transpose(2, 1, 0), atol=tol)

    def test_couples_only_shared_elements(self):
        basis = BasisSet.periodic_bspline(Mesh1D.uniform(10, 1.0))
        d = assemble_triple_product(basis).toarray()
        # dofs 0 and 5 share no element on 10 elements (supports 4 apart)
        assert np.abs(d[0, 5, :]).max() == 0.0


class TestCrossMass:
    def test_identical_meshes_reduce_to_mass(self, small_basis):
        c = assemble_cross_mass(small_basis, small_basis)
        a = assemble_mass(small_basis)
        np.testing.assert_allclose(c, a, atol=1e-14)

    def test_row_sum_identity(self, rng):
        basis_old = BasisSet.periodic_bspline(random_mesh(6, 1.0, rng))
        basis_new = BasisSet.periodic_bspline(random_mesh(6, 1.0, rng))
        c = assemble_cross_mass(basis_old, basis_new)
        a_new = assemble_mass(basis_new)
        np.testing.assert_allclose(c.sum(axis=1), a_new.sum(axis=1), atol=1e-13)

    def test_ones_map_consistently(self, rng):
        basis_old = BasisSet.cubic_lagrange(random_mesh(5, 1.0, rng))
        basis_new = BasisSet.cubic_lagrange(random_mesh(5, 1.0, rng))
        c = assemble_cross_mass(basis_old, basis_new)
        a_new = assemble_mass(basis_new)
        np.testing.assert_allclose(
            c @ np.ones(basis_old.dof_count), a_new @ np.ones(basis_new.dof_count),
            atol=1e-13,
        )


class TestAdaptiveQuadratureOracle:
    """Every assembled entry must match the independent adaptive reference."""

    def _entrywise_close(self, computed, reference, rtol=1e-12):
        scale = max(1.0, np.abs(reference).max())
        np.testing.assert_allclose(computed, reference, rtol=rtol, atol=rtol * scale)

    @pytest.mark.parametrize("kind", BOTH_KINDS)
    def test_mass_and_stiffness(self, kind, rng):
        basis = make_basis(kind, random_mesh(5, 1.0, rng))
        self._entrywise_close(assemble_mass(basis), oracles.ref_mass(basis))
        self._entrywise_close(assemble_stiffness(basis), oracles.ref_stiffness(basis))

    def test_skew_h1(self, rng):
        basis = BasisSet.cubic_lagrange(random_mesh(5, 1.0, rng))
        u = rng.normal(size=basis.dof_count)
        self._entrywise_close(assemble_skew_h1(basis, u), oracles.ref_skew_h1(basis, u))

    def test_skew_h2(self, rng):
        basis = BasisSet.periodic_bspline(random_mesh(5, 1.0, rng))
        self._entrywise_close(assemble_skew_h2(basis), oracles.ref_skew_h2(basis))

    def test_triple_product(self, rng):
        basis = BasisSet.periodic_bspline(random_mesh(5, 1.0, rng))
        d = assemble_triple_product(basis).toarray()
        self._entrywise_close(d, oracles.ref_triple(basis))

    def test_cross_mass(self, rng):
        basis_old = BasisSet.periodic_bspline(random_mesh(5, 1.0, rng))
        basis_new = BasisSet.periodic_bspline(random_mesh(5, 1.0, rng))
        c = assemble_cross_mass(basis_old, basis_new)
        self._entrywise_close(c, oracles.ref_cross_mass(basis_old, basis_new))


class TestAssemblyCache:
    def test_sparse_matches_dense(self, small_basis, rng):
        cache = AssemblyCache(small_basis)
        np.testing.assert_allclose(cache.A.toarray(), assemble_mass(small_basis), atol=1e-15)
        np.testing.assert_allclose(
            cache.E.toarray(), assemble_stiffness(small_basis), atol=1e-15
        )

    def test_skew_h1_paths_agree(self, rng):
        basis = BasisSet.cubic_lagrange(random_mesh(6, 1.0, rng))
        cache = AssemblyCache(basis)
        w = rng.normal(size=basis.dof_count)
        v = rng.normal(size=basis.dof_count)
        direct = assemble_skew_h1(basis, w) @ v
        np.testing.assert_allclose(cache.skew_h1_apply(w, v), direct, atol=1e-13)
        np.testing.assert_allclose(
            cache.skew_h1(w).toarray(), assemble_skew_h1(basis, w), atol=1e-15
        )

    def test_quadratic_jacobian_matches_fd(self, rng):
        basis = BasisSet.cubic_lagrange(random_mesh(5, 1.0, rng))
        cache = AssemblyCache(basis)
        g = rng.normal(size=basis.dof_count)
        jac = cache.skew_h1_quadratic_jacobian(g).toarray()
        eps = 1e-7
        fd = np.empty_like(jac)
        for k in range(g.size):
            step = np.zeros_like(g)
            step[k] = eps
            fd[:, k] = (
                cache.skew_h1_apply(g + step, g + step) - cache.skew_h1_apply(g - step, g - step)
            ) / (2 * eps)
        np.testing.assert_allclose(jac, fd, atol=1e-6)

    def test_weighted_mass_matches_triple_contraction(self, rng):
        basis = BasisSet.periodic_bspline(random_mesh(6, 1.0, rng))
        cache = AssemblyCache(basis)
        w = rng.normal(size=basis.dof_count)
        np.testing.assert_allclose(
            cache.weighted_mass(w), cache.D.contract_one(w), atol=1e-13
        )

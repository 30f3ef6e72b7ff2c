import numpy as np
import pytest
from hypothesis import given, strategies as st

from bbmfem.errors import DimensionMismatchError, InvalidMeshError
from bbmfem.mesh import (
    Mesh1D,
    MonitorSamples,
    check_equidistribution,
    equidistribute_deboor,
    monitor_arc_length,
    smooth_monitor,
)
from helpers import random_mesh


class TestMesh1D:
    def test_uniform(self):
        mesh = Mesh1D.uniform(8, 2.0)
        assert mesh.num_elements == 8
        np.testing.assert_allclose(mesh.element_sizes, 0.5)

    def test_rejects_non_monotone(self):
        nodes = np.linspace(-1, 1, 9)
        nodes[3] = nodes[5]
        with pytest.raises(InvalidMeshError):
            Mesh1D(nodes, 1.0)

    def test_rejects_bad_endpoints(self):
        with pytest.raises(InvalidMeshError):
            Mesh1D(np.linspace(-1, 1, 9), 2.0)

    def test_rejects_too_few_elements(self):
        with pytest.raises(InvalidMeshError):
            Mesh1D(np.linspace(-1, 1, 4), 1.0)


class TestMonitorArcLength:
    def test_constant_field_gives_unit_monitor(self):
        mesh = Mesh1D.uniform(10, 3.0)
        mon = monitor_arc_length(np.full(11, 5.0), mesh, k=1.0)
        np.testing.assert_allclose(mon.values, 1.0)

    def test_zero_intensity_gives_unit_monitor(self, rng):
        mesh = random_mesh(8, 1.0, rng)
        u = rng.normal(size=9)
        mon = monitor_arc_length(u, mesh, k=0.0)
        np.testing.assert_allclose(mon.values, 1.0)

    def test_linear_profile_interior_values(self):
        # u(x) = x has unit central-difference slope away from the seam,
        # so the k = 2 monitor equals sqrt(5) at the interior nodes.
        mesh = Mesh1D.uniform(8, 1.0)
        mon = monitor_arc_length(mesh.nodes.copy(), mesh, k=2.0)
        np.testing.assert_allclose(mon.values[1:-1][:-1], np.sqrt(5.0), rtol=1e-14)

    def test_length_mismatch_raises(self):
        mesh = Mesh1D.uniform(8, 1.0)
        with pytest.raises(DimensionMismatchError):
            monitor_arc_length(np.zeros(7), mesh, k=1.0)

    def test_periodic_seam_value(self):
        mesh = Mesh1D.uniform(8, 1.0)
        u = np.sin(np.pi * mesh.nodes)
        mon = monitor_arc_length(u, mesh, k=1.0)
        assert mon.values[0] == mon.values[-1]


class TestCheckEquidistribution:
    def test_uniform_constant_is_zero(self):
        mesh = Mesh1D.uniform(6, 1.0)
        mon = MonitorSamples(np.ones(7))
        assert check_equidistribution(mesh, mon) == pytest.approx(0.0, abs=1e-13)

    def test_alternating_samples_hand_value(self):
        # Uniform M=4 on [-1,1]: values (1,3,1,3,1) give equal trapezoid
        # integrals of 1 on every element, hence zero residual.
        mesh = Mesh1D.uniform(4, 1.0)
        assert check_equidistribution(mesh, MonitorSamples(np.array([1.0, 3, 1, 3, 1]))) == 0.0

    def test_hump_samples_hand_value(self):
        # Values (1,2,3,2,1) on the same mesh: element integrals
        # (0.75, 1.25, 1.25, 0.75), total 4, worst ratio error 0.25.
        mesh = Mesh1D.uniform(4, 1.0)
        res = check_equidistribution(mesh, MonitorSamples(np.array([1.0, 2, 3, 2, 1])))
        assert res == pytest.approx(0.25, abs=1e-15)


class TestEquidistribute:
    def test_constant_monitor_yields_exact_uniform(self, rng):
        mesh = random_mesh(9, 2.0, rng)
        mon = MonitorSamples(np.ones(10))
        out = equidistribute_deboor(mesh, mon, max_sweeps=1, tol=1e-12)
        np.testing.assert_allclose(out.nodes, np.linspace(-2, 2, 10), atol=1e-14)

    def test_fixed_point_keeps_nodes(self):
        mesh = Mesh1D.uniform(8, 1.0)
        mon = MonitorSamples(np.ones(9))
        out = equidistribute_deboor(mesh, mon, max_sweeps=5, tol=1e-3)
        np.testing.assert_allclose(out.nodes, mesh.nodes, atol=1e-3 * 2.0)

    def test_single_sweep_spike_matches_hand_inverse(self):
        # Spiked monitor (1,1,1,1,9,1,1,1,1) on the uniform M=8 mesh over
        # [-1,1].  Hand inversion of the piecewise-quadratic cumulative:
        # targets i/8 of total 4 land at the values below (root of
        # w0*d + s*d^2/2 = tau inside the spike panels).
        mesh = Mesh1D.uniform(8, 1.0)
        vals = np.array([1.0, 1, 1, 1, 9, 1, 1, 1, 1])
        out = equidistribute_deboor(mesh, MonitorSamples(vals), max_sweeps=1, tol=1e-300)
        r17 = np.sqrt(17.0)
        expected = np.array(
            [
                -1.0,
                -0.5,
                -0.25 + (r17 - 1.0) / 32.0,
                -1.0 / 16.0,
                0.0,
                1.0 / 16.0,
                (9.0 - r17) / 32.0,
                0.5,
                1.0,
            ]
        )
        np.testing.assert_allclose(out.nodes, expected, atol=1e-14)

    def test_iterated_spike_hits_tolerance_and_clusters(self):
        mesh = Mesh1D.uniform(8, 1.0)
        vals = np.array([1.0, 1, 1, 1, 9, 1, 1, 1, 1])
        out = equidistribute_deboor(mesh, MonitorSamples(vals), max_sweeps=60, tol=1e-3)
        resampled = MonitorSamples(np.interp(out.nodes, mesh.nodes, vals))
        assert check_equidistribution(out, resampled) <= 1e-3
        # symmetric clustering around the spike
        np.testing.assert_allclose(out.nodes, -out.nodes[::-1], atol=1e-12)
        sizes = out.element_sizes
        assert sizes[3] < sizes[0] and sizes[4] < sizes[7]

    def test_preserves_count_endpoints_monotonicity(self, rng):
        mesh = random_mesh(12, 1.5, rng)
        vals = 1.0 + rng.uniform(0, 4, 13)
        vals[-1] = vals[0]
        out = equidistribute_deboor(mesh, MonitorSamples(vals))
        assert out.num_elements == mesh.num_elements
        assert out.nodes[0] == -1.5 and out.nodes[-1] == 1.5
        assert np.all(np.diff(out.nodes) > 0)

    def test_idempotent_at_fixed_point(self, rng):
        mesh = random_mesh(10, 1.0, rng)
        vals = 1.0 + rng.uniform(0, 3, 11)
        vals[-1] = vals[0]
        tol = 1e-4
        first = equidistribute_deboor(mesh, MonitorSamples(vals), max_sweeps=80, tol=tol)
        resampled = MonitorSamples(np.interp(first.nodes, mesh.nodes, vals))
        second = equidistribute_deboor(first, resampled, max_sweeps=80, tol=tol)
        assert np.abs(second.nodes - first.nodes).max() <= tol * 2.0

    @given(
        seed=st.integers(0, 10_000),
        num_elements=st.sampled_from([5, 8, 13]),
        spike=st.floats(1.0, 50.0),
    )
    def test_property_invariants(self, seed, num_elements, spike):
        r = np.random.default_rng(seed)
        mesh = random_mesh(num_elements, 1.0, r)
        vals = 1.0 + r.uniform(0, spike, num_elements + 1)
        vals[-1] = vals[0]
        out = equidistribute_deboor(mesh, MonitorSamples(vals), max_sweeps=4, tol=0.05)
        assert out.nodes[0] == -1.0 and out.nodes[-1] == 1.0
        assert np.all(np.diff(out.nodes) > 0)
        assert out.num_elements == num_elements


class TestSmoothing:
    def test_constant_is_invariant(self):
        mon = MonitorSamples(np.full(9, 3.0))
        out = smooth_monitor(mon)
        np.testing.assert_allclose(out.values, 3.0)

    def test_damps_oscillation(self):
        vals = np.array([1.0, 2, 1, 2, 1, 2, 1, 2, 1])
        out = smooth_monitor(MonitorSamples(vals))
        assert out.values.max() - out.values.min() < vals.max() - vals.min()
        assert out.values[0] == out.values[-1]

"""Periodic 1D meshes and r-adaptivity by monitor-function equidistribution.

The mesh covers [-L, L] with M elements; node 0 and node M are the same
physical point.  Adaptivity moves the interior nodes so that every element
carries (approximately) the same integral of a monitor function, using
de Boor's inverse-CDF sweep iterated to a residual tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMonitorError, DimensionMismatchError, InvalidMeshError

# Elements are never allowed to shrink below this fraction of the uniform size.
MIN_ELEMENT_FRACTION = 1e-3

DEFAULT_EQUIDISTRIBUTION_TOL = 0.05
DEFAULT_MAX_SWEEPS = 5


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Ordered periodic node positions x_0 < ... < x_M on [-L, L]."""

    nodes: np.ndarray
    half_length: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 5:
            raise InvalidMeshError("need at least M = 4 elements (5 nodes)")
        if not (self.half_length > 0):
            raise InvalidMeshError("half_length must be positive")
        if nodes[0] != -self.half_length or nodes[-1] != self.half_length:
            raise InvalidMeshError("mesh endpoints must be exactly -L and +L")
        if not np.all(np.diff(nodes) > 0):
            raise InvalidMeshError("mesh nodes must be strictly increasing")

    @classmethod
    def uniform(cls, num_elements: int, half_length: float) -> "Mesh1D":
        nodes = np.linspace(-half_length, half_length, num_elements + 1)
        nodes[0] = -half_length
        nodes[-1] = half_length
        return cls(nodes, half_length)

    @property
    def num_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    def with_nodes(self, nodes: np.ndarray) -> "Mesh1D":
        return Mesh1D(nodes, self.half_length)


@dataclass(frozen=True, eq=False)
class MonitorSamples:
    """Monitor function sampled at the M+1 mesh nodes (values[M] == values[0])."""

    values: np.ndarray
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def monitor_arc_length(state_nodes: np.ndarray, mesh: Mesh1D, k: float) -> MonitorSamples:
    """Generalized arc-length monitor sqrt(1 + k^2 u_x^2) at the mesh nodes.

    u_x is approximated by the periodic central difference; the neighbours of
    the seam node wrap with a +-2L coordinate shift.
    """
    u = np.asarray(state_nodes, dtype=float)
    if u.shape != mesh.nodes.shape:
        raise DimensionMismatchError(
            f"expected {mesh.nodes.size} nodal values, got {u.size}"
        )
    # Node M duplicates node 0; the wrap below always reads index 0.
    m = mesh.num_elements
    two_l = 2.0 * mesh.half_length
    x = mesh.nodes[:m]  # unique nodes
    uu = u[:m]
    x_right = np.roll(x, -1).copy()
    x_right[-1] += two_l
    x_left = np.roll(x, 1).copy()
    x_left[0] -= two_l
    deriv = (np.roll(uu, -1) - np.roll(uu, 1)) / (x_right - x_left)

    values = np.sqrt(1.0 + (k * deriv) ** 2)
    values = np.append(values, values[0])
    return MonitorSamples(values, k=k)


def smooth_monitor(monitor: MonitorSamples, passes: int = 1) -> MonitorSamples:
    """Periodic 3-point moving average with weights (1/4, 1/2, 1/4)."""
    vals = monitor.values[:-1].copy()
    for _ in range(passes):
        vals = 0.25 * np.roll(vals, 1) + 0.5 * vals + 0.25 * np.roll(vals, -1)
    return MonitorSamples(np.append(vals, vals[0]), k=monitor.k)


def _interval_integrals(mesh: Mesh1D, monitor: MonitorSamples) -> np.ndarray:
    """Exact integrals of the piecewise-linear monitor over each element."""
    w = monitor.values
    if w.shape != mesh.nodes.shape:
        raise DimensionMismatchError("monitor not sampled on this mesh")
    return 0.5 * (w[:-1] + w[1:]) * mesh.element_sizes


def check_equidistribution(mesh: Mesh1D, monitor: MonitorSamples) -> float:
    """max_i |M * integral_i / total - 1| for the piecewise-linear monitor."""
    integrals = _interval_integrals(mesh, monitor)
    total = integrals.sum()
    if total <= 0.0:
        raise DegenerateMonitorError("monitor integrates to zero")
    return float(np.abs(mesh.num_elements * integrals / total - 1.0).max())


def _invert_cumulative(mesh: Mesh1D, monitor: MonitorSamples) -> np.ndarray:
    """One de Boor sweep: place node i where the cumulative monitor integral
    reaches i/M of the total.  The piecewise-linear monitor has a piecewise
    quadratic cumulative integral which is inverted exactly per panel."""
    m = mesh.num_elements
    x = mesh.nodes
    w = monitor.values
    integrals = _interval_integrals(mesh, monitor)
    cum = np.concatenate(([0.0], np.cumsum(integrals)))
    total = cum[-1]
    if total <= 0.0:
        raise DegenerateMonitorError("monitor integrates to zero")

    targets = total * np.arange(1, m) / m
    panel = np.searchsorted(cum, targets, side="right") - 1
    panel = np.clip(panel, 0, m - 1)
    tau = targets - cum[panel]
    w0 = w[panel]
    slope = (w[panel + 1] - w[panel]) / (x[panel + 1] - x[panel])
    # Stable root of w0*d + slope*d^2/2 = tau (reduces to tau/w0 as slope -> 0).
    disc = np.sqrt(np.maximum(w0 * w0 + 2.0 * slope * tau, 0.0))
    d = 2.0 * tau / (w0 + disc)
    new_nodes = np.concatenate(([x[0]], x[panel] + d, [x[-1]]))

    # Floor tiny elements, then rescale spacings so the endpoints stay at +-L.
    h = np.diff(new_nodes)
    h_min = MIN_ELEMENT_FRACTION * (2.0 * mesh.half_length / m)
    if h.min() < h_min:
        h = np.maximum(h, h_min)
        h *= 2.0 * mesh.half_length / h.sum()
        new_nodes = mesh.nodes[0] + np.concatenate(([0.0], np.cumsum(h)))
        new_nodes[-1] = mesh.nodes[-1]
    return new_nodes


def equidistribute_deboor(
    mesh: Mesh1D,
    monitor: MonitorSamples,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    tol: float = DEFAULT_EQUIDISTRIBUTION_TOL,
) -> Mesh1D:
    """Equidistribute the monitor over the mesh by iterated de Boor sweeps.

    The input samples define the monitor as one fixed piecewise-linear
    function.  Each sweep resamples it linearly onto the current nodes and
    inverts the cumulative integral; iteration stops once the residual of
    `check_equidistribution` (with the monitor resampled the same way) drops
    below tol, so callers can verify the result with exactly that check.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cur_mesh = mesh
    cur_monitor = monitor
    for _ in range(max_sweeps):
        new_nodes = _invert_cumulative(cur_mesh, cur_monitor)
        new_values = np.interp(new_nodes, mesh.nodes, monitor.values)
        cur_mesh = mesh.with_nodes(new_nodes)
        cur_monitor = MonitorSamples(new_values, k=monitor.k)
        if check_equidistribution(cur_mesh, cur_monitor) <= tol:
            break
    return cur_mesh

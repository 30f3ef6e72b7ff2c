"""Shared test utilities: randomized periodic meshes and field builders."""

import numpy as np

from bbmfem.basis import BasisKind, BasisSet
from bbmfem.mesh import Mesh1D


def random_mesh(num_elements, half_length, rng, jitter=0.3):
    """Non-uniform periodic mesh: uniform nodes with bounded interior jitter."""
    nodes = np.linspace(-half_length, half_length, num_elements + 1)
    h = 2.0 * half_length / num_elements
    nodes[1:-1] += rng.uniform(-jitter, jitter, num_elements - 1) * h
    return Mesh1D(nodes, half_length)


def make_basis(kind, mesh):
    if kind is BasisKind.CUBIC_LAGRANGE:
        return BasisSet.cubic_lagrange(mesh)
    return BasisSet.periodic_bspline(mesh)


BOTH_KINDS = (BasisKind.CUBIC_LAGRANGE, BasisKind.PERIODIC_CUBIC_BSPLINE)

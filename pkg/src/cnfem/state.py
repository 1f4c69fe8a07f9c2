"""Deformation state: mesh plus the two BFS component fields.

A state owns per-mesh cached tabulations (Gauss and midpoint rules, DOF
scatter maps, midpoint pairwise distances) that are shared between all
states on the same mesh, so the solver can rebuild states from flat DOF
vectors cheaply.  The flat layout is ``[y1 table row-major, y2 table
row-major]`` with ``8 * nn`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .mesh import MeshGrid, element_midpoints
from .bfs import (BfsField, QuadTabulation, gauss_tabulation,
                  midpoint_tabulation, identity_deformation)


class MeshTables:
    """Per-mesh cached quadrature tabulations and geometry arrays."""

    def __init__(self, mesh: MeshGrid):
        self.mesh = mesh
        self.gauss: QuadTabulation = gauss_tabulation(mesh.element_size)
        self.mid: QuadTabulation = midpoint_tabulation(mesh.element_size)
        # global DOF index (within one component's 4*nn vector) per local DOF
        self.dofmap = (4 * mesh.elements[:, :, None]
                       + np.arange(4)).reshape(mesh.ne, 16)
        hx, hy = mesh.element_size
        ll = mesh.nodes[mesh.elements[:, 0]]
        self.gauss_xy = (ll[:, None, :]
                         + self.gauss.points[None, :, :] * np.array([hx, hy]))
        self.midpoints = element_midpoints(mesh)
        self.ref_dist = squareform(pdist(self.midpoints))
        self.areas = mesh.element_areas()


@dataclass
class DeformationState:
    """Mesh, the two deformation component fields, and shared caches."""

    mesh: MeshGrid
    y1: BfsField
    y2: BfsField
    tables: MeshTables
    _edofs: tuple | None = field(default=None, repr=False)
    _deformed_mid: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def create(cls, mesh: MeshGrid, y1: BfsField | None = None,
               y2: BfsField | None = None,
               tables: MeshTables | None = None) -> "DeformationState":
        if (y1 is None) != (y2 is None):
            raise ValueError("provide both component fields or neither")
        if y1 is None:
            y1, y2 = identity_deformation(mesh)
        if y1.mesh is not mesh or y2.mesh is not mesh:
            raise ValueError("component fields must reference the state mesh")
        return cls(mesh, y1, y2, tables or MeshTables(mesh))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.y1.flat(), self.y2.flat()])

    @property
    def ndof(self) -> int:
        return 8 * self.mesh.nn

    def with_flat(self, vec) -> "DeformationState":
        """New state on the same mesh/tables from a flat 8*nn vector."""
        vec = np.asarray(vec, dtype=float)
        n4 = 4 * self.mesh.nn
        if vec.shape != (2 * n4,):
            raise ValueError(f"flat vector must have {2 * n4} entries")
        return DeformationState(
            self.mesh,
            BfsField.from_flat(self.mesh, vec[:n4]),
            BfsField.from_flat(self.mesh, vec[n4:]),
            self.tables,
        )

    def element_dofs(self) -> tuple[np.ndarray, np.ndarray]:
        """(ne, 16) local DOF tables of both components (cached)."""
        if self._edofs is None:
            self._edofs = (self.y1.element_dofs(), self.y2.element_dofs())
        return self._edofs

    def deformed_midpoints(self) -> np.ndarray:
        """Deformed element midpoints y(m_i), shape (ne, 2) (cached)."""
        if self._deformed_mid is None:
            e1, e2 = self.element_dofs()
            phi0 = self.tables.mid.phi[0]
            self._deformed_mid = np.column_stack([e1 @ phi0, e2 @ phi0])
        return self._deformed_mid

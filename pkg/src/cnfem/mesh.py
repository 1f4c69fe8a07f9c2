"""Uniform rectangular meshes for the planar domains used by the solver.

All meshes are unions of axis-aligned rectangles of identical size
``(hx, hy)``.  Nodes are numbered row-major per body; each element lists
its four corner nodes counter-clockwise starting at the lower-left one.
Bodies that merely touch (two-box domain) keep duplicated nodes along the
common interface so their degrees of freedom stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np


class InvalidSpecError(ValueError):
    """A domain specification cannot produce a valid mesh."""


@dataclass(frozen=True)
class MeshGrid:
    """Union of same-sized rectangular elements with connectivity data.

    Attributes
    ----------
    nodes : (nn, 2) float array of node coordinates.
    elements : (ne, 4) int array; corners counter-clockwise from lower-left.
    element_size : (hx, hy).
    body_id : (ne,) int label of the (possibly disconnected) body.
    node_body : (nn,) int body label per node.
    boundary_node : (nn,) bool, node lies on its body's boundary.
    boundary_element : (ne,) bool, element has an edge on its body's boundary.
    neighbors : (ne, 4) int, edge-neighbor per local edge (-1 if none).
    node_tags : named node index sets (e.g. "dirichlet" for the pincers).
    """

    nodes: np.ndarray
    elements: np.ndarray
    element_size: tuple[float, float]
    body_id: np.ndarray
    node_body: np.ndarray
    boundary_node: np.ndarray
    boundary_element: np.ndarray
    neighbors: np.ndarray
    node_tags: dict = field(default_factory=dict)

    @property
    def nn(self) -> int:
        return self.nodes.shape[0]

    @property
    def ne(self) -> int:
        return self.elements.shape[0]

    @property
    def element_area(self) -> float:
        hx, hy = self.element_size
        return hx * hy

    def element_areas(self) -> np.ndarray:
        return np.full(self.ne, self.element_area)


# local edges of an element [ll, lr, ur, ul]: bottom, right, top, left
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def _connectivity(nodes, elements):
    """Edge-based neighbors plus boundary flags for elements and nodes."""
    ne = elements.shape[0]
    neighbors = np.full((ne, 4), -1, dtype=np.int64)
    boundary_element = np.zeros(ne, dtype=bool)
    boundary_node = np.zeros(nodes.shape[0], dtype=bool)

    edge_owner: dict[tuple[int, int], tuple[int, int]] = {}
    for e in range(ne):
        for k, (a, b) in enumerate(_EDGES):
            key = (int(elements[e, a]), int(elements[e, b]))
            key = (min(key), max(key))
            if key in edge_owner:
                e2, k2 = edge_owner.pop(key)
                neighbors[e, k] = e2
                neighbors[e2, k2] = e
            else:
                edge_owner[key] = (e, k)
    for (a, b), (e, _k) in edge_owner.items():
        boundary_element[e] = True
        boundary_node[a] = True
        boundary_node[b] = True
    return neighbors, boundary_element, boundary_node


def _finalize(nodes, elements, element_size, body_id, node_body, node_tags=None):
    hx, hy = element_size
    corners = nodes[elements]
    dx = corners[:, 1, 0] - corners[:, 0, 0]
    dy = corners[:, 3, 1] - corners[:, 0, 1]
    if not (np.allclose(dx, hx, rtol=0, atol=1e-12 * hx)
            and np.allclose(dy, hy, rtol=0, atol=1e-12 * hy)):
        raise InvalidSpecError("element corner spacing disagrees with element_size")
    neighbors, belem, bnode = _connectivity(nodes, elements)
    return MeshGrid(
        nodes=nodes,
        elements=elements,
        element_size=(float(hx), float(hy)),
        body_id=body_id,
        node_body=node_body,
        boundary_node=bnode,
        boundary_element=belem,
        neighbors=neighbors,
        node_tags=node_tags or {},
    )


@dataclass
class DomainSpec:
    """Geometry and resolution of one of the supported domains.

    ``kind`` selects which of the remaining fields matter:

    - ``box``: ``origin``, ``size``, ``nx``, ``ny``
    - ``two_box``: ``box1``, ``box2`` as ((x0,x1),(y0,y1)), ``nx``, ``ny``
      (vertical count of box1) and ``ny2`` (box2, defaults to equal spacing)
    - ``pincers``: ``bbox``, slot parameters, optional hinge hole, ``nx``, ``ny``
    """

    kind: str
    nx: int = 8
    ny: int = 8
    origin: tuple = (0.0, 0.0)
    size: tuple = (1.0, 1.0)
    box1: tuple = ((0.0, 2.0), (0.5, 1.5))
    box2: tuple = ((0.0, 2.0), (-1.5, 0.5))
    ny2: int | None = None
    bbox: tuple = ((-3.0, 2.0), (-1.5, 1.5))
    slot_halfwidth: float = 0.05
    slot_slope: float = 0.2
    slot_start: float = 0.0
    hinge_radius: float = 0.0
    dirichlet_halfspan: float = 0.5


def _grid(origin, size, nx, ny):
    """Row-major node grid and CCW element connectivity for one box."""
    x = origin[0] + size[0] * np.arange(nx + 1) / nx
    y = origin[1] + size[1] * np.arange(ny + 1) / ny
    xx, yy = np.meshgrid(x, y, indexing="xy")  # row-major: y outer, x inner
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ix = ix.ravel()
    iy = iy.ravel()
    n0 = iy * (nx + 1) + ix
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return nodes, elements.astype(np.int64)


def build_box_mesh(origin, size, nx, ny, body=0) -> MeshGrid:
    """Uniform mesh of the rectangle ``origin + [0,size[0]]x[0,size[1]]``."""
    if nx < 1 or ny < 1:
        raise InvalidSpecError(f"resolution must be >= 1, got nx={nx}, ny={ny}")
    if size[0] <= 0 or size[1] <= 0:
        raise InvalidSpecError(f"box size must be positive, got {size}")
    nodes, elements = _grid(origin, size, nx, ny)
    ne = elements.shape[0]
    return _finalize(
        nodes, elements, (size[0] / nx, size[1] / ny),
        np.full(ne, body, dtype=np.int64),
        np.full(nodes.shape[0], body, dtype=np.int64),
    )


def build_two_box_domain(spec: DomainSpec) -> MeshGrid:
    """Two independently meshed boxes; coincident interface nodes stay distinct."""
    if spec.kind != "two_box":
        raise InvalidSpecError(f"expected kind 'two_box', got {spec.kind!r}")
    (x10, x11), (y10, y11) = spec.box1
    (x20, x21), (y20, y21) = spec.box2
    if x11 <= x10 or y11 <= y10 or x21 <= x20 or y21 <= y20:
        raise InvalidSpecError("degenerate box extents")
    if x10 < x21 and x20 < x11 and y10 < y21 and y20 < y11:
        raise InvalidSpecError("two_box interiors overlap")

    nx = spec.nx
    ny1 = spec.ny
    ny2 = spec.ny2
    if ny2 is None:
        hy = (y11 - y10) / ny1
        ny2 = int(round((y21 - y20) / hy))
    h1 = ((x11 - x10) / nx, (y11 - y10) / ny1)
    h2 = ((x21 - x20) / nx, (y21 - y20) / ny2)
    if not np.allclose(h1, h2, rtol=1e-12, atol=0):
        raise InvalidSpecError(f"bodies have unequal element sizes {h1} vs {h2}")

    n1, e1 = _grid((x10, y10), (x11 - x10, y11 - y10), nx, ny1)
    n2, e2 = _grid((x20, y20), (x21 - x20, y21 - y20), nx, ny2)
    nodes = np.vstack([n1, n2])
    elements = np.vstack([e1, e2 + n1.shape[0]])
    body_id = np.concatenate([
        np.zeros(e1.shape[0], dtype=np.int64),
        np.ones(e2.shape[0], dtype=np.int64),
    ])
    node_body = np.concatenate([
        np.zeros(n1.shape[0], dtype=np.int64),
        np.ones(n2.shape[0], dtype=np.int64),
    ])
    return _finalize(nodes, elements, h1, body_id, node_body)


def _pincers_inside(mx, my, spec: DomainSpec):
    """Midpoint membership test for the pincers region."""
    inside = np.ones_like(mx, dtype=bool)
    in_slot = mx > spec.slot_start
    w = spec.slot_halfwidth + spec.slot_slope * (mx - spec.slot_start)
    inside &= ~(in_slot & (np.abs(my) < w))
    if spec.hinge_radius > 0:
        inside &= mx * mx + my * my >= spec.hinge_radius ** 2
    return inside


def build_pincers_domain(spec: DomainSpec) -> MeshGrid:
    """Pincers: bounding rectangle minus an opening slot (and optional hinge hole).

    Elements are kept iff their midpoint lies in the region, so the curved
    outline is staircase-approximated.  Nodes of the retained elements keep
    their row-major order.  Nodes on the segment {0} x (-halfspan, halfspan)
    are tagged "dirichlet".
    """
    if spec.kind != "pincers":
        raise InvalidSpecError(f"expected kind 'pincers', got {spec.kind!r}")
    if spec.nx < 1 or spec.ny < 1:
        raise InvalidSpecError("resolution must be >= 1 in each direction")
    (x0, x1), (y0, y1) = spec.bbox
    nodes, elements = _grid((x0, y0), (x1 - x0, y1 - y0), spec.nx, spec.ny)
    hx = (x1 - x0) / spec.nx
    hy = (y1 - y0) / spec.ny

    mids = nodes[elements].mean(axis=1)
    keep = _pincers_inside(mids[:, 0], mids[:, 1], spec)
    if not keep.any():
        raise InvalidSpecError("pincers spec removes every element")
    elements = elements[keep]

    used = np.unique(elements)
    renumber = np.full(nodes.shape[0], -1, dtype=np.int64)
    renumber[used] = np.arange(used.size)
    nodes = nodes[used]
    elements = renumber[elements]

    ne = elements.shape[0]
    mesh = _finalize(
        nodes, elements, (hx, hy),
        np.zeros(ne, dtype=np.int64),
        np.zeros(nodes.shape[0], dtype=np.int64),
    )
    if _component_count(mesh) != 1:
        raise InvalidSpecError("pincers slot disconnects the body")

    tol = 1e-9 * max(hx, hy)
    dir_mask = (np.abs(nodes[:, 0]) < tol) & (
        np.abs(nodes[:, 1]) < spec.dirichlet_halfspan - tol)
    mesh.node_tags["dirichlet"] = np.nonzero(dir_mask)[0]
    return mesh


def build_domain(spec: DomainSpec) -> MeshGrid:
    if spec.kind == "box":
        return build_box_mesh(spec.origin, spec.size, spec.nx, spec.ny)
    if spec.kind == "two_box":
        return build_two_box_domain(spec)
    if spec.kind == "pincers":
        return build_pincers_domain(spec)
    raise InvalidSpecError(f"unknown domain kind {spec.kind!r}")


def _component_count(mesh: MeshGrid) -> int:
    """Connected components of the element adjacency graph (flood fill)."""
    seen = np.zeros(mesh.ne, dtype=bool)
    count = 0
    for start in range(mesh.ne):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            e = stack.pop()
            for nb in mesh.neighbors[e]:
                if nb >= 0 and not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
    return count


def element_midpoints(mesh: MeshGrid) -> np.ndarray:
    """Centroids of all elements, shape (ne, 2)."""
    return mesh.nodes[mesh.elements].mean(axis=1)


def boundary_elements(mesh: MeshGrid) -> np.ndarray:
    """Indices of elements with at least one edge on their body's boundary."""
    return np.nonzero(mesh.boundary_element)[0]


def mesh_to_dict(mesh: MeshGrid) -> dict:
    return {
        "nodes": mesh.nodes.tolist(),
        "elements": mesh.elements.tolist(),
        "element_size": list(mesh.element_size),
        "body_id": mesh.body_id.tolist(),
        "boundary_nodes": mesh.boundary_node.astype(int).tolist(),
        "boundary_elements": mesh.boundary_element.astype(int).tolist(),
        "node_tags": {k: v.tolist() for k, v in mesh.node_tags.items()},
    }


def save_mesh_json(mesh: MeshGrid, path) -> None:
    with open(path, "w") as f:
        json.dump(mesh_to_dict(mesh), f)

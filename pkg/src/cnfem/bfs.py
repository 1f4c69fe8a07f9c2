"""Bogner-Fox-Schmit bicubic Hermite elements on rectangles.

One scalar C1 field is stored as an (nn, 4) table holding, per node,
(value, d/dx1, d/dx2, d2/dx1dx2) in physical units.  Local coordinates on
each element live in [0,1]^2; the 16 element basis functions are tensor
products of the four cubic Hermite polynomials, with derivative degrees of
freedom scaled by the element size so the stored values are physical
derivatives.

Local basis ordering is node-major over the element corners
[lower-left, lower-right, upper-right, upper-left], four functions per
corner in the DOF-column order above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshGrid


class ConfigurationError(ValueError):
    """Tabulation and mesh disagree (e.g. on element size)."""


class InterpolationError(ValueError):
    """A nodal value or derivative required for interpolation is not finite."""


def hermite_basis_1d(xi, order: int = 0) -> np.ndarray:
    """Cubic Hermite polynomials (H00, H10, H01, H11) on [0, 1].

    ``order`` selects the derivative (0, 1 or 2).  Returns an array of
    shape (4,) + shape(xi).  The slope functions H10/H11 are in unit local
    scaling; physical scaling happens at tabulation time.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < -1e-14) or np.any(xi > 1 + 1e-14):
        raise ValueError(f"local coordinate outside [0, 1]: {xi}")
    if order == 0:
        return np.stack([
            1 - 3 * xi**2 + 2 * xi**3,
            xi - 2 * xi**2 + xi**3,
            3 * xi**2 - 2 * xi**3,
            -(xi**2) + xi**3,
        ])
    if order == 1:
        return np.stack([
            -6 * xi + 6 * xi**2,
            1 - 4 * xi + 3 * xi**2,
            6 * xi - 6 * xi**2,
            -2 * xi + 3 * xi**2,
        ])
    if order == 2:
        return np.stack([
            -6 + 12 * xi,
            -4 + 6 * xi,
            6 - 12 * xi,
            -2 + 6 * xi,
        ])
    raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")


@dataclass(frozen=True)
class QuadTabulation:
    """Basis values at fixed local points, scaled for one element size.

    phi : (npts, 16) basis values.
    grad : (npts, 16, 2) physical first derivatives.
    hess : (npts, 16, 3) physical (d11, d12, d22).
    weights : (npts,) quadrature weights scaled by element area.
    """

    points: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    element_size: tuple[float, float]


# corner -> (xi side, eta side) for [ll, lr, ur, ul]
_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))
# value function per side is H00/H01 (rows 0, 2), slope function H10/H11 (rows 1, 3)
_VAL_ROW = (0, 2)
_SLOPE_ROW = (1, 3)


def _basis_1d_table(t):
    """All derivative orders of the 1D basis at points t: (3, 4, n)."""
    return np.stack([hermite_basis_1d(t, k) for k in range(3)])


def tabulate(element_size, points, max_deriv: int = 2,
             weights=None) -> QuadTabulation:
    """Tabulate the 16 element basis functions at local ``points``.

    Derivative DOFs are scaled by the element size so a field's table
    carries physical derivatives; returned gradients/Hessians are physical
    (chain rule through the local-to-physical map).
    """
    hx, hy = element_size
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if weights is None:
        weights = np.full(pts.shape[0], hx * hy / pts.shape[0])
    else:
        weights = np.asarray(weights, dtype=float) * (hx * hy)

    bx = _basis_1d_table(pts[:, 0])  # (3, 4, npts)
    by = _basis_1d_table(pts[:, 1])

    npts = pts.shape[0]
    phi = np.empty((npts, 16))
    grad = np.zeros((npts, 16, 2))
    hess = np.zeros((npts, 16, 3))
    # DOF scaling per column (value, d1, d2, d12)
    dof_scale = (1.0, hx, hy, hx * hy)

    for c, (i, j) in enumerate(_CORNERS):
        rows_x = (_VAL_ROW[i], _SLOPE_ROW[i], _VAL_ROW[i], _SLOPE_ROW[i])
        rows_y = (_VAL_ROW[j], _VAL_ROW[j], _SLOPE_ROW[j], _SLOPE_ROW[j])
        for dof in range(4):
            k = 4 * c + dof
            fx = bx[:, rows_x[dof], :]  # (3, npts), orders 0..2 in xi
            fy = by[:, rows_y[dof], :]
            s = dof_scale[dof]
            phi[:, k] = s * fx[0] * fy[0]
            if max_deriv >= 1:
                grad[:, k, 0] = s * fx[1] * fy[0] / hx
                grad[:, k, 1] = s * fx[0] * fy[1] / hy
            if max_deriv >= 2:
                hess[:, k, 0] = s * fx[2] * fy[0] / hx**2
                hess[:, k, 1] = s * fx[1] * fy[1] / (hx * hy)
                hess[:, k, 2] = s * fx[0] * fy[2] / hy**2
    return QuadTabulation(points=pts, weights=weights, phi=phi, grad=grad,
                          hess=hess, element_size=(float(hx), float(hy)))


def gauss_tabulation(element_size) -> QuadTabulation:
    """2x2 tensor Gauss rule on [0,1]^2 (four points per element)."""
    g = 0.5 / np.sqrt(3.0)
    pts_1d = (0.5 - g, 0.5 + g)
    pts = [(a, b) for b in pts_1d for a in pts_1d]
    return tabulate(element_size, pts, max_deriv=2,
                    weights=np.full(4, 0.25))


def midpoint_tabulation(element_size) -> QuadTabulation:
    """Single midpoint per element (used by the nonlocal penalty)."""
    return tabulate(element_size, [(0.5, 0.5)], max_deriv=1,
                    weights=np.array([1.0]))


@dataclass
class BfsField:
    """One scalar C1 field: an (nn, 4) DOF table bound to a mesh."""

    mesh: MeshGrid
    dofs: np.ndarray

    def __post_init__(self):
        self.dofs = np.asarray(self.dofs, dtype=float)
        if self.dofs.shape != (self.mesh.nn, 4):
            raise ValueError(
                f"DOF table must be ({self.mesh.nn}, 4), got {self.dofs.shape}")

    def flat(self) -> np.ndarray:
        return self.dofs.reshape(-1)

    @classmethod
    def from_flat(cls, mesh: MeshGrid, vec) -> "BfsField":
        return cls(mesh, np.asarray(vec, dtype=float).reshape(mesh.nn, 4))

    @classmethod
    def zeros(cls, mesh: MeshGrid) -> "BfsField":
        return cls(mesh, np.zeros((mesh.nn, 4)))

    def element_dofs(self) -> np.ndarray:
        """Per-element local DOF vectors, shape (ne, 16), node-major."""
        return self.dofs[self.mesh.elements].reshape(self.mesh.ne, 16)


def _check_tab(field: BfsField, tab: QuadTabulation):
    if not np.allclose(tab.element_size, field.mesh.element_size,
                       rtol=1e-12, atol=0):
        raise ConfigurationError(
            f"tabulation element size {tab.element_size} does not match "
            f"mesh element size {field.mesh.element_size}")


def evaluate_field(field: BfsField, element: int, tab: QuadTabulation,
                   point: int = 0):
    """Value, gradient and Hessian of the field at one tabulated point.

    Returns ``(value, grad, hess)`` with ``grad`` shape (2,) and ``hess``
    the symmetric 2x2 matrix.
    """
    _check_tab(field, tab)
    local = field.dofs[field.mesh.elements[element]].reshape(16)
    value = float(tab.phi[point] @ local)
    grad = tab.grad[point].T @ local
    h11, h12, h22 = tab.hess[point].T @ local
    return value, grad, np.array([[h11, h12], [h12, h22]])


def tabulated_values(edofs: np.ndarray, tab: QuadTabulation) -> np.ndarray:
    """(ne, npts) field values from per-element DOFs."""
    return edofs @ tab.phi.T


def tabulated_gradients(edofs: np.ndarray, tab: QuadTabulation) -> np.ndarray:
    """(ne, npts, 2) physical gradients from per-element DOFs."""
    return np.einsum("ek,pkj->epj", edofs, tab.grad)


def tabulated_hessians(edofs: np.ndarray, tab: QuadTabulation) -> np.ndarray:
    """(ne, npts, 3) physical (d11, d12, d22) from per-element DOFs."""
    return np.einsum("ek,pkj->epj", edofs, tab.hess)


def interpolate_function(mesh: MeshGrid, f) -> BfsField:
    """Nodal Hermite interpolation of a scalar function.

    ``f(x1, x2)`` must return the tuple ``(value, d/dx1, d/dx2,
    d2/dx1dx2)``; the arguments are arrays of node coordinates.
    """
    x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
    cols = f(x1, x2)
    dofs = np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), x1.shape)
                            for c in cols])
    bad = ~np.isfinite(dofs)
    if bad.any():
        n = int(np.nonzero(bad.any(axis=1))[0][0])
        raise InterpolationError(
            f"non-finite interpolation data at node {n} "
            f"(x = {mesh.nodes[n].tolist()})")
    return BfsField(mesh, dofs)


def interpolate_deformation(mesh: MeshGrid, fmap) -> tuple[BfsField, BfsField]:
    """Interpolate a planar map given with its derivatives.

    ``fmap(x1, x2)`` must return ``(y, jac, cross)`` with shapes (2, n),
    (2, 2, n) and (2, n): values, Jacobian and mixed second derivative of
    both components.
    """
    x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
    y, jac, cross = fmap(x1, x2)
    fields = []
    for i in range(2):
        def comp(a, b, i=i):
            return y[i], jac[i, 0], jac[i, 1], cross[i]
        fields.append(interpolate_function(mesh, comp))
    return fields[0], fields[1]


def identity_deformation(mesh: MeshGrid) -> tuple[BfsField, BfsField]:
    """The two component fields interpolating y(x) = x."""
    return affine_deformation(mesh, np.eye(2), np.zeros(2))


def affine_deformation(mesh: MeshGrid, A, b) -> tuple[BfsField, BfsField]:
    """Component fields of the affine map x -> A x + b (exactly represented)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    fields = []
    for i in range(2):
        def comp(x1, x2, i=i):
            v = A[i, 0] * x1 + A[i, 1] * x2 + b[i]
            return (v, np.full_like(x1, A[i, 0]), np.full_like(x1, A[i, 1]),
                    np.zeros_like(x1))
        fields.append(interpolate_function(mesh, comp))
    return fields[0], fields[1]

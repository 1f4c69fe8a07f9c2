"""Injectivity and admissibility diagnostics for deformation states.

The central quantity is the gap between the integral of det(grad y) and
the measured area of the deformed image: zero (up to quadrature and raster
error) exactly for globally injective deformations, positive when parts of
the body overlap.  The image area is obtained by forward rasterization:
dense per-element sample points are mapped through the bicubic field and
marked on a uniform pixel grid over the deformed bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.spatial.distance import pdist, squareform

from .bfs import tabulate
from .energy import _deformation_gradients, _det2
from .state import DeformationState


class DiagnosticsError(ValueError):
    """A diagnostic could not be computed on the given state."""


@dataclass
class GapResult:
    """Determinant integral, rasterized image area and their difference."""

    int_det: float
    image_area: float
    gap: float
    pixel_size: float
    raster_tolerance: float
    perimeter: float
    cells_per_edge: int

    def astuple(self):
        return self.int_det, self.image_area, self.gap


@dataclass
class DiagnosticsReport:
    int_det: float
    image_area: float
    cn_gap: float
    raster_tolerance: float
    min_det: float
    p_measure: dict
    raster_cells_per_element_edge: int
    rho: float

    def to_dict(self) -> dict:
        return {
            "int_det": self.int_det,
            "image_area": self.image_area,
            "cn_gap": self.cn_gap,
            "raster_tolerance": self.raster_tolerance,
            "min_det": self.min_det,
            "p_measure": {str(k): v for k, v in self.p_measure.items()},
            "raster_cells_per_element_edge": self.raster_cells_per_element_edge,
            "rho": self.rho,
        }


def integral_det(state: DeformationState) -> float:
    """Gauss-quadrature integral of det(grad y) over the reference domain."""
    F = _deformation_gradients(state)
    return float(np.einsum("ep,p->", _det2(F), state.tables.gauss.weights))


def min_determinant(state: DeformationState, elements=None) -> float:
    """Minimum of det(grad y) over the Gauss points (optionally a subset)."""
    F = _deformation_gradients(state)
    dets = _det2(F)
    if elements is not None:
        dets = dets[np.asarray(elements, dtype=np.intp)]
    return float(dets.min())


def _sample_grid_phi(element_size, n_sub, cache={}):
    key = (element_size, n_sub)
    if key not in cache:
        t = np.linspace(0.0, 1.0, n_sub)
        pts = np.stack(np.meshgrid(t, t, indexing="xy"), axis=-1).reshape(-1, 2)
        cache[key] = tabulate(element_size, pts, max_deriv=0).phi
    return cache[key]


# local edge parameterizations matching mesh neighbor slots
_EDGE_PARAM = (
    lambda t: np.column_stack([t, np.zeros_like(t)]),       # bottom
    lambda t: np.column_stack([np.ones_like(t), t]),        # right
    lambda t: np.column_stack([t, np.ones_like(t)]),        # top
    lambda t: np.column_stack([np.zeros_like(t), t]),       # left
)


def deformed_perimeter(state: DeformationState, samples_per_edge: int = 9) -> float:
    """Length of the deformed boundary (polyline through edge samples)."""
    mesh = state.mesh
    e1, e2 = state.element_dofs()
    t = np.linspace(0.0, 1.0, samples_per_edge)
    total = 0.0
    for k in range(4):
        elems = np.nonzero(mesh.neighbors[:, k] == -1)[0]
        if elems.size == 0:
            continue
        phi = tabulate(mesh.element_size, _EDGE_PARAM[k](t), max_deriv=0).phi
        ys = np.stack([e1[elems] @ phi.T, e2[elems] @ phi.T], axis=-1)
        seg = np.diff(ys, axis=1)
        total += float(np.sqrt((seg ** 2).sum(axis=-1)).sum())
    return total


def rasterized_image_area(state: DeformationState,
                          cells_per_element_edge: int = 4):
    """Area of y(Omega) by pixel marking; returns (area, pixel_size).

    Every element is sampled densely enough that consecutive mapped
    samples are closer than one pixel (estimated from the deformed corner
    extents with a 1.5x margin), so interior pixels cannot be skipped.
    Elements are processed in chunks so fine rasters stay within memory.
    """
    if cells_per_element_edge < 4:
        raise DiagnosticsError("raster resolution must be >= 4 cells per edge")
    mesh = state.mesh
    hx, hy = mesh.element_size
    pixel = min(hx, hy) / cells_per_element_edge

    e1, e2 = state.element_dofs()
    corners1 = state.y1.dofs[mesh.elements, 0]
    corners2 = state.y2.dofs[mesh.elements, 0]
    ext = np.maximum(corners1.max(axis=1) - corners1.min(axis=1),
                     corners2.max(axis=1) - corners2.min(axis=1))
    n_sub = np.clip(np.ceil(1.5 * ext / pixel).astype(int) + 2, 4, 512)

    # bounding box from a coarse sample pass, padded against bicubic bulge
    phi_coarse = _sample_grid_phi(mesh.element_size, 5)
    xs = e1 @ phi_coarse.T
    ys = e2 @ phi_coarse.T
    pad = 0.02 * max(xs.max() - xs.min(), ys.max() - ys.min()) + 2 * pixel
    lo = np.array([xs.min(), ys.min()]) - pad
    hi = np.array([xs.max(), ys.max()]) + pad
    if not np.all(hi > lo):
        raise DiagnosticsError("degenerate deformed bounding box")
    nx = int(np.ceil((hi[0] - lo[0]) / pixel))
    ny = int(np.ceil((hi[1] - lo[1]) / pixel))
    marked = np.zeros(nx * ny, dtype=bool)

    for n in np.unique(n_sub):
        sel = np.nonzero(n_sub == n)[0]
        phi = _sample_grid_phi(mesh.element_size, int(n))
        chunk = max(1, int(4_000_000 // phi.shape[0]))
        for s in range(0, sel.size, chunk):
            piece = sel[s:s + chunk]
            px = (e1[piece] @ phi.T).ravel()
            py = (e2[piece] @ phi.T).ravel()
            ix = np.clip(((px - lo[0]) / pixel).astype(np.int64), 0, nx - 1)
            iy = np.clip(((py - lo[1]) / pixel).astype(np.int64), 0, ny - 1)
            marked[iy * nx + ix] = True
    return float(marked.sum()) * pixel * pixel, pixel


def ciarlet_necas_gap(state: DeformationState,
                      raster_cells_per_element_edge: int = 4) -> GapResult:
    """Integral of det(grad y), rasterized |y(Omega)| and their gap.

    The raster tolerance (perimeter times pixel size) bounds the
    rasterization error of the image area; gaps below it are
    indistinguishable from zero.
    """
    int_det = integral_det(state)
    area, pixel = rasterized_image_area(state, raster_cells_per_element_edge)
    perim = deformed_perimeter(state)
    return GapResult(
        int_det=int_det,
        image_area=area,
        gap=int_det - area,
        pixel_size=pixel,
        raster_tolerance=perim * pixel,
        perimeter=perim,
        cells_per_edge=raster_cells_per_element_edge,
    )


def near_self_contact_measure(state: DeformationState, s: float,
                              rho: float = 0.5) -> float:
    """Area of elements whose midpoint has a far-in-reference partner
    within deformed distance ``s``.

    ``rho`` is the reference separation scale: partners closer than rho/2
    in the reference configuration do not count (they are neighbors, not
    self-contact).
    """
    if s < 0:
        raise DiagnosticsError(f"distance s must be nonnegative, got {s}")
    if rho <= 0:
        raise DiagnosticsError(f"reference separation rho must be positive")
    Y = state.deformed_midpoints()
    DY = squareform(pdist(Y))
    DX = state.tables.ref_dist
    counted = ((DY <= s) & (DX > rho / 2)).any(axis=1)
    return float(state.tables.areas[counted].sum())


def kappa(t: float, M: float, q: float, alpha: float, cone_mu: float,
          cone_volume: float, d: int = 2) -> float:
    """Cone-averaged singular integral whose inverse bounds det from below."""
    if t <= 0:
        raise ValueError("kappa is defined for t > 0")
    integrand = lambda r: (t + M * r ** alpha) ** (-q) * r ** (d - 1)
    val, _ = quad(integrand, 0.0, cone_mu, limit=200)
    return d * cone_volume / cone_mu ** d * val


def det_lower_bound_delta(C: float, M: float, q: float, alpha: float,
                          cone: tuple[float, float], d: int = 2) -> float:
    """Solve kappa(delta) = C for the uniform determinant lower bound.

    For M = 0 this reduces to the closed form (V / C) ** (1/q).
    """
    cone_mu, cone_volume = cone
    if C <= 0 or cone_mu <= 0 or cone_volume <= 0:
        raise DiagnosticsError("C and cone parameters must be positive")
    if q < d / alpha:
        raise DiagnosticsError(f"need q >= d/alpha = {d / alpha}, got {q}")
    f = lambda t: kappa(t, M, q, alpha, cone_mu, cone_volume, d) - C

    lo, hi = 1.0, 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo /= 4.0
    else:
        raise DiagnosticsError("kappa never exceeds C on the search bracket")
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 4.0
    else:
        raise DiagnosticsError("kappa stays above C on the search bracket")
    return float(brentq(f, lo, hi, rtol=1e-12, maxiter=300))


def run_diagnostics(state: DeformationState, raster_cells: int = 4,
                    s_values=(0.0,), rho: float = 0.5) -> DiagnosticsReport:
    gap = ciarlet_necas_gap(state, raster_cells)
    p_measure = {float(s): near_self_contact_measure(state, s, rho)
                 for s in s_values}
    return DiagnosticsReport(
        int_det=gap.int_det,
        image_area=gap.image_area,
        cn_gap=gap.gap,
        raster_tolerance=gap.raster_tolerance,
        min_det=min_determinant(state),
        p_measure=p_measure,
        raster_cells_per_element_edge=raster_cells,
        rho=rho,
    )

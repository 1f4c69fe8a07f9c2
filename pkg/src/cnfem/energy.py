"""Local energy terms and their assembly by Gauss quadrature.

The stored elastic density is polyconvex and frame indifferent,

    W(F) = |F|^p - d^(p/2) - (p/q) d^(p/2-1) + (p/q) d^(p/2-1) * T(det F),

where T(J) = J^-q for J >= eps1 and its affine C1 extension below eps1, so
the density is finite (and differentiable) for every F including
non-positive determinants.  The second-gradient regularizer is
sigma * |D2 y|^s with the Frobenius norm over all eight entries, and the
body-force term is the linear functional integral of g_body . y.

All terms are integrated with the 2x2 tensor Gauss rule per element and
return analytic gradients with respect to the full flat DOF vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cn_penalty import (Gauge, IDENTITY_GAUGE, PenaltyParams, gauge_by_name,
                         energy_cn_full, energy_cn_accelerated)
from .bfs import tabulated_values, tabulated_gradients, tabulated_hessians
from .state import DeformationState


class EvaluationError(ValueError):
    """An energy term was evaluated on non-finite data."""


@dataclass
class EnergyParams:
    """All model constants of the penalized energy."""

    p: float = 4.0
    q: float = 6.0
    s: float = 4.0
    d: int = 2
    eps1: float = 0.01
    sigma: float = 1.0
    mu: float = 0.0
    eps2: float = 0.25
    beta: float = 1.8
    a: float = 0.1
    nu: float = 0.0
    g: Gauge = IDENTITY_GAUGE

    def __post_init__(self):
        if isinstance(self.g, str):
            self.g = gauge_by_name(self.g)
        if not self.p > self.d:
            raise ValueError(f"need p > d, got p={self.p}, d={self.d}")
        if not self.s > self.d:
            raise ValueError(f"need s > d, got s={self.s}, d={self.d}")
        if not self.q > self.s * self.d / (self.s - self.d):
            raise ValueError(
                f"need q > s*d/(s-d) = {self.s * self.d / (self.s - self.d)}, "
                f"got q={self.q}")
        if not 0 < self.eps1 < 1:
            raise ValueError(f"need eps1 in (0, 1), got {self.eps1}")
        if self.eps2 <= 0 or self.a <= 0:
            raise ValueError("eps2 and a must be positive")
        if self.sigma < 0 or self.mu < 0:
            raise ValueError("sigma and mu must be nonnegative")
        ts = np.linspace(0.0, 4.0, 17)
        gv = np.asarray(self.g.fn(ts))
        if abs(gv[0]) > 1e-15 or np.any(np.diff(gv) <= 0):
            raise ValueError("gauge must be strictly increasing with g(0) = 0")

    def penalty(self) -> PenaltyParams:
        return PenaltyParams(eps2=self.eps2, beta=self.beta, a=self.a,
                             d=self.d, g=self.g)


def _check_finite(F):
    if not np.all(np.isfinite(F)):
        raise EvaluationError("non-finite deformation gradient")


def _det2(F):
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def _cof2(F):
    cof = np.empty_like(F)
    cof[..., 0, 0] = F[..., 1, 1]
    cof[..., 0, 1] = -F[..., 1, 0]
    cof[..., 1, 0] = -F[..., 0, 1]
    cof[..., 1, 1] = F[..., 0, 0]
    return cof


def elastic_density(F, params: EnergyParams):
    """Stored energy density; finite for all F, zero exactly on rotations."""
    F = np.asarray(F, dtype=float)
    _check_finite(F)
    p, q, eps1 = params.p, params.q, params.eps1
    c = (p / q) * params.d ** (p / 2 - 1)
    nrm2 = np.einsum("...ij,...ij->...", F, F)
    J = _det2(F)
    Jc = np.maximum(J, eps1)
    T = np.where(J >= eps1, Jc ** (-q),
                 -q * eps1 ** (-q - 1) * (J - eps1) + eps1 ** (-q))
    return nrm2 ** (p / 2) - params.d ** (p / 2) - c + c * T


def elastic_density_grad(F, params: EnergyParams):
    """dW/dF; continuous across the det F = eps1 seam (C1 extension)."""
    F = np.asarray(F, dtype=float)
    _check_finite(F)
    p, q, eps1 = params.p, params.q, params.eps1
    c = (p / q) * params.d ** (p / 2 - 1)
    nrm2 = np.einsum("...ij,...ij->...", F, F)
    J = _det2(F)
    Jc = np.maximum(J, eps1)
    dT = np.where(J >= eps1, -q * Jc ** (-q - 1), -q * eps1 ** (-q - 1))
    return (p * nrm2[..., None, None] ** (p / 2 - 1) * F
            + c * dT[..., None, None] * _cof2(F))


def _deformation_gradients(state: DeformationState):
    """F at all Gauss points, shape (ne, npts, 2, 2), rows = components."""
    e1, e2 = state.element_dofs()
    tab = state.tables.gauss
    G1 = tabulated_gradients(e1, tab)
    G2 = tabulated_gradients(e2, tab)
    return np.stack([G1, G2], axis=2)


def _scatter(state: DeformationState, local1, local2):
    """Accumulate per-element local gradients into the flat 8*nn vector."""
    nn4 = 4 * state.mesh.nn
    grad = np.zeros(2 * nn4)
    np.add.at(grad[:nn4], state.tables.dofmap, local1)
    np.add.at(grad[nn4:], state.tables.dofmap, local2)
    return grad


def energy_elastic(state: DeformationState, params: EnergyParams):
    """Elastic energy and its gradient with respect to all DOFs."""
    tab = state.tables.gauss
    w = tab.weights
    F = _deformation_gradients(state)
    W = elastic_density(F, params)
    value = float(np.einsum("ep,p->", W, w))
    dW = elastic_density_grad(F, params)
    local1 = np.einsum("epj,pkj,p->ek", dW[:, :, 0, :], tab.grad, w)
    local2 = np.einsum("epj,pkj,p->ek", dW[:, :, 1, :], tab.grad, w)
    return value, _scatter(state, local1, local2)


def energy_regularizer(state: DeformationState, params: EnergyParams):
    """Second-gradient term sigma * integral |D2 y|^s and its gradient."""
    tab = state.tables.gauss
    w = tab.weights
    e1, e2 = state.element_dofs()
    H1 = tabulated_hessians(e1, tab)  # (ne, npts, 3): (d11, d12, d22)
    H2 = tabulated_hessians(e2, tab)
    # |D2 y|^2 counts the mixed derivative twice (d12 and d21 entries)
    mix = np.array([1.0, 2.0, 1.0])
    nrm2 = np.einsum("epj,j->ep", H1 * H1 + H2 * H2, mix)
    s, sigma = params.s, params.sigma
    value = sigma * float(np.einsum("ep,p->", nrm2 ** (s / 2), w))
    with np.errstate(invalid="ignore"):
        fac = np.where(nrm2 > 0, nrm2 ** (s / 2 - 1), 0.0)
    coef = sigma * s * fac
    local1 = np.einsum("epj,pkj,p->ek", coef[..., None] * (H1 * mix),
                       tab.hess, w)
    local2 = np.einsum("epj,pkj,p->ek", coef[..., None] * (H2 * mix),
                       tab.hess, w)
    return value, _scatter(state, local1, local2)


def energy_body_force(state: DeformationState, force):
    """Linear load integral of g_body . y; gradient is state independent."""
    tab = state.tables.gauss
    w = tab.weights
    xy = state.tables.gauss_xy
    g = np.asarray(force(xy), dtype=float)
    if g.shape != xy.shape:
        raise EvaluationError(
            f"force must map points {xy.shape} to vectors, got {g.shape}")
    if not np.all(np.isfinite(g)):
        bad = np.nonzero(~np.isfinite(g).all(axis=-1))
        pt = xy[bad[0][0], bad[1][0]]
        raise EvaluationError(f"non-finite body force at x = {pt.tolist()}")
    e1, e2 = state.element_dofs()
    v1 = tabulated_values(e1, tab)
    v2 = tabulated_values(e2, tab)
    value = float(np.einsum("ep,ep,p->", g[..., 0], v1, w)
                  + np.einsum("ep,ep,p->", g[..., 1], v2, w))
    local1 = np.einsum("ep,pk,p->ek", g[..., 0], tab.phi, w)
    local2 = np.einsum("ep,pk,p->ek", g[..., 1], tab.phi, w)
    return value, _scatter(state, local1, local2)


def total_energy(state: DeformationState, params: EnergyParams, force=None,
                 evaluator: str = "full", threads: int = 1,
                 return_breakdown: bool = False):
    """Full penalized energy E_el + mu*E_cn + E_reg + E_body with gradient.

    ``evaluator`` selects the penalty strategy: "full", "accelerated" or
    "both" (runs both and asserts 1e-12 relative agreement).
    """
    value, grad = energy_elastic(state, params)
    breakdown = {"elastic": value}

    e_reg, g_reg = energy_regularizer(state, params)
    value += e_reg
    grad += g_reg
    breakdown["regularizer"] = e_reg

    e_cn = 0.0
    if params.mu > 0:
        pp = params.penalty()
        if evaluator == "full":
            e_cn, g_cn, _ = energy_cn_full(state, pp, threads=threads,
                                           need_pairs=False)
        elif evaluator == "accelerated":
            e_cn, g_cn, _ = energy_cn_accelerated(state, pp)
        elif evaluator == "both":
            e_cn, g_cn, _ = energy_cn_full(state, pp, threads=threads,
                                           need_pairs=False)
            e_acc, _, _ = energy_cn_accelerated(state, pp)
            if abs(e_acc - e_cn) > 1e-12 * max(1.0, abs(e_cn)):
                raise AssertionError(
                    f"penalty evaluators disagree: full={e_cn!r}, "
                    f"accelerated={e_acc!r}")
        else:
            raise ValueError(f"unknown evaluator {evaluator!r}")
        value += params.mu * e_cn
        grad += params.mu * g_cn
    breakdown["cn_scaled"] = params.mu * e_cn

    e_body = 0.0
    if force is not None:
        e_body, g_body = energy_body_force(state, force)
        value += e_body
        grad += g_body
    breakdown["body"] = e_body
    breakdown["total"] = value

    if return_breakdown:
        return value, grad, breakdown
    return value, grad


def make_energy_function(mesh_state: DeformationState, params: EnergyParams,
                         force=None, evaluator: str = "full",
                         threads: int = 1, trace_sink: list | None = None):
    """Flat-vector objective ``f(x) -> (value, grad)`` for the minimizer.

    When ``trace_sink`` is a list, the per-term breakdown of every
    evaluation is appended to it.
    """
    def fun(x):
        st = mesh_state.with_flat(x)
        value, grad, breakdown = total_energy(
            st, params, force=force, evaluator=evaluator, threads=threads,
            return_breakdown=True)
        if trace_sink is not None:
            trace_sink.append(breakdown)
        return value, grad
    return fun

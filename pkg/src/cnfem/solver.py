"""Constrained energy minimization on the free degrees of freedom.

Dirichlet data is imposed by masking DOFs: selected nodes get their value
and edge-tangential first-derivative columns pinned to an affine target
map, all remaining DOFs are free.  Minimization is a limited-memory
quasi-Newton (two-loop recursion) with a backtracking Armijo line search;
it only ever writes to free DOFs, so constrained entries stay bit-exact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .state import DeformationState


class SpecificationError(ValueError):
    """A Dirichlet specification selects nothing or is inconsistent."""


class StagnationError(RuntimeError):
    """Line search failed; carries the best point found so far."""

    def __init__(self, message, best_x, report):
        super().__init__(message)
        self.best_x = best_x
        self.report = report


@dataclass
class DirichletSpec:
    """Affine boundary data on a mesh-aligned node set.

    ``selector(mesh) -> (nn,) bool`` picks the nodes.  The target map is
    x -> A x + b; on each selected node the value DOF and the
    first-derivative DOF along ``tangent_axis`` (0 for an x1-aligned edge,
    1 for x2-aligned) of both components are constrained.  Normal and
    mixed derivative DOFs stay free.
    """

    selector: Callable
    A: np.ndarray
    b: np.ndarray
    tangent_axis: int

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(2, 2)
        self.b = np.asarray(self.b, dtype=float).reshape(2)
        if self.tangent_axis not in (0, 1):
            raise SpecificationError("tangent_axis must be 0 or 1")


def apply_dirichlet(state: DeformationState, spec: DirichletSpec):
    """Constrained-DOF mask and target values for one spec (8*nn layout)."""
    mesh = state.mesh
    sel = np.asarray(spec.selector(mesh), dtype=bool)
    if sel.shape != (mesh.nn,):
        raise SpecificationError("selector must return a node mask")
    nodes = np.nonzero(sel)[0]
    if nodes.size == 0:
        raise SpecificationError("Dirichlet selector matched no node")

    nn4 = 4 * mesh.nn
    mask = np.zeros(8 * mesh.nn, dtype=bool)
    values = np.zeros(8 * mesh.nn)
    x = mesh.nodes[nodes]
    target = x @ spec.A.T + spec.b
    dcol = 1 + spec.tangent_axis  # DOF column of the tangential derivative
    for comp in range(2):
        base = comp * nn4
        vidx = base + 4 * nodes
        mask[vidx] = True
        values[vidx] = target[:, comp]
        didx = base + 4 * nodes + dcol
        mask[didx] = True
        values[didx] = spec.A[comp, spec.tangent_axis]
    return mask, values


def combine_dirichlet(state: DeformationState, specs):
    """Union of several Dirichlet specs into one mask/value pair."""
    mask = np.zeros(8 * state.mesh.nn, dtype=bool)
    values = np.zeros(8 * state.mesh.nn)
    for spec in specs:
        m, v = apply_dirichlet(state, spec)
        clash = mask & m & (values != v)
        if clash.any():
            raise SpecificationError("conflicting Dirichlet values on shared DOFs")
        mask |= m
        values[m] = v[m]
    return mask, values


def project_dirichlet(x, mask, values):
    x = np.array(x, dtype=float, copy=True)
    x[mask] = values[mask]
    return x


@dataclass
class MinimizeConfig:
    max_iter: int = 2000
    grad_tol: float | None = None  # None: 1e-6 * (1 + |E(initial)|)
    memory: int = 10
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self):
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")


@dataclass
class SolveReport:
    iterations: int
    final_grad_norm: float
    energy_trace: list
    converged: bool
    message: str
    wall_time: float
    breakdown: dict | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "energy_trace": list(self.energy_trace),
            "converged": self.converged,
            "message": self.message,
            "wall_time": self.wall_time,
            "breakdown": self.breakdown,
        }


def _two_loop(g, s_list, y_list):
    """L-BFGS two-loop recursion for the quasi-Newton direction."""
    q = g.copy()
    alphas = []
    rhos = [1.0 / (y @ s) for s, y in zip(s_list, y_list)]
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rhos)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(zip(s_list, y_list, rhos), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize(fun, x0, free_mask, config: MinimizeConfig | None = None):
    """Quasi-Newton descent of ``fun(x) -> (value, grad)`` on free DOFs.

    Stops when the free-DOF gradient infinity norm drops below the
    tolerance or the iteration budget is exhausted.  Raises
    StagnationError (carrying the best point and its report) if the line
    search cannot find any decrease.
    """
    config = config or MinimizeConfig()
    free = np.asarray(free_mask, dtype=bool)
    x = np.array(x0, dtype=float, copy=True)
    t_start = time.perf_counter()

    f, g = fun(x)
    if not np.isfinite(f):
        raise ValueError("energy is not finite at the initial state")
    tol = config.grad_tol
    if tol is None:
        tol = 1e-6 * (1.0 + abs(f))
    trace = [f]
    s_list: list = []
    y_list: list = []

    def report(it, message, converged):
        return SolveReport(
            iterations=it,
            final_grad_norm=float(np.abs(g[free]).max(initial=0.0)),
            energy_trace=trace,
            converged=converged,
            message=message,
            wall_time=time.perf_counter() - t_start,
        )

    for it in range(config.max_iter):
        gf = g[free]
        gnorm = float(np.abs(gf).max(initial=0.0))
        if gnorm <= tol:
            return x, report(it, f"gradient tolerance {tol:.3e} reached", True)

        p = _two_loop(gf, s_list, y_list)
        slope = float(p @ gf)
        if slope >= 0:  # not a descent direction; fall back to steepest
            p = -gf
            slope = float(p @ gf)
            s_list.clear()
            y_list.clear()

        alpha = 1.0 if s_list else min(1.0, 1.0 / max(1e-12, np.linalg.norm(gf)))
        accepted = False
        for _ in range(config.max_backtracks):
            xn = x.copy()
            xn[free] += alpha * p
            fn, gn = fun(xn)
            if np.isfinite(fn) and fn <= f + config.armijo_c1 * alpha * slope:
                accepted = True
                break
            # quadratic-interpolation backtrack, clamped to a sane window
            if np.isfinite(fn):
                denom = 2.0 * (fn - f - slope * alpha)
                a_q = -slope * alpha * alpha / denom if denom > 0 else alpha
                alpha = min(max(a_q, 0.1 * alpha),
                            config.backtrack_factor * alpha)
            else:
                alpha *= config.backtrack_factor
        if not accepted:
            raise StagnationError(
                f"line search failed after {config.max_backtracks} backtracks "
                f"at iteration {it} (grad norm {gnorm:.3e})",
                x, report(it, "line search stagnation", False))

        s = np.zeros_like(gf)
        s[:] = alpha * p
        yv = gn[free] - gf
        sy = float(s @ yv)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_list.append(s)
            y_list.append(yv)
            if len(s_list) > config.memory:
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = xn, fn, gn
        trace.append(f)

    return x, report(config.max_iter,
                     f"iteration budget {config.max_iter} exhausted", False)


def fd_gradient_check(fun, x, free_mask, rel_step: float = 1e-6,
                      n_samples: int = 200, seed: int = 0) -> float:
    """Max relative discrepancy of the analytic gradient vs central FD.

    Checks a random subset of free DOFs; the denominator is floored at a
    small fraction of the gradient scale so near-zero entries do not
    dominate.
    """
    if not 1e-8 <= rel_step <= 1e-3:
        raise ValueError(f"rel_step must lie in [1e-8, 1e-3], got {rel_step}")
    x = np.asarray(x, dtype=float)
    free_idx = np.nonzero(np.asarray(free_mask, dtype=bool))[0]
    rng = np.random.default_rng(seed)
    if free_idx.size > n_samples:
        free_idx = rng.choice(free_idx, size=n_samples, replace=False)

    _, g = fun(x)
    gscale = float(np.abs(g).max(initial=0.0))
    worst = 0.0
    for i in free_idx:
        h = rel_step * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        fd = (fun(xp)[0] - fun(xm)[0]) / (2 * h)
        # the floor keeps roundoff on near-zero entries (FD noise is about
        # eps*|f|/h absolute) from masquerading as gradient error
        denom = max(abs(fd), abs(g[i]), 1e-3 * (1.0 + gscale))
        worst = max(worst, abs(fd - g[i]) / denom)
    return worst


@dataclass
class ContinuationResult:
    value: float
    state: DeformationState
    report: SolveReport
    failed: bool = False


def continuation_run(values, setup, config: MinimizeConfig | None = None,
                     warm_start: bool = True):
    """Sweep of minimization problems with optional warm starts.

    ``setup(value, warm_state_or_None) -> (fun, x0, free_mask, to_state)``
    builds each member problem; ``to_state`` converts a flat vector back
    into a DeformationState.  A failing member is recorded with its best
    state and the sweep continues.
    """
    values = list(values)
    if not values:
        raise ValueError("continuation needs at least one parameter value")
    results = []
    prev = None
    for v in values:
        fun, x0, free_mask, to_state = setup(v, prev if warm_start else None)
        try:
            x, rep = minimize(fun, x0, free_mask, config)
            failed = False
        except StagnationError as err:
            x, rep = err.best_x, err.report
            failed = True
        st = to_state(x)
        results.append(ContinuationResult(value=v, state=st, report=rep,
                                          failed=failed))
        prev = st
    return results

"""File formats shared by the experiment runners and the plotting frontend.

All numeric output is written with full ``repr`` precision so reruns with
the same configuration produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import MeshGrid, mesh_to_dict
from .state import DeformationState


def _fmt(x) -> str:
    return repr(float(x))


def state_to_dict(state: DeformationState, extra: dict | None = None) -> dict:
    """Mesh snapshot plus both nn x 4 component DOF tables."""
    d = mesh_to_dict(state.mesh)
    d["y1"] = state.y1.dofs.tolist()
    d["y2"] = state.y2.dofs.tolist()
    if extra:
        d.update(extra)
    return d


def save_state_json(state: DeformationState, path, extra: dict | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(state_to_dict(state, extra), f)
    return path


def write_density_csv(path, mesh: MeshGrid, density: np.ndarray):
    """Rows (element_id, midpoint_x1, midpoint_x2, density)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mids = mesh.nodes[mesh.elements].mean(axis=1)
    with open(path, "w") as f:
        f.write("element_id,x1,x2,density\n")
        for e in range(mesh.ne):
            f.write(f"{e},{_fmt(mids[e, 0])},{_fmt(mids[e, 1])},"
                    f"{_fmt(density[e])}\n")
    return path


def write_energy_csv(path, parameter: str, rows):
    """Rows (sweep_value, E_el, mu_E_cn, E_reg, E_body, total)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(f"{parameter},E_el,mu_E_cn,E_reg,E_body,total\n")
        for value, bd in rows:
            f.write(",".join([
                _fmt(value), _fmt(bd["elastic"]), _fmt(bd["cn_scaled"]),
                _fmt(bd["regularizer"]), _fmt(bd["body"]), _fmt(bd["total"]),
            ]) + "\n")
    return path


def write_pair_trace_csv(path, pairs, values):
    """Optional contributing-pair trace: rows (i, j, value)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("i,j,value\n")
        for (i, j), v in zip(pairs, values):
            f.write(f"{int(i)},{int(j)},{_fmt(v)}\n")
    return path


def write_eval_trace_csv(path, rows):
    """Per-evaluation term breakdown: (eval, E_el, mu_E_cn, E_reg, E_body, total)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("eval,E_el,mu_E_cn,E_reg,E_body,total\n")
        for k, bd in enumerate(rows):
            f.write(",".join([
                str(k), _fmt(bd["elastic"]), _fmt(bd["cn_scaled"]),
                _fmt(bd["regularizer"]), _fmt(bd["body"]), _fmt(bd["total"]),
            ]) + "\n")
    return path


def write_solve_trace_csv(path, report):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("iteration,total\n")
        for k, e in enumerate(report.energy_trace):
            f.write(f"{k},{_fmt(e)}\n")
    return path


def save_json(path, data: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=1, sort_keys=True)
    return path


def value_tag(x) -> str:
    """Filesystem-safe tag for a sweep value (0.25 -> '0p25', 1e-06 -> '1em06')."""
    return f"{float(x):g}".replace(".", "p").replace("-", "m").replace("+", "")

"""Planar C1 finite elements for hyperelastic energy minimization with a
nonlocal self-interpenetration penalty."""

from .mesh import (DomainSpec, InvalidSpecError, MeshGrid, boundary_elements,
                   build_box_mesh, build_domain, build_pincers_domain,
                   build_two_box_domain, element_midpoints)
from .bfs import (BfsField, QuadTabulation, evaluate_field, gauss_tabulation,
                  hermite_basis_1d, identity_deformation,
                  interpolate_deformation, interpolate_function,
                  midpoint_tabulation, tabulate)
from .state import DeformationState, MeshTables
from .energy import (EnergyParams, elastic_density, elastic_density_grad,
                     energy_body_force, energy_elastic, energy_regularizer,
                     make_energy_function, total_energy)
from .cn_penalty import (Gauge, IDENTITY_GAUGE, SQUARE_GAUGE, PenaltyParams,
                         PenaltyEvaluation, energy_cn_accelerated,
                         energy_cn_full, gauge_by_name, marginal_density,
                         penalty_integrand, smooth_pospart)
from .diagnostics import (DiagnosticsReport, ciarlet_necas_gap,
                          det_lower_bound_delta, kappa, min_determinant,
                          near_self_contact_measure, run_diagnostics)
from .solver import (DirichletSpec, MinimizeConfig, SolveReport,
                     StagnationError, apply_dirichlet, combine_dirichlet,
                     continuation_run, fd_gradient_check, minimize,
                     project_dirichlet)
from .maps import model2_body_force, pincers_map

__version__ = "0.1.0"

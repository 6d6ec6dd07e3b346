"""Desk-scale numerical laboratory for Type-I blowup in a coupled
reaction-diffusion pair with power or exponential nonlinearities."""

from .errors import (BlowupLabError, GluingError, NoBracketError,
                     PositivityError, ResonanceError, StiffnessError)
from .params import (CASE_EXP, CASE_POWER, BlowupConstants, Parameters,
                     ProfileKind, approx_profile, compute_constants,
                     eval_profile, ode_blowup_solution, outer_profile)
from .spectral import (ModeCoefficients, PolyPair, ProjectionOperator,
                       WeightedSpace, apply_L, basis_from_json, basis_to_json,
                       build_space, coupling_matrix, diagonalize, project,
                       spaces_for)
from .reduced import (IntermediateState, ReducedState, Trajectory, hat_gh,
                      integrate_intermediate, integrate_reduced,
                      intermediate_closed_form, intermediate_initial_state)
from .frames import (CutoffSpec, LinearizedField, RadialField, chi0,
                     from_similarity, linearize, linearized_terms, resample,
                     similarity_rhs, to_similarity, truncate_outer)
from .evolve import (BlowupReport, PhysicalTrajectory, ShootResult,
                     SimilarityTrajectory, SolverConfig, evolve_physical,
                     evolve_similarity, shoot)
from .verify import (FinalProfileSample, RegionReport, ShrinkingSetMargins,
                     build_initial_data_exp, build_initial_data_power,
                     check_regions, check_shrinking, extract_final_profile,
                     geometric_grid, profile_initial_field, solve_sigma)

__version__ = "0.1.0"

"""Quantum Brownian master equations and their positivity diagnostics.

The package implements the standard (positivity-violating) Brownian
equation, pure position dissipators, a positivity-preserving evolution
built from a thermally correlated initial state, an exact finite-bath
oracle, and the measurement suite (purity, positivity, Choi/CP tests)
needed to stress all of them numerically.
"""

from .bases import BasisSpec, FockBasis, GridBasis
from .brownian import (PositiveEvolutionResult, brownian_dissipator,
                       canonical_ops, canonical_sigma, commutator_generator,
                       eta_map, free_particle_sigma_generator,
                       free_particle_trace_rate, initialize_sigma_from_rho,
                       positive_evolution, sigma_generator,
                       standard_qbe_generator)
from .diagnostics import (DiagnosticsRow, diagnostics_row, gaussian_moments,
                          gaussian_reference, gaussianity_defect,
                          positivity_report, purity, purity_rate,
                          purity_rate_fd, stationarity_residual,
                          trace_distance, trace_rate_fd)
from .evolution import (ConvergenceVerdict, IntegratorConfig, Trajectory,
                        conjugated_propagate, convergence_check, propagate)
from .microbath import (BathMode, BathSpec, correlated_initial_state,
                        exact_reduce, ohmic_discretization,
                        product_initial_state, total_hamiltonian)
from .operators import (Operator, PotentialSpec, StateMatrix, basis_change,
                        boundary_mass, build_fock_operators,
                        build_grid_operators, identity, operator_function,
                        partial_trace, potential_operator, system_hamiltonian,
                        tensor_product)
from .params import PhysParams
from .states import fock_state, gaussian_state
from .superop import (BracketTerm, Generator, SandwichMap, SumMap,
                      SuperoperatorMatrix, TildeMap, choi_matrix,
                      dissipator_bracket, is_completely_positive, superop_exp,
                      tilde_transform, to_matrix, unvec, vec)

__version__ = "0.1.0"

"""urnfield: distribution-valued solution fields of the randomly reinforced
urn equation, by Monte Carlo simulation and by deterministic fixed-point
iteration on a projectively transformed grid."""

from .dist import (AtomReport, QuantileDist, from_cdf, from_samples,
                   kr_dual_lower_bound, largest_atom, midpoint_levels, mixture,
                   point_mass, pushforward_general, pushforward_monotone,
                   uniform, wasserstein)
from .params import (ReinforcementPair, bernoulli, dilute, manhattan,
                     parse_dist_spec, scaled_bernoulli_pair, validate)
from .boundary import (BoundaryDatum, aggregate_phi, constant_datum,
                       delta_datum, gamma_map, is_monotonic, map_datum,
                       parse_boundary_spec, power_datum, psi_map,
                       pushforward_datum, sup_distance)
from .urn import (DiagnosticsRecord, DiagnosticsReport, RunConfig,
                  SimulationResult, UrnState, coupled_pair,
                  diagnostics_bounds_check, estimate_limit_law, run_until_mass,
                  step, stopping_threshold)
from .solver import (SolutionField, apply_operator, compose_general,
                     field_distance, from_star, initial_field, residual,
                     solve, to_star)
from .closed_forms import (BetaParams, beta_cdf, beta_quantile,
                           beta_quantile_dist,
                           beta_quantile_grid, h_map, kumaraswamy_dist,
                           scaled_bernoulli_solution)
from .errors import (ContractViolationError, DimensionMismatchError,
                     DomainError, InputError, ParameterError, TruncationError,
                     UrnFieldError)

__version__ = "0.1.0"

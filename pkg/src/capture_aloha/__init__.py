"""Analysis, optimization and simulation of saturated slotted Aloha with SINR capture."""

from .errors import (CaptureAlohaError, ConvergenceError, DomainError, InvariantError,
                     PreconditionError)
from .fixedpoint import (GroupSpec, HeteroSteadyState, SolverOptions, closed_form_k0,
                         fixed_point_map, group_node_throughput, hetero_fixed_point_map,
                         network_throughput, solve_heterogeneous, solve_homogeneous)
from .lambertw import lambert_w0
from .model import (BackoffSchedule, HolDistribution, NetworkConfig, SteadyState,
                    ThroughputPoint, attempt_rate, capture_prob, db_to_linear, hol_distribution,
                    linear_to_db, rate_to_threshold, threshold_to_rate, throughput_at)
from .optimize import (FixedQOptimum, FixedQPoint, HeteroOptimum, SumRateOptimum,
                       ThroughputOptimum, approx_optimal_mu, approx_sum_rate, fixed_q_analysis,
                       fixed_q_optimum, golden_section_max, hetero_max_sum_rate, high_snr_slope,
                       max_sum_rate, max_throughput, max_throughput_at_opt_mu, mu_high_root,
                       mu_low_root, rho_threshold, sum_rate_objective)
from .simulate import GroupStats, SimConfig, SimReport, decode_mask, replicate, run

__version__ = "0.1.0"


"""Poisson-Dirichlet limits for the prime factorisations of random integers and semigroup elements."""

from .arith import (factor, kappa, lambda_fn, mertens_sum, nu_count, scaled_spectrum,
                    selberg_approx, selberg_constant_C, stirling_ratio, theta_prime)
from .errors import (CapacityError, DomainError, HypothesisError, InfeasibleError,
                     ParameterError, PDFactorsError, UsageError)
from .experiments import ExperimentConfig, ks_statistic, reference_l1_cdf, run_experiment
from .intensity import (IntervalFamily, empirical_multi_intensity, pd_box_integral,
                        pd_multi_intensity_density, pp_multi_intensity_density, theta1_bound,
                        theta_bound)
from .pdcore import (dickman_rho, gem_density, pd_total_sum_density, rank, sample_gem,
                     sample_pd, size_biased_permutation)
from .report import ExperimentReport
from .semigroups import (make_semigroup, nu_count_semigroup, parse_semigroup,
                         pi_count_semigroup, sample_uniform_element, semigroup_mertens)

__version__ = "0.1.0"

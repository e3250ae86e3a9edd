"""Matching correlated random graphs: models, estimators and numerical checks."""
from .bayes import (InterpolatedModel, MmseEstimate, PosteriorTable, exact_mutual_information,
                    exact_posterior, mmse_of_relabeled_graph)
from .errors import (CapacityError, ConfigError, DegenerateModelError, DimensionError, DomainError,
                     GraphMatchError, PreconditionError, UnsupportedModelError)
from .estimators import MatchResult, objective, solve_exact, solve_local, swap_delta, transposition_scan
from .harness import SweepConfig, TrialRecord, aggregate, run_sweep, write_csv
from .models import (Gaussian, GeneralER, MatchInstance, SubsampledER, correlation_sign, flip_model,
                     joint_pmf, model_from_dict, model_to_dict, sample_instance)
from .perm import (OrbitDecomposition, Permutation, edge_fixed_fraction, edge_index,
                   induced_edge_permutation, nonfixed_distance, orbit_decomposition, overlap)
from .rng import Stream, splitmix64
from .theory import (MgfQuery, ThresholdReport, binary_entropy, binary_kl, edge_pair_mi,
                     mgf_power_bounds, m2_upper_bounds, mi_taylor_er, orbit_mgf_l, orbit_mgf_m,
                     phi, threshold_report, trinomial_tail)

__version__ = "0.1.0"

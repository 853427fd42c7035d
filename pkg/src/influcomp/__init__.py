"""Competing influences on social networks under information overload."""

from .analytic import (InitialState, SolverError, Trajectory, corollary_closed_form,
                       full_trajectory, integrate_ode, post_overload, pre_overload, rho,
                       solve_implicit, theorem4_check)
from .embedding import (EmbeddingSet, WalkParams, build_neighborhoods, fit_gaussian,
                        load_embeddings, objective, optimize, sample_walks, save_embeddings)
from .graph import Graph, GraphFormatError, generate_power_law, load_edge_list, write_edge_list
from .harness import (ExperimentSpec, compare, equivalent_capacity, monte_carlo,
                      run_experiment, summarize)
from .latent import (connect_probability, connect_probability_approx, distance_pdf,
                     overload_time, range_for_probability, recover_links)
from .sim import ArrivalDistribution, CompetitionConfig, run

__version__ = "0.1.0"

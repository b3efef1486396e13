"""Solvers for stochastic shortest path MDPs built around SCC decomposition.

Core pieces: :class:`Mdp` (CSR model), :func:`tvi` (topological value
iteration), :func:`ftvi` (focused TVI: bounded search with action
elimination, then TVI on the pruned graph), baselines (VI, ILAO*, LRTDP,
BRTDP), seeded generators and a flat file format.

Set ``SSP_TOPO_NO_JIT=1`` before import to run the pure-numpy/Python path
instead of numba-compiled kernels.
"""
from ._jit import USE_NUMBA
from .baselines import TrialConfig, brtdp, ilao_star, lrtdp
from .bounds import ValueBounds, h_min, init_upper_bound, initial_bounds, policy_upper_bound, upper_bound
from .errors import DivergentValue, InvalidSpec, ParseError, SspError, Unsatisfiable, ValidationError
from .ftvi import FtviConfig, SearchOutcome, build_pruned_graph, ftvi, search_phase
from .generators import (GoalCountSpec, GridSpec, LayeredSpec, gen_goalcount, gen_grid,
                         gen_layered, scale_heuristic)
from .graph import (SccDecomposition, StateGraph, build_graph, dead_end_mask, kosaraju_scc,
                    reachable_mask, reachable_states)
from .io import parse_mdp, read_mdp, serialize_mdp, write_mdp
from .mdp import (Action, Mdp, bellman_backup, bellman_error, evaluate_policy, extract_policy,
                  greedy_action, q_value)
from .solve import ALGORITHMS, RunOptions, RunRecord, run_algorithm
from .vi import SolverConfig, SolveStats, solve_vi, tvi, value_iteration

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "Action", "Mdp", "q_value", "bellman_backup", "bellman_error", "greedy_action",
    "extract_policy", "evaluate_policy", "StateGraph", "SccDecomposition", "build_graph",
    "kosaraju_scc", "reachable_mask", "reachable_states", "dead_end_mask", "ValueBounds", "h_min",
    "init_upper_bound", "policy_upper_bound", "upper_bound", "initial_bounds", "SolverConfig",
    "SolveStats", "value_iteration", "solve_vi", "tvi", "FtviConfig", "SearchOutcome",
    "search_phase", "build_pruned_graph", "ftvi", "TrialConfig", "ilao_star", "lrtdp", "brtdp",
    "LayeredSpec", "GoalCountSpec", "GridSpec", "gen_layered", "gen_goalcount", "gen_grid",
    "scale_heuristic", "parse_mdp", "serialize_mdp", "read_mdp", "write_mdp", "ALGORITHMS",
    "RunOptions", "RunRecord", "run_algorithm", "SspError", "ValidationError", "ParseError",
    "DivergentValue", "InvalidSpec", "Unsatisfiable",
]

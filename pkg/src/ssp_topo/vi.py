"""Gauss-Seidel value iteration and topological value iteration (TVI)."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels as K
from ._jit import njit
from .bounds import ValueBounds, h_min, upper_bound
from .errors import DivergentValue
from .graph import SccDecomposition, build_graph, dead_end_mask, kosaraju_scc, reachable_mask
from .mdp import Mdp, no_elimination


@dataclass
class SolverConfig:
    delta: float = 1e-6
    value_cap: float = 1e12
    max_sweeps: int | None = None
    detect_dead_ends: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.value_cap > 0:
            raise ValueError("value_cap must be positive")


@dataclass
class SolveStats:
    algorithm: str = ""
    backups: int = 0
    sweeps: int = 0
    scc_count: int = 0
    max_scc: int = 0
    eliminated_actions: int = 0
    wall_time: float = 0.0
    converged: bool = False
    v_s0: float = float("nan")
    extra: dict[str, Any] = field(default_factory=dict, repr=False)


def starting_values(mdp: Mdp, heuristic: np.ndarray | None = None,
                    detect_dead_ends: bool = True) -> np.ndarray:
    """Copy of ``heuristic`` (default h_min) with goals pinned to 0 and,
    optionally, provable dead ends set to ``inf``.

    Raises DivergentValue when the initial state is a dead end.
    """
    V = h_min(mdp) if heuristic is None else np.array(heuristic, dtype=np.float64)
    if V.shape != (mdp.num_states,):
        raise ValueError("heuristic must have one value per state")
    V[mdp.goal] = 0.0
    if detect_dead_ends:
        V[dead_end_mask(mdp)] = np.inf
    if not V[mdp.initial] < np.inf:
        raise DivergentValue(f"initial state {mdp.initial} cannot reach a goal",
                             state=mdp.initial)
    return V


@njit
def _vi_sweeps(members, V, Vu, elim, eliminate, goal, act_ptr, cost, tr_ptr, succ, prob,
               delta, cap, max_sweeps):
    backups = 0
    sweeps = 0
    n_elim = 0
    while True:
        err = 0.0
        for i in range(members.shape[0]):
            s = members[i]
            if goal[s]:
                continue
            if eliminate:
                r, ne = K.backup_eliminating(s, V, Vu, act_ptr, cost, tr_ptr, succ, prob, elim)
                n_elim += ne
            else:
                r = K.backup(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
            if V[s] > cap:
                V[s] = np.inf
            backups += 1
            if r > err:
                err = r
        sweeps += 1
        if err < delta:
            return backups, sweeps, n_elim, True
        if max_sweeps > 0 and sweeps >= max_sweeps:
            return backups, sweeps, n_elim, False


@njit
def _tvi(comp_ptr, members, V, Vu, elim, eliminate, goal, act_ptr, cost, tr_ptr, succ, prob,
         delta, cap, max_sweeps, comp_backups):
    backups = 0
    sweeps = 0
    n_elim = 0
    for c in range(comp_ptr.shape[0] - 1):
        part = members[comp_ptr[c]:comp_ptr[c + 1]]
        only_goals = True
        for i in range(part.shape[0]):
            if not goal[part[i]]:
                only_goals = False
                break
        if only_goals:
            continue
        b, sw, ne, ok = _vi_sweeps(part, V, Vu, elim, eliminate, goal, act_ptr, cost, tr_ptr,
                                   succ, prob, delta, cap, max_sweeps)
        comp_backups[c] = b
        backups += b
        sweeps += sw
        n_elim += ne
        if not ok:
            return backups, sweeps, n_elim, False
    return backups, sweeps, n_elim, True


def _check_initial(mdp: Mdp, V: np.ndarray) -> None:
    if not V[mdp.initial] < np.inf:
        raise DivergentValue(f"value of initial state {mdp.initial} diverged", state=mdp.initial)


def value_iteration(mdp: Mdp, V: np.ndarray, subset=None, cfg: SolverConfig | None = None,
                    eliminate: bool = False, bounds: ValueBounds | None = None,
                    elim: np.ndarray | None = None) -> SolveStats:
    """In-place Gauss-Seidel VI over ``subset`` swept in ascending state id.

    Stops once a full sweep has Bellman error below ``cfg.delta``. With
    ``eliminate``, each backup first discards actions whose Q on ``V``
    exceeds ``bounds.upper`` at that state (``V`` must be a lower bound).
    Values above ``cfg.value_cap`` are set to ``inf``.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if subset is None:
        members = np.arange(mdp.num_states, dtype=np.int64)
    else:
        members = np.unique(np.fromiter(subset, dtype=np.int64)
                            if not isinstance(subset, np.ndarray) else subset.astype(np.int64))
    if eliminate and bounds is None:
        raise ValueError("action elimination needs an upper bound")
    if elim is None:
        elim = no_elimination(mdp)
    Vu = bounds.upper if bounds is not None else V
    backups, sweeps, n_elim, ok = _vi_sweeps(
        members, V, Vu, elim, eliminate, mdp.goal, *mdp.arrays(),
        cfg.delta, cfg.value_cap, cfg.max_sweeps or 0)
    stats = SolveStats("vi-ae" if eliminate else "vi", int(backups), int(sweeps),
                       eliminated_actions=int(elim.sum()), converged=bool(ok),
                       v_s0=float(V[mdp.initial]))
    stats.extra["mask"] = elim
    stats.wall_time = time.perf_counter() - t0
    if mdp.initial in set(members.tolist()) and not V[mdp.initial] < np.inf:
        raise DivergentValue(f"value of initial state {mdp.initial} diverged", state=mdp.initial)
    return stats


def solve_vi(mdp: Mdp, cfg: SolverConfig | None = None, eliminate: bool = False,
             initial_V: np.ndarray | None = None, upper_passes: int = 3):
    """Plain (or action-eliminating) VI over the whole state space."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    V = starting_values(mdp, initial_V, cfg.detect_dead_ends)
    bounds = None
    if eliminate:
        bounds = ValueBounds(V, upper_bound(mdp, upper_passes))
    stats = value_iteration(mdp, V, None, cfg, eliminate, bounds)
    stats.wall_time = time.perf_counter() - t0
    return V, stats


def solve_components(mdp: Mdp, V: np.ndarray, dec: SccDecomposition, cfg: SolverConfig,
                     eliminate: bool = False, Vu: np.ndarray | None = None,
                     elim: np.ndarray | None = None):
    """Run VI on each component in increasing id order (successors first)."""
    if elim is None:
        elim = no_elimination(mdp)
    comp_backups = np.zeros(dec.cpntnum, dtype=np.int64)
    backups, sweeps, _, ok = _tvi(dec.comp_ptr, dec.members, V, V if Vu is None else Vu, elim,
                                  eliminate, mdp.goal, *mdp.arrays(), cfg.delta, cfg.value_cap,
                                  cfg.max_sweeps or 0, comp_backups)
    return int(backups), int(sweeps), bool(ok), comp_backups


def tvi(mdp: Mdp, cfg: SolverConfig | None = None, use_reachability: bool = True,
        initial_V: np.ndarray | None = None):
    """Topological value iteration.

    Decomposes the reachability graph into SCCs and solves them one at a
    time, each by Gauss-Seidel VI, in topological (successors-first) order.
    Returns ``(V, stats)``; ``stats.extra["decomposition"]`` holds the SCCs.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    V = starting_values(mdp, initial_V, cfg.detect_dead_ends)
    restrict = reachable_mask(mdp) if use_reachability else None
    graph = build_graph(mdp, None, restrict)
    dec = kosaraju_scc(graph)
    t_gen = time.perf_counter() - t0
    backups, sweeps, ok, comp_backups = solve_components(mdp, V, dec, cfg)
    stats = SolveStats("tvi", backups, sweeps, dec.cpntnum, dec.max_size, 0,
                       converged=ok, v_s0=float(V[mdp.initial]))
    stats.extra.update(decomposition=dec, component_backups=comp_backups, t_gen=t_gen)
    stats.wall_time = time.perf_counter() - t0
    _check_initial(mdp, V)
    return V, stats


__all__ = ["SolverConfig", "SolveStats", "starting_values", "value_iteration", "solve_vi",
           "solve_components", "tvi"]

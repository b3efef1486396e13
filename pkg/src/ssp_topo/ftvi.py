"""Focused topological value iteration.

A short bounded search phase maintains lower and upper value bounds and
discards provably suboptimal actions; the remaining actions induce a sparser
graph whose SCCs are then solved in topological order.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .bounds import ValueBounds, upper_bound
from .errors import DivergentValue
from .graph import SccDecomposition, StateGraph, build_graph, kosaraju_scc, reachable_mask
from .mdp import Mdp, extract_policy, no_elimination
from .search import SearchWorkspace, multi_root_iterations, search_iterations
from .vi import SolverConfig, SolveStats, solve_components, starting_values


@dataclass
class FtviConfig:
    x: int = 100
    y: float = 3.0
    delta: float = 1e-6
    upper_passes: int = 3
    intra_component: bool = False
    finite_upper: bool = False
    value_cap: float = 1e12
    max_batches: int | None = None
    detect_dead_ends: bool = True

    def __post_init__(self):
        if self.x < 1:
            raise ValueError("x must be >= 1")
        if not 0 < self.y < 100:
            raise ValueError("y must lie in (0, 100)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(delta=self.delta, value_cap=self.value_cap,
                            detect_dead_ends=self.detect_dead_ends)


class SearchOutcome(enum.Enum):
    CONVERGED = "converged"
    PROCEED = "proceed"


def dual_backup(mdp: Mdp, bounds: ValueBounds, mask: np.ndarray, s: int) -> float:
    """Eliminate actions of ``s`` whose lower-bound Q exceeds the upper bound
    of ``s``, then back up both bounds over the survivors.

    Returns the change of the lower bound.
    """
    if mdp.goal[s]:
        raise ValueError(f"state {s} is a goal")
    r, _ = K.dual_backup(s, bounds.lower, bounds.upper, *mdp.arrays(), mask, True)
    return float(r)


def search_phase(mdp: Mdp, bounds: ValueBounds, mask: np.ndarray, cfg: FtviConfig,
                 on_batch: Callable[[ValueBounds, np.ndarray], None] | None = None,
                 workspace: SearchWorkspace | None = None,
                 info: dict | None = None) -> SearchOutcome:
    """Batches of ``cfg.x`` search iterations from the initial state.

    Returns CONVERGED as soon as one iteration backs up every state of its
    greedy graph with a residual below ``cfg.delta``. After a batch, searching
    stops when the lower bound of the initial state improved by less than
    ``cfg.y`` percent.
    """
    s0 = mdp.initial
    Vl, Vu = bounds.lower, bounds.upper
    ws = workspace or SearchWorkspace(mdp.num_states)
    info = {} if info is None else info
    info.setdefault("iterations", 0)
    info.setdefault("backups", 0)
    info.setdefault("batches", 0)
    if mdp.goal[s0]:
        return SearchOutcome.CONVERGED
    dummy = np.zeros(1, dtype=np.int64)
    keep_ratio = (100.0 - cfg.y) / 100.0
    while True:
        old_value = Vl[s0]
        done, it, b, _ = search_iterations(s0, cfg.x, cfg.delta, Vl, Vu, mask, True, True, dummy,
                                           -1, mdp.goal, *mdp.arrays(), *ws.arrays())
        info["iterations"] += int(it)
        info["backups"] += int(b)
        info["batches"] += 1
        if on_batch is not None:
            on_batch(bounds, mask)
        if not Vl[s0] < np.inf:
            raise DivergentValue(f"value of initial state {s0} diverged", state=s0)
        if done:
            return SearchOutcome.CONVERGED
        # 0/0 (no progress from a zero lower bound yet) keeps searching
        if Vl[s0] > 0 and old_value / Vl[s0] > keep_ratio:
            return SearchOutcome.PROCEED
        if cfg.max_batches is not None and info["batches"] >= cfg.max_batches:
            return SearchOutcome.PROCEED


def build_pruned_graph(mdp: Mdp, mask: np.ndarray) -> StateGraph:
    """Graph over surviving actions, restricted to states the initial state
    reaches through them."""
    keep = ~mask
    return build_graph(mdp, keep, reachable_mask(mdp, mdp.initial, keep))


def source_states(graph: StateGraph, dec: SccDecomposition, c: int, initial: int) -> np.ndarray:
    """States of component ``c`` entered from outside it.

    If the component has no incoming edge from elsewhere (it holds the
    initial state, say), the initial state or else its lowest state is used.
    """
    members = dec.component(c)
    src_of = np.repeat(np.arange(graph.num_vertices), np.diff(graph.indptr))
    into = (dec.id[graph.indices] == c) & (dec.id[src_of] != c)
    roots = np.unique(graph.indices[into])
    if roots.size:
        return roots
    if dec.id[initial] == c:
        return np.array([initial], dtype=np.int64)
    return members[:1].copy()


def intra_component_search(mdp: Mdp, bounds: ValueBounds, mask: np.ndarray, dec: SccDecomposition,
                           c: int, roots: np.ndarray, cfg: FtviConfig,
                           workspace: SearchWorkspace | None = None) -> int:
    """Search iterations confined to component ``c`` from each root; any
    branch stops at the component boundary. Returns backups performed."""
    ws = workspace or SearchWorkspace(mdp.num_states)
    _, _, b, _ = multi_root_iterations(np.asarray(roots, dtype=np.int64), cfg.x, cfg.delta,
                                       bounds.lower, bounds.upper, mask, dec.id, c, mdp.goal,
                                       *mdp.arrays(), *ws.arrays())
    return int(b)


def ftvi(mdp: Mdp, cfg: FtviConfig | None = None, initial_V: np.ndarray | None = None,
         on_batch: Callable[[ValueBounds, np.ndarray], None] | None = None):
    """Returns ``(V_l, policy, stats)``.

    ``stats.extra`` carries the search/computation split, the elimination
    mask and the bounds. ``scc_count``/``max_scc`` stay 0 when the search
    step already converged.
    """
    cfg = cfg or FtviConfig()
    scfg = cfg.solver_config()
    t0 = time.perf_counter()
    stats = SolveStats("ftvi")
    mask = no_elimination(mdp)
    if mdp.goal[mdp.initial]:
        V = np.zeros(mdp.num_states)
        stats.converged = True
        stats.v_s0 = 0.0
        stats.extra.update(search_converged=True, mask=mask)
        return V, np.full(mdp.num_states, -1, dtype=np.int64), stats

    Vl = starting_values(mdp, initial_V, cfg.detect_dead_ends)
    Vu = upper_bound(mdp, cfg.upper_passes, cfg.finite_upper)
    Vu[~(Vl < np.inf)] = np.inf
    bounds = ValueBounds(Vl, Vu)
    ws = SearchWorkspace(mdp.num_states)
    info: dict = {}
    outcome = search_phase(mdp, bounds, mask, cfg, on_batch, ws, info)
    t_search = time.perf_counter() - t0
    stats.backups = info["backups"]
    stats.sweeps = info["iterations"]
    stats.extra.update(search_converged=outcome is SearchOutcome.CONVERGED,
                       search_iterations=info["iterations"], search_backups=info["backups"],
                       batches=info["batches"], t_search=t_search, mask=mask, bounds=bounds)

    if outcome is SearchOutcome.PROCEED:
        t1 = time.perf_counter()
        graph = build_pruned_graph(mdp, mask)
        dec = kosaraju_scc(graph)
        stats.extra["t_gen"] = time.perf_counter() - t1
        stats.extra["decomposition"] = dec
        stats.scc_count = dec.cpntnum
        stats.max_scc = dec.max_size
        if cfg.intra_component:
            b, sw, ok, max_after = _solve_with_intra_search(mdp, bounds, mask, graph, dec, cfg, ws)
            stats.extra["max_scc_after_intra"] = max_after
        else:
            b, sw, ok, _ = solve_components(mdp, Vl, dec, scfg, eliminate=True, Vu=Vu, elim=mask)
        stats.backups += b
        stats.sweeps += sw
        stats.converged = ok
    else:
        stats.converged = True

    stats.eliminated_actions = int(mask.sum())
    stats.v_s0 = float(Vl[mdp.initial])
    if not Vl[mdp.initial] < np.inf:
        raise DivergentValue(f"value of initial state {mdp.initial} diverged", state=mdp.initial)
    policy = extract_policy(mdp, Vl, mask)
    stats.wall_time = time.perf_counter() - t0
    return Vl, policy, stats


def _solve_with_intra_search(mdp, bounds, mask, graph, dec, cfg, ws):
    scfg = cfg.solver_config()
    Vl, Vu = bounds.lower, bounds.upper
    backups = sweeps = 0
    max_after = 0
    ok = True
    for c in range(1, dec.cpntnum + 1):
        members = dec.component(c)
        if members.size > 1:
            roots = source_states(graph, dec, c, mdp.initial)
            backups += intra_component_search(mdp, bounds, mask, dec, c, roots, cfg, ws)
            sub = kosaraju_scc(build_graph(mdp, ~mask, members))
        else:
            sub = SccDecomposition(1, dec.id, np.array([0, 1], dtype=np.int64), members)
        max_after = max(max_after, sub.max_size)
        b, sw, sub_ok, _ = solve_components(mdp, Vl, sub, scfg, eliminate=True, Vu=Vu, elim=mask)
        backups += b
        sweeps += sw
        if not sub_ok:
            ok = False
            break
    return backups, sweeps, ok, max_after


__all__ = ["FtviConfig", "SearchOutcome", "dual_backup", "search_phase", "build_pruned_graph",
           "source_states", "intra_component_search", "ftvi"]

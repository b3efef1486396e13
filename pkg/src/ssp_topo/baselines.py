"""Heuristic-search baselines: ILAO*, LRTDP and BRTDP."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._jit import njit
from .bounds import ValueBounds, upper_bound
from .errors import DivergentValue
from .mdp import Mdp, no_elimination
from .rng import make_state, rand_unit
from .search import SearchWorkspace, search_iterations
from .vi import SolveStats, starting_values


@dataclass
class TrialConfig:
    delta: float = 1e-6
    alpha: float = 2e-6
    tau: float = 10.0
    max_trial_len: int | None = None
    rng_seed: int = 0
    max_trials: int = 10_000_000
    upper_passes: int = 3
    detect_dead_ends: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and self.tau > 0):
            raise ValueError("alpha and tau must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def trial_len(self, mdp: Mdp) -> int:
        return self.max_trial_len if self.max_trial_len is not None else 10 * mdp.num_states


def _divergence_check(mdp: Mdp, V: np.ndarray) -> None:
    if not V[mdp.initial] < np.inf:
        raise DivergentValue(f"value of initial state {mdp.initial} diverged", state=mdp.initial)


# -- ILAO* -----------------------------------------------------------------

def ilao_star(mdp: Mdp, V_l: np.ndarray | None = None, cfg: TrialConfig | None = None,
              max_iterations: int = 10_000_000):
    """Improved LAO*: repeated depth-first passes over the greedy graph from
    the initial state, each state backed up once in post-order, until a pass
    sees no residual of ``cfg.delta`` or more."""
    cfg = cfg or TrialConfig()
    t0 = time.perf_counter()
    stats = SolveStats("ilao")
    if mdp.goal[mdp.initial]:
        stats.converged, stats.v_s0 = True, 0.0
        return np.zeros(mdp.num_states), stats
    V = starting_values(mdp, V_l, cfg.detect_dead_ends)
    ws = SearchWorkspace(mdp.num_states)
    dummy = np.zeros(1, dtype=np.int64)
    done, it, b, _ = search_iterations(mdp.initial, max_iterations, cfg.delta, V, V,
                                       no_elimination(mdp), False, False, dummy, -1, mdp.goal,
                                       *mdp.arrays(), *ws.arrays())
    stats.backups, stats.sweeps, stats.converged = int(b), int(it), bool(done)
    stats.v_s0 = float(V[mdp.initial])
    stats.wall_time = time.perf_counter() - t0
    _divergence_check(mdp, V)
    return V, stats


# -- LRTDP -----------------------------------------------------------------

@njit
def _check_solved(s, V, solved, solved_value, delta, goal, act_ptr, cost, tr_ptr, succ, prob,
                  elim, flag, open_, closed):
    """Label the greedy closure of ``s`` solved if every unsolved state in it
    has residual <= delta; otherwise back the visited states up.

    Returns (labelled, backups).
    """
    rv = True
    n_open = 0
    n_closed = 0
    if not solved[s]:
        open_[0] = s
        flag[s] = True
        n_open = 1
    while n_open > 0:
        n_open -= 1
        u = open_[n_open]
        closed[n_closed] = u
        n_closed += 1
        if goal[u]:
            continue
        a, q = K.greedy_of(u, V, act_ptr, cost, tr_ptr, succ, prob, elim)
        if K.residual(V[u], q) > delta:
            rv = False
            continue
        for k in range(tr_ptr[a], tr_ptr[a + 1]):
            t = succ[k]
            if prob[k] > 0.0 and not solved[t] and not flag[t]:
                flag[t] = True
                open_[n_open] = t
                n_open += 1
    backups = 0
    if rv:
        for i in range(n_closed):
            solved[closed[i]] = True
            solved_value[closed[i]] = V[closed[i]]
    else:
        for i in range(n_closed - 1, -1, -1):
            u = closed[i]
            if not goal[u]:
                K.backup(u, V, act_ptr, cost, tr_ptr, succ, prob, elim)
                backups += 1
    for i in range(n_closed):
        flag[closed[i]] = False
    return rv, backups


@njit
def _lrtdp(s0, V, solved, solved_value, rng, delta, max_len, max_trials, goal, act_ptr, cost,
           tr_ptr, succ, prob):
    n = goal.shape[0]
    elim = np.zeros(cost.shape[0], dtype=np.bool_)
    flag = np.zeros(n, dtype=np.bool_)
    open_ = np.empty(n, dtype=np.int64)
    closed = np.empty(n, dtype=np.int64)
    visited = np.empty(max_len + 1, dtype=np.int64)
    backups = 0
    trials = 0
    while not solved[s0] and trials < max_trials:
        trials += 1
        depth = 0
        s = s0
        while not solved[s]:
            visited[depth] = s
            depth += 1
            K.backup(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
            backups += 1
            if not V[s] < np.inf or depth > max_len:
                break
            a, _ = K.greedy_of(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
            s = K.sample_successor(a, rand_unit(rng), tr_ptr, succ, prob)
        if not V[s0] < np.inf:
            break
        while depth > 0:
            depth -= 1
            u = visited[depth]
            ok, b = _check_solved(u, V, solved, solved_value, delta, goal, act_ptr, cost, tr_ptr, succ, prob,
                                  elim, flag, open_, closed)
            backups += b
            if not ok:
                break
    return backups, trials


def lrtdp(mdp: Mdp, V_l: np.ndarray | None = None, cfg: TrialConfig | None = None):
    """Labeled RTDP.

    Trials follow greedy actions and sampled outcomes, backing up each
    visited state; afterwards visited states are labelled solved in reverse
    order while the label check succeeds. Ends when the initial state is
    solved. ``stats.extra["solved_value"]`` records each state's value at the
    moment it was labelled (NaN if never).
    """
    cfg = cfg or TrialConfig()
    t0 = time.perf_counter()
    stats = SolveStats("lrtdp")
    if mdp.goal[mdp.initial]:
        stats.converged, stats.v_s0 = True, 0.0
        return np.zeros(mdp.num_states), stats
    V = starting_values(mdp, V_l, cfg.detect_dead_ends)
    solved = mdp.goal.copy()
    solved_value = np.full(mdp.num_states, np.nan)
    solved_value[mdp.goal] = 0.0
    rng = make_state(cfg.rng_seed)
    b, trials = _lrtdp(mdp.initial, V, solved, solved_value, rng, cfg.delta, cfg.trial_len(mdp),
                       cfg.max_trials, mdp.goal, *mdp.arrays())
    stats.backups, stats.sweeps = int(b), int(trials)
    stats.converged = bool(solved[mdp.initial])
    stats.v_s0 = float(V[mdp.initial])
    stats.extra.update(solved=solved, solved_value=solved_value)
    stats.wall_time = time.perf_counter() - t0
    _divergence_check(mdp, V)
    return V, stats


# -- BRTDP -----------------------------------------------------------------

@njit
def _brtdp_pick(a, Vl, Vu, u, tr_ptr, succ, prob):
    """Sample a successor with weight T(s'|s,a) * (Vu(s') - Vl(s')).

    Returns (successor or -1, total weight). Infinite gaps take precedence.
    """
    total = 0.0
    n_inf = 0.0
    for k in range(tr_ptr[a], tr_ptr[a + 1]):
        t = succ[k]
        g = Vu[t] - Vl[t]
        if g == np.inf:
            n_inf += prob[k]
        elif g > 0.0:
            total += prob[k] * g
    if n_inf > 0.0:
        target = u * n_inf
        acc = 0.0
        last = -1
        for k in range(tr_ptr[a], tr_ptr[a + 1]):
            t = succ[k]
            if Vu[t] - Vl[t] == np.inf:
                acc += prob[k]
                last = t
                if target < acc:
                    return t, np.inf
        return last, np.inf
    if total <= 0.0:
        return -1, 0.0
    target = u * total
    acc = 0.0
    last = -1
    for k in range(tr_ptr[a], tr_ptr[a + 1]):
        t = succ[k]
        g = Vu[t] - Vl[t]
        if g > 0.0:
            acc += prob[k] * g
            last = t
            if target < acc:
                return t, total
    return last, total


@njit
def _brtdp(s0, Vl, Vu, rng, alpha, tau, max_len, max_trials, goal, act_ptr, cost, tr_ptr, succ,
           prob):
    elim = np.zeros(cost.shape[0], dtype=np.bool_)
    traj = np.empty(max_len + 1, dtype=np.int64)
    backups = 0
    trials = 0
    while Vu[s0] - Vl[s0] >= alpha and trials < max_trials:
        trials += 1
        depth = 0
        s = s0
        while True:
            traj[depth] = s
            depth += 1
            if goal[s]:
                break
            K.dual_backup(s, Vl, Vu, act_ptr, cost, tr_ptr, succ, prob, elim, False)
            backups += 1
            if depth > max_len:
                break
            a, _ = K.greedy_of(s, Vl, act_ptr, cost, tr_ptr, succ, prob, elim)
            t, mass = _brtdp_pick(a, Vl, Vu, rand_unit(rng), tr_ptr, succ, prob)
            if t < 0 or mass < (Vu[s0] - Vl[s0]) / tau:
                break
            s = t
        while depth > 0:
            depth -= 1
            u = traj[depth]
            if not goal[u]:
                K.dual_backup(u, Vl, Vu, act_ptr, cost, tr_ptr, succ, prob, elim, False)
                backups += 1
        if not Vl[s0] < np.inf:
            break
    return backups, trials


def brtdp(mdp: Mdp, bounds: ValueBounds | None = None, cfg: TrialConfig | None = None):
    """Bounded RTDP.

    Trials back up both bounds, act greedily on the lower bound and sample
    successors by transition probability times bound gap. A trial ends when
    that expected gap falls below gap(s0)/tau; the run ends when
    gap(s0) < alpha. Default bounds: h_min below, and above the backward
    upper bound capped by a proper policy's value (so it is finite).

    Returns ``(bounds, stats)`` with ``stats.v_s0`` the midpoint at s0.
    """
    cfg = cfg or TrialConfig()
    t0 = time.perf_counter()
    stats = SolveStats("brtdp")
    if bounds is None:
        Vl = starting_values(mdp, None, cfg.detect_dead_ends)
        Vu = upper_bound(mdp, cfg.upper_passes, finite=True)
        bounds = ValueBounds(Vl, Vu)
    Vl, Vu = bounds.lower, bounds.upper
    if mdp.goal[mdp.initial]:
        stats.converged, stats.v_s0 = True, 0.0
        return bounds, stats
    rng = make_state(cfg.rng_seed)
    b, trials = _brtdp(mdp.initial, Vl, Vu, rng, cfg.alpha, cfg.tau, cfg.trial_len(mdp),
                       cfg.max_trials, mdp.goal, *mdp.arrays())
    stats.backups, stats.sweeps = int(b), int(trials)
    stats.converged = bool(Vu[mdp.initial] - Vl[mdp.initial] < cfg.alpha)
    stats.v_s0 = float(0.5 * (Vl[mdp.initial] + Vu[mdp.initial]))
    stats.wall_time = time.perf_counter() - t0
    _divergence_check(mdp, Vl)
    return bounds, stats


__all__ = ["TrialConfig", "ilao_star", "lrtdp", "brtdp"]

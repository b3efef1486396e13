"""Per-state Bellman primitives shared by every solver kernel.

All functions take the MDP in its flat CSR form:

    act_ptr[s]:act_ptr[s+1]   global action ids applicable in state s
    cost[a]                   action cost
    tr_ptr[a]:tr_ptr[a+1]     transition slots of action a
    succ[k], prob[k]          successor id and probability of slot k

``elim`` is a boolean mask over global action ids (True = eliminated).
"""
from __future__ import annotations

import numpy as np

from ._jit import njit

INF = np.inf


@njit
def residual(old, new):
    if old == new:
        # also covers inf - inf
        return 0.0
    return abs(new - old)


@njit
def q_of(a, V, cost, tr_ptr, succ, prob):
    q = cost[a]
    for k in range(tr_ptr[a], tr_ptr[a + 1]):
        p = prob[k]
        if p > 0.0:
            q += p * V[succ[k]]
    return q


@njit
def greedy_of(s, V, act_ptr, cost, tr_ptr, succ, prob, elim):
    """Lowest-index argmin action among survivors; returns (action, q)."""
    best = INF
    best_a = -1
    for a in range(act_ptr[s], act_ptr[s + 1]):
        if elim[a]:
            continue
        q = q_of(a, V, cost, tr_ptr, succ, prob)
        if best_a < 0 or q < best:
            best = q
            best_a = a
    return best_a, best


@njit
def backup(s, V, act_ptr, cost, tr_ptr, succ, prob, elim):
    a, q = greedy_of(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
    old = V[s]
    V[s] = q
    return residual(old, q)


@njit
def elim_margin(vu):
    # rounding guard so converged bounds never eliminate an optimal action
    return 1e-12 * (1.0 + abs(vu))


@njit
def backup_eliminating(s, V, Vu, act_ptr, cost, tr_ptr, succ, prob, elim):
    """Backup of V at s that first drops actions with Q(s,a) > Vu(s).

    Returns (residual, number of newly eliminated actions).
    """
    vu = Vu[s]
    best = INF
    best_a = -1
    n_new = 0
    for a in range(act_ptr[s], act_ptr[s + 1]):
        if elim[a]:
            continue
        q = q_of(a, V, cost, tr_ptr, succ, prob)
        if q > vu + elim_margin(vu):
            elim[a] = True
            n_new += 1
            continue
        if best_a < 0 or q < best:
            best = q
            best_a = a
    assert best_a >= 0, "every action of a state was eliminated"
    old = V[s]
    V[s] = best
    return residual(old, best), n_new


@njit
def dual_backup(s, Vl, Vu, act_ptr, cost, tr_ptr, succ, prob, elim, eliminate):
    """Back up both bounds at s; optionally eliminate by Q_l(s,a) > Vu(s).

    Bounds are kept monotone: Vl never decreases and Vu never increases.
    Returns (residual of Vl, number of newly eliminated actions).
    """
    vu_old = Vu[s]
    best_l = INF
    best_u = INF
    found = False
    n_new = 0
    for a in range(act_ptr[s], act_ptr[s + 1]):
        if elim[a]:
            continue
        ql = q_of(a, Vl, cost, tr_ptr, succ, prob)
        if eliminate and ql > vu_old + elim_margin(vu_old):
            elim[a] = True
            n_new += 1
            continue
        qu = q_of(a, Vu, cost, tr_ptr, succ, prob)
        if not found or ql < best_l:
            best_l = ql
        if not found or qu < best_u:
            best_u = qu
        found = True
    assert found, "every action of a state was eliminated"
    old = Vl[s]
    if best_l > old:
        Vl[s] = best_l
    if best_u < vu_old:
        Vu[s] = best_u
    return residual(old, Vl[s]), n_new


@njit
def sample_successor(a, u, tr_ptr, succ, prob):
    """Successor of action ``a`` by cumulative-probability inversion of ``u``."""
    lo = tr_ptr[a]
    hi = tr_ptr[a + 1]
    acc = 0.0
    for k in range(lo, hi):
        acc += prob[k]
        if u < acc:
            return succ[k]
    # u landed in the rounding gap above the cumulative sum
    for k in range(hi - 1, lo - 1, -1):
        if prob[k] > 0.0:
            return succ[k]
    return succ[hi - 1]

"""Admissible lower bound (h_min) and upper bounds on the optimal value."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._jit import njit
from .graph import _build_csr, _reverse_csr, dead_end_mask, transition_index
from .mdp import Mdp, evaluate_policy


@dataclass(eq=False)
class ValueBounds:
    lower: np.ndarray
    upper: np.ndarray

    def gap(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            g = self.upper - self.lower
        g[np.isnan(g)] = 0.0
        return g


@njit
def _hmin(goal, act_ptr, cost, tr_ptr, succ, prob):
    n = goal.shape[0]
    na = cost.shape[0]
    state_of = np.empty(na, dtype=np.int64)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            state_of[a] = s
    rptr, rslot, owner = transition_index(n, act_ptr, tr_ptr, succ)
    h = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    heap = [(0.0, np.int64(0))]
    heapq.heappop(heap)
    for g in range(n):
        if goal[g]:
            h[g] = 0.0
            heapq.heappush(heap, (0.0, np.int64(g)))
    while len(heap) > 0:
        d, t = heapq.heappop(heap)
        if done[t]:
            continue
        done[t] = True
        for i in range(rptr[t], rptr[t + 1]):
            k = rslot[i]
            if prob[k] <= 0.0:
                continue
            a = owner[k]
            s = state_of[a]
            if goal[s] or done[s]:
                continue
            nd = d + cost[a]
            if nd < h[s]:
                h[s] = nd
                heapq.heappush(heap, (nd, s))
    return h


def h_min(mdp: Mdp) -> np.ndarray:
    """Exact optimal cost of the all-outcomes determinization.

    Every (action, successor) pair becomes a deterministic edge with the
    action's cost; a backward Dijkstra from the goals yields the value.
    States with no path to a goal get ``inf``.
    """
    return _hmin(mdp.goal, *mdp.arrays())


@njit
def _upper_q(s, Vu, act_ptr, cost, tr_ptr, succ, prob):
    best = np.inf
    for a in range(act_ptr[s], act_ptr[s + 1]):
        q = K.q_of(a, Vu, cost, tr_ptr, succ, prob)
        if q < best:
            best = q
    return best


@njit
def _upper_passes(Vu, passes, goal, act_ptr, cost, tr_ptr, succ, prob, pptr, pind):
    n = goal.shape[0]
    closed = np.zeros(n, dtype=np.bool_)
    for _ in range(passes):
        closed[:] = False
        heap = [(0.0, np.int64(0))]
        heapq.heappop(heap)
        for g in range(n):
            if goal[g]:
                heapq.heappush(heap, (0.0, np.int64(g)))
        while len(heap) > 0:
            d, u = heapq.heappop(heap)
            if closed[u] or d > Vu[u]:
                continue
            closed[u] = True
            if not goal[u]:
                b = _upper_q(u, Vu, act_ptr, cost, tr_ptr, succ, prob)
                if b < Vu[u]:
                    Vu[u] = b
            for i in range(pptr[u], pptr[u + 1]):
                p = pind[i]
                if closed[p] or goal[p]:
                    continue
                b = _upper_q(p, Vu, act_ptr, cost, tr_ptr, succ, prob)
                if b < Vu[p]:
                    Vu[p] = b
                if Vu[p] < np.inf:
                    heapq.heappush(heap, (Vu[p], p))
    return Vu


def init_upper_bound(mdp: Mdp, passes: int = 3) -> np.ndarray:
    """Upper bound from 0-at-goals / inf-elsewhere, tightened by ``passes``
    backward best-first sweeps of upper-bound backups from the goals.

    Each sweep pops states in increasing current bound and backs up the
    popped state and its predecessors. States that stay on cycles with no
    finite exit keep ``inf``.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    n = mdp.num_states
    Vu = np.full(n, np.inf)
    Vu[mdp.goal] = 0.0
    keep = np.ones(mdp.num_actions, dtype=np.bool_)
    active = np.ones(n, dtype=np.bool_)
    indptr, indices = _build_csr(active, mdp.goal, mdp.act_ptr, mdp.tr_ptr, mdp.succ, mdp.prob, keep)
    pptr, pind = _reverse_csr(indptr, indices)
    return _upper_passes(Vu, int(passes), mdp.goal, *mdp.arrays(), pptr, pind)


@njit
def _progress_policy(goal, proper, act_ptr, tr_ptr, succ, prob):
    n = goal.shape[0]
    na = tr_ptr.shape[0] - 1
    allowed = np.zeros(na, dtype=np.bool_)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            ok = True
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                if not proper[succ[k]]:
                    ok = False
                    break
            allowed[a] = ok
    # hop distance to the goals over allowed actions
    rptr, rslot, owner = transition_index(n, act_ptr, tr_ptr, succ)
    state_of = np.empty(na, dtype=np.int64)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            state_of[a] = s
    hop = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for g in range(n):
        if goal[g]:
            hop[g] = 0
            queue[tail] = g
            tail += 1
    while head < tail:
        t = queue[head]
        head += 1
        for i in range(rptr[t], rptr[t + 1]):
            a = owner[rslot[i]]
            s = state_of[a]
            if allowed[a] and hop[s] < 0:
                hop[s] = hop[t] + 1
                queue[tail] = s
                tail += 1
    policy = np.full(n, -1, dtype=np.int64)
    for s in range(n):
        if goal[s] or hop[s] < 0:
            continue
        best = -1.0
        for a in range(act_ptr[s], act_ptr[s + 1]):
            if not allowed[a]:
                continue
            mass = 0.0
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                if hop[succ[k]] >= 0 and hop[succ[k]] < hop[s]:
                    mass += prob[k]
            if mass > best:
                best = mass
                policy[s] = a - act_ptr[s]
    return policy


def policy_upper_bound(mdp: Mdp) -> np.ndarray:
    """Value of a proper policy that always picks the action with the most
    probability mass on states strictly closer (in hops) to a goal.

    Finite on every state that has a proper policy, ``inf`` on dead ends.
    """
    proper = ~dead_end_mask(mdp)
    policy = _progress_policy(mdp.goal, proper, mdp.act_ptr, mdp.tr_ptr, mdp.succ, mdp.prob)
    V = evaluate_policy(mdp, policy)
    V[np.isnan(V)] = np.inf
    return V


def upper_bound(mdp: Mdp, passes: int = 3, finite: bool = False) -> np.ndarray:
    """``init_upper_bound``; with ``finite`` also capped by ``policy_upper_bound``."""
    Vu = init_upper_bound(mdp, passes)
    if finite:
        np.minimum(Vu, policy_upper_bound(mdp), out=Vu)
    return Vu


def initial_bounds(mdp: Mdp, passes: int = 3, finite: bool = False) -> ValueBounds:
    return ValueBounds(h_min(mdp), upper_bound(mdp, passes, finite))


__all__ = ["ValueBounds", "h_min", "init_upper_bound", "policy_upper_bound", "upper_bound",
           "initial_bounds"]

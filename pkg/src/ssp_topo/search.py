"""Depth-first greedy search with post-order backups.

One call of :func:`dfs_backup` is one search iteration: starting at ``root``
it follows the current greedy action (by the lower bound) of each newly
visited state, recurses into unvisited successors, and backs each state up
once on the way out. ILAO* and the search step of FTVI are both built on it.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K
from ._jit import njit


class SearchWorkspace:
    """Reusable scratch arrays so repeated iterations allocate nothing."""

    def __init__(self, n: int):
        self.visit = np.zeros(n, dtype=np.int64)
        self.stamp = np.zeros(1, dtype=np.int64)
        self.stack = np.empty(n, dtype=np.int64)
        self.cursor = np.empty(n, dtype=np.int64)
        self.chosen = np.empty(n, dtype=np.int64)

    def arrays(self):
        return self.visit, self.stamp, self.stack, self.cursor, self.chosen


@njit
def dfs_backup(root, Vl, Vu, elim, dual, eliminate, comp, cid, goal, act_ptr, cost, tr_ptr,
               succ, prob, visit, stamp, stack, cursor, chosen):
    """Returns (max residual of backed-up states, backups, newly eliminated).

    States already carrying the current ``stamp[0]`` are skipped. With
    ``cid >= 0`` the search never enters states whose ``comp`` differs.
    """
    st = stamp[0]
    if goal[root] or visit[root] == st:
        return 0.0, 0, 0
    if cid >= 0 and comp[root] != cid:
        return 0.0, 0, 0
    err = 0.0
    backups = 0
    n_elim = 0
    visit[root] = st
    a, _ = K.greedy_of(root, Vl, act_ptr, cost, tr_ptr, succ, prob, elim)
    top = 0
    stack[0] = root
    chosen[0] = a
    cursor[0] = tr_ptr[a]
    while top >= 0:
        s = stack[top]
        a = chosen[top]
        i = cursor[top]
        if i < tr_ptr[a + 1]:
            cursor[top] = i + 1
            t = succ[i]
            if prob[i] > 0.0 and visit[t] != st and not goal[t] and (cid < 0 or comp[t] == cid):
                visit[t] = st
                at, _ = K.greedy_of(t, Vl, act_ptr, cost, tr_ptr, succ, prob, elim)
                top += 1
                stack[top] = t
                chosen[top] = at
                cursor[top] = tr_ptr[at]
        else:
            if dual:
                r, ne = K.dual_backup(s, Vl, Vu, act_ptr, cost, tr_ptr, succ, prob, elim, eliminate)
                n_elim += ne
            else:
                r = K.backup(s, Vl, act_ptr, cost, tr_ptr, succ, prob, elim)
            backups += 1
            if r > err:
                err = r
            top -= 1
    return err, backups, n_elim


@njit
def search_iterations(root, n_iter, delta, Vl, Vu, elim, dual, eliminate, comp, cid, goal,
                      act_ptr, cost, tr_ptr, succ, prob, visit, stamp, stack, cursor, chosen):
    """Up to ``n_iter`` iterations from ``root``; stops early once an
    iteration's error is below ``delta`` or the root value is infinite.

    Returns (converged, iterations, backups, newly eliminated).
    """
    backups = 0
    n_elim = 0
    for it in range(n_iter):
        stamp[0] += 1
        err, b, ne = dfs_backup(root, Vl, Vu, elim, dual, eliminate, comp, cid, goal, act_ptr,
                                cost, tr_ptr, succ, prob, visit, stamp, stack, cursor, chosen)
        backups += b
        n_elim += ne
        if err < delta:
            return True, it + 1, backups, n_elim
        if not Vl[root] < np.inf:
            return False, it + 1, backups, n_elim
    return False, n_iter, backups, n_elim


@njit
def multi_root_iterations(roots, n_iter, delta, Vl, Vu, elim, comp, cid, goal, act_ptr, cost,
                          tr_ptr, succ, prob, visit, stamp, stack, cursor, chosen):
    """Iterations that search from every root in turn with shared visit marks."""
    backups = 0
    n_elim = 0
    for it in range(n_iter):
        stamp[0] += 1
        err = 0.0
        for j in range(roots.shape[0]):
            e, b, ne = dfs_backup(roots[j], Vl, Vu, elim, True, True, comp, cid, goal, act_ptr,
                                  cost, tr_ptr, succ, prob, visit, stamp, stack, cursor, chosen)
            backups += b
            n_elim += ne
            if e > err:
                err = e
        if err < delta:
            return True, it + 1, backups, n_elim
    return False, n_iter, backups, n_elim


__all__ = ["SearchWorkspace", "dfs_backup", "search_iterations", "multi_root_iterations"]

"""State graphs, Kosaraju SCC decomposition and reachability."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ._jit import njit
from .mdp import Mdp

ActionFilter = Callable[[int, int], bool]


@dataclass(frozen=True, eq=False)
class StateGraph:
    """Deduplicated adjacency in CSR form over state ids.

    Vertices outside ``active`` carry no edges and belong to no component.
    """

    num_vertices: int
    indptr: np.ndarray
    indices: np.ndarray
    active: np.ndarray

    def successors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> set[tuple[int, int]]:
        src = np.repeat(np.arange(self.num_vertices), np.diff(self.indptr))
        return set(zip(src.tolist(), self.indices.tolist()))

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True, eq=False)
class SccDecomposition:
    """Component ids in ``1..cpntnum`` with descendants numbered first.

    For every edge u -> v across components, ``id[v] < id[u]``; so solving in
    increasing id order sees every successor component already solved.
    ``id[v] == 0`` marks vertices outside the graph.
    """

    cpntnum: int
    id: np.ndarray
    comp_ptr: np.ndarray
    members: np.ndarray

    def component(self, i: int) -> np.ndarray:
        """States of component ``i`` (1-based), ascending."""
        return self.members[self.comp_ptr[i - 1]:self.comp_ptr[i]]

    @property
    def component_members(self) -> list[np.ndarray]:
        return [self.component(i) for i in range(1, self.cpntnum + 1)]

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.comp_ptr)

    @property
    def max_size(self) -> int:
        return int(self.sizes.max()) if self.cpntnum else 0


def _as_keep_mask(mdp: Mdp, action_filter) -> np.ndarray:
    if action_filter is None:
        return np.ones(mdp.num_actions, dtype=np.bool_)
    if callable(action_filter):
        keep = np.zeros(mdp.num_actions, dtype=np.bool_)
        for s in range(mdp.num_states):
            base = mdp.act_ptr[s]
            for slot in range(mdp.n_actions(s)):
                keep[base + slot] = bool(action_filter(s, slot))
        return keep
    keep = np.asarray(action_filter, dtype=np.bool_)
    if keep.shape != (mdp.num_actions,):
        raise ValueError("action mask must have one entry per action")
    return keep


def _as_state_mask(n: int, restrict) -> np.ndarray:
    if restrict is None:
        return np.ones(n, dtype=np.bool_)
    arr = np.asarray(restrict)
    if arr.dtype == np.bool_ and arr.shape == (n,):
        return arr
    mask = np.zeros(n, dtype=np.bool_)
    mask[np.fromiter(restrict, dtype=np.int64)] = True
    return mask


@njit
def _build_csr(active, goal, act_ptr, tr_ptr, succ, prob, keep):
    n = active.shape[0]
    mark = np.full(n, -1, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        cnt = 0
        if active[s] and not goal[s]:
            for a in range(act_ptr[s], act_ptr[s + 1]):
                if not keep[a]:
                    continue
                for k in range(tr_ptr[a], tr_ptr[a + 1]):
                    t = succ[k]
                    if t != s and prob[k] > 0.0 and active[t] and mark[t] != s:
                        mark[t] = s
                        cnt += 1
        indptr[s + 1] = indptr[s] + cnt
    indices = np.empty(indptr[n], dtype=np.int64)
    mark[:] = -1
    for s in range(n):
        pos = indptr[s]
        if active[s] and not goal[s]:
            for a in range(act_ptr[s], act_ptr[s + 1]):
                if not keep[a]:
                    continue
                for k in range(tr_ptr[a], tr_ptr[a + 1]):
                    t = succ[k]
                    if t != s and prob[k] > 0.0 and active[t] and mark[t] != s:
                        mark[t] = s
                        indices[pos] = t
                        pos += 1
    return indptr, indices


def build_graph(mdp: Mdp, action_filter: ActionFilter | np.ndarray | None = None,
                restrict: Iterable[int] | np.ndarray | None = None) -> StateGraph:
    """Edge u -> v iff a kept action of u reaches v with positive probability.

    ``action_filter`` is a keep-mask over global action ids or a predicate
    ``(state, slot) -> bool``. Self-loops are dropped; goals have no out-edges.
    """
    keep = _as_keep_mask(mdp, action_filter)
    active = _as_state_mask(mdp.num_states, restrict)
    indptr, indices = _build_csr(active, mdp.goal, mdp.act_ptr, mdp.tr_ptr, mdp.succ, mdp.prob, keep)
    return StateGraph(mdp.num_states, indptr, indices, active.copy())


@njit
def _reverse_csr(indptr, indices):
    n = indptr.shape[0] - 1
    rptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(indices.shape[0]):
        rptr[indices[i] + 1] += 1
    for v in range(n):
        rptr[v + 1] += rptr[v]
    fill = rptr[:-1].copy()
    rind = np.empty(indices.shape[0], dtype=np.int64)
    for u in range(n):
        for i in range(indptr[u], indptr[u + 1]):
            v = indices[i]
            rind[fill[v]] = u
            fill[v] += 1
    return rptr, rind


@njit
def _kosaraju(indptr, indices, active):
    n = indptr.shape[0] - 1
    # pass 1: finishing order of an iterative DFS on G
    visited = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    n_order = 0
    stack = np.empty(n, dtype=np.int64)
    cursor = np.empty(n, dtype=np.int64)
    for root in range(n):
        if visited[root] or not active[root]:
            continue
        top = 0
        stack[0] = root
        cursor[0] = indptr[root]
        visited[root] = True
        while top >= 0:
            v = stack[top]
            i = cursor[top]
            if i < indptr[v + 1]:
                cursor[top] = i + 1
                w = indices[i]
                if not visited[w]:
                    visited[w] = True
                    top += 1
                    stack[top] = w
                    cursor[top] = indptr[w]
            else:
                order[n_order] = v
                n_order += 1
                top -= 1
    # pass 2: trees of the reverse graph in decreasing finish time
    rptr, rind = _reverse_csr(indptr, indices)
    disc = np.full(n, -1, dtype=np.int64)
    count = 0
    for j in range(n_order - 1, -1, -1):
        root = order[j]
        if disc[root] >= 0:
            continue
        disc[root] = count
        top = 0
        stack[0] = root
        while top >= 0:
            v = stack[top]
            top -= 1
            for i in range(rptr[v], rptr[v + 1]):
                w = rind[i]
                if disc[w] < 0:
                    disc[w] = count
                    top += 1
                    stack[top] = w
        count += 1
    # discovery order is source-first; flip so sinks get the smallest ids
    comp = np.zeros(n, dtype=np.int64)
    for v in range(n):
        if disc[v] >= 0:
            comp[v] = count - disc[v]
    return comp, count


def kosaraju_scc(graph: StateGraph) -> SccDecomposition:
    """Strongly connected components with a topological, sink-first numbering."""
    comp, count = _kosaraju(graph.indptr, graph.indices, graph.active)
    count = int(count)
    inside = np.flatnonzero(comp > 0)
    members = inside[np.argsort(comp[inside], kind="stable")]
    comp_ptr = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(np.bincount(comp[inside], minlength=count + 1)[1:], out=comp_ptr[1:])
    return SccDecomposition(count, comp, comp_ptr, members)


@njit
def _reachable(src, goal, act_ptr, tr_ptr, succ, prob, keep):
    n = goal.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    seen[src] = True
    stack[0] = src
    top = 1
    while top > 0:
        top -= 1
        s = stack[top]
        if goal[s]:
            continue
        for a in range(act_ptr[s], act_ptr[s + 1]):
            if not keep[a]:
                continue
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                t = succ[k]
                if prob[k] > 0.0 and not seen[t]:
                    seen[t] = True
                    stack[top] = t
                    top += 1
    return seen


def reachable_mask(mdp: Mdp, source: int | None = None, action_filter=None) -> np.ndarray:
    src = mdp.initial if source is None else int(source)
    keep = _as_keep_mask(mdp, action_filter)
    return _reachable(src, mdp.goal, mdp.act_ptr, mdp.tr_ptr, mdp.succ, mdp.prob, keep)


def reachable_states(mdp: Mdp, source: int | None = None, action_filter=None) -> set[int]:
    """States reachable from ``source`` (default: initial) via kept actions."""
    return set(np.flatnonzero(reachable_mask(mdp, source, action_filter)).tolist())


@njit
def transition_index(n, act_ptr, tr_ptr, succ):
    """Reverse transition index: for each state t, the slots k with succ[k] == t,
    plus the owning action of every slot."""
    na = tr_ptr.shape[0] - 1
    owner = np.empty(succ.shape[0], dtype=np.int64)
    for a in range(na):
        for k in range(tr_ptr[a], tr_ptr[a + 1]):
            owner[k] = a
    rptr = np.zeros(n + 1, dtype=np.int64)
    for k in range(succ.shape[0]):
        rptr[succ[k] + 1] += 1
    for v in range(n):
        rptr[v + 1] += rptr[v]
    fill = rptr[:-1].copy()
    rslot = np.empty(succ.shape[0], dtype=np.int64)
    for k in range(succ.shape[0]):
        t = succ[k]
        rslot[fill[t]] = k
        fill[t] += 1
    return rptr, rslot, owner


@njit
def _proper_set(goal, act_ptr, tr_ptr, succ, prob):
    n = goal.shape[0]
    na = tr_ptr.shape[0] - 1
    state_of = np.empty(na, dtype=np.int64)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            state_of[a] = s
    rptr, rslot, owner = transition_index(n, act_ptr, tr_ptr, succ)
    allowed = np.ones(na, dtype=np.bool_)
    inside = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    while True:
        inside[:] = False
        top = 0
        for g in range(n):
            if goal[g]:
                inside[g] = True
                stack[top] = g
                top += 1
        while top > 0:
            top -= 1
            t = stack[top]
            for i in range(rptr[t], rptr[t + 1]):
                k = rslot[i]
                a = owner[k]
                if allowed[a] and prob[k] > 0.0:
                    s = state_of[a]
                    if not inside[s]:
                        inside[s] = True
                        stack[top] = s
                        top += 1
        changed = False
        for a in range(na):
            if not allowed[a]:
                continue
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                if prob[k] > 0.0 and not inside[succ[k]]:
                    allowed[a] = False
                    changed = True
                    break
        if not changed:
            return inside


def dead_end_mask(mdp: Mdp) -> np.ndarray:
    """States from which no policy reaches a goal with probability 1
    (optimal value infinite)."""
    return ~_proper_set(mdp.goal, mdp.act_ptr, mdp.tr_ptr, mdp.succ, mdp.prob)


__all__ = [
    "StateGraph", "SccDecomposition", "build_graph", "kosaraju_scc", "reachable_states",
    "reachable_mask", "dead_end_mask",
]

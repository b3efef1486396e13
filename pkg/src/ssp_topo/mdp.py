"""Sparse stochastic-shortest-path model and value-function primitives."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels as K
from ._jit import njit
from .errors import DivergentValue, ValidationError

PROB_TOL = 1e-9


class Action(NamedTuple):
    cost: float
    transitions: list[tuple[int, float]]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mdp:
    """Immutable SSP in compressed sparse form.

    Actions are numbered globally: state ``s`` owns ids
    ``act_ptr[s] .. act_ptr[s+1]-1`` and its *slot* ``i`` is global id
    ``act_ptr[s] + i``. Transition slots of action ``a`` are
    ``tr_ptr[a] .. tr_ptr[a+1]-1`` into ``succ``/``prob``.
    """

    num_states: int
    initial: int
    goal: np.ndarray
    act_ptr: np.ndarray
    cost: np.ndarray
    tr_ptr: np.ndarray
    succ: np.ndarray
    prob: np.ndarray

    def __post_init__(self):
        for name, dtype in (
            ("goal", np.bool_),
            ("act_ptr", np.int64),
            ("cost", np.float64),
            ("tr_ptr", np.int64),
            ("succ", np.int64),
            ("prob", np.float64),
        ):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=dtype)))
        object.__setattr__(self, "num_states", int(self.num_states))
        object.__setattr__(self, "initial", int(self.initial))

    @classmethod
    def from_arrays(cls, num_states, initial, goal, act_ptr, cost, tr_ptr, succ, prob,
                    prob_tol: float = PROB_TOL, validate: bool = True) -> "Mdp":
        goal = np.asarray(goal)
        if goal.dtype != np.bool_:
            mask = np.zeros(num_states, dtype=bool)
            mask[goal.astype(np.int64)] = True
            goal = mask
        m = cls(num_states, initial, goal, act_ptr, cost, tr_ptr, succ, prob)
        if validate:
            m.validate(prob_tol)
        return m

    @classmethod
    def from_lists(cls, num_states: int, initial: int, goals: Iterable[int],
                   actions: Sequence[Sequence[Action | tuple]],
                   prob_tol: float = PROB_TOL) -> "Mdp":
        """Build from per-state lists of ``(cost, [(succ, prob), ...])``."""
        if len(actions) != num_states:
            raise ValidationError(f"expected {num_states} action lists, got {len(actions)}")
        act_ptr = [0]
        cost, tr_ptr, succ, prob = [], [0], [], []
        for acts in actions:
            for c, trans in acts:
                cost.append(c)
                for t, p in trans:
                    succ.append(t)
                    prob.append(p)
                tr_ptr.append(len(succ))
            act_ptr.append(len(cost))
        goal = np.zeros(num_states, dtype=bool)
        for g in goals:
            if not 0 <= g < num_states:
                raise ValidationError(f"goal id {g} out of range")
            goal[g] = True
        return cls.from_arrays(num_states, initial, goal, act_ptr, cost, tr_ptr, succ, prob,
                               prob_tol=prob_tol)

    # -- invariants --------------------------------------------------------

    def validate(self, prob_tol: float = PROB_TOL) -> None:
        n = self.num_states
        if n < 1:
            raise ValidationError("an MDP needs at least one state")
        if not 0 <= self.initial < n:
            raise ValidationError(f"initial state {self.initial} out of range")
        if self.goal.shape != (n,) or self.act_ptr.shape != (n + 1,):
            raise ValidationError("state arrays have the wrong length")
        na = self.cost.shape[0]
        if self.act_ptr[0] != 0 or self.act_ptr[-1] != na or np.any(np.diff(self.act_ptr) < 0):
            raise ValidationError("malformed action pointer array")
        if self.tr_ptr.shape != (na + 1,) or self.tr_ptr[0] != 0 or self.tr_ptr[-1] != self.succ.shape[0]:
            raise ValidationError("malformed transition pointer array")
        if np.any(np.diff(self.tr_ptr) < 1):
            raise ValidationError("every action needs at least one successor")
        counts = np.diff(self.act_ptr)
        bad = np.flatnonzero(self.goal & (counts > 0))
        if bad.size:
            raise ValidationError(f"goal state {bad[0]} has actions")
        bad = np.flatnonzero(~self.goal & (counts == 0))
        if bad.size:
            raise ValidationError(f"non-goal state {bad[0]} has no actions")
        if not np.all(self.cost > 0) or not np.all(np.isfinite(self.cost)):
            a = int(np.flatnonzero(~(self.cost > 0) | ~np.isfinite(self.cost))[0])
            raise ValidationError(f"action {self.action_ref(a)} has non-positive cost {self.cost[a]}")
        if self.succ.size and (self.succ.min() < 0 or self.succ.max() >= n):
            raise ValidationError("successor id out of range")
        if not np.all((self.prob > 0) & (self.prob <= 1)):
            raise ValidationError("transition probabilities must lie in (0, 1]")
        sums = np.add.reduceat(self.prob, self.tr_ptr[:-1]) if na else np.zeros(0)
        off = np.flatnonzero(np.abs(sums - 1.0) > prob_tol)
        if off.size:
            a = int(off[0])
            raise ValidationError(
                f"action {self.action_ref(a)} probabilities sum to {sums[a]!r}")
        dup = _first_duplicate_successor(self.tr_ptr, self.succ)
        if dup >= 0:
            raise ValidationError(f"action {self.action_ref(dup)} repeats a successor")

    # -- accessors ---------------------------------------------------------

    @property
    def num_actions(self) -> int:
        return int(self.cost.shape[0])

    @property
    def goals(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.goal).tolist())

    def n_actions(self, s: int) -> int:
        return int(self.act_ptr[s + 1] - self.act_ptr[s])

    def action_id(self, s: int, slot: int) -> int:
        if not 0 <= slot < self.n_actions(s):
            raise IndexError(f"state {s} has no action slot {slot}")
        return int(self.act_ptr[s] + slot)

    def action_ref(self, a: int) -> tuple[int, int]:
        """(state, slot) of global action id ``a``."""
        s = int(np.searchsorted(self.act_ptr, a, side="right") - 1)
        return s, int(a - self.act_ptr[s])

    def action(self, s: int, slot: int) -> Action:
        a = self.action_id(s, slot)
        lo, hi = self.tr_ptr[a], self.tr_ptr[a + 1]
        return Action(float(self.cost[a]),
                      list(zip(self.succ[lo:hi].tolist(), self.prob[lo:hi].tolist())))

    def actions(self, s: int) -> list[Action]:
        return [self.action(s, i) for i in range(self.n_actions(s))]

    def arrays(self):
        """The CSR tuple consumed by kernels."""
        return self.act_ptr, self.cost, self.tr_ptr, self.succ, self.prob

    def action_owner(self) -> np.ndarray:
        """State id of every global action."""
        return np.repeat(np.arange(self.num_states, dtype=np.int64), np.diff(self.act_ptr))

    def same_as(self, other: "Mdp") -> bool:
        return (self.num_states == other.num_states and self.initial == other.initial
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("goal", "act_ptr", "cost", "tr_ptr", "succ", "prob")))

    def __repr__(self) -> str:
        return (f"Mdp(num_states={self.num_states}, num_actions={self.num_actions}, "
                f"goals={int(self.goal.sum())}, initial={self.initial})")


@njit
def _first_duplicate_successor(tr_ptr, succ):
    for a in range(tr_ptr.shape[0] - 1):
        for i in range(tr_ptr[a], tr_ptr[a + 1]):
            for j in range(i + 1, tr_ptr[a + 1]):
                if succ[i] == succ[j]:
                    return a
    return -1


def no_elimination(mdp: Mdp) -> np.ndarray:
    return np.zeros(mdp.num_actions, dtype=np.bool_)


def goal_pinned_zeros(mdp: Mdp) -> np.ndarray:
    return np.zeros(mdp.num_states, dtype=np.float64)


# -- public operations ----------------------------------------------------

def q_value(mdp: Mdp, V: np.ndarray, s: int, slot: int) -> float:
    """C(s,a) + sum_s' T_a(s'|s) V(s') for action ``slot`` of ``s``."""
    a = mdp.action_id(s, slot)
    return float(K.q_of(a, V, mdp.cost, mdp.tr_ptr, mdp.succ, mdp.prob))


def bellman_backup(mdp: Mdp, V: np.ndarray, s: int) -> float:
    """Replace V[s] by its one-step lookahead minimum; return the residual."""
    if mdp.goal[s]:
        raise ValueError(f"state {s} is a goal")
    return float(K.backup(s, V, *mdp.arrays(), no_elimination(mdp)))


def greedy_action(mdp: Mdp, V: np.ndarray, s: int, elim: np.ndarray | None = None) -> int:
    """Slot of the argmin-Q action of ``s`` (lowest slot on ties)."""
    if mdp.goal[s]:
        raise ValueError(f"state {s} is a goal")
    if elim is None:
        elim = no_elimination(mdp)
    a, _ = K.greedy_of(s, V, *mdp.arrays(), elim)
    return int(a - mdp.act_ptr[s])


@njit
def _greedy_closure(s0, V, goal, act_ptr, cost, tr_ptr, succ, prob, elim, policy):
    """DFS over the greedy graph from s0; fills ``policy`` with slots.

    Returns the first reached non-goal state with infinite value, or -1.
    """
    n = goal.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[top] = s0
    top += 1
    seen[s0] = True
    while top > 0:
        top -= 1
        s = stack[top]
        if goal[s]:
            continue
        if not V[s] < np.inf:
            return s
        a, _ = K.greedy_of(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
        policy[s] = a - act_ptr[s]
        for k in range(tr_ptr[a], tr_ptr[a + 1]):
            t = succ[k]
            if not seen[t]:
                seen[t] = True
                stack[top] = t
                top += 1
    return -1


def extract_policy(mdp: Mdp, V: np.ndarray, elim: np.ndarray | None = None) -> np.ndarray:
    """Greedy slot for each non-goal state reachable from the initial state
    under its own greedy choices; -1 elsewhere.

    Raises DivergentValue if such a state has an infinite value.
    """
    policy = np.full(mdp.num_states, -1, dtype=np.int64)
    if elim is None:
        elim = no_elimination(mdp)
    bad = _greedy_closure(mdp.initial, V, mdp.goal, *mdp.arrays(), elim, policy)
    if bad >= 0:
        raise DivergentValue(f"state {bad} is reachable but has infinite value", state=int(bad))
    return policy


@njit
def _bellman_error(subset, V, goal, act_ptr, cost, tr_ptr, succ, prob, elim):
    err = 0.0
    for i in range(subset.shape[0]):
        s = subset[i]
        if goal[s]:
            continue
        _, q = K.greedy_of(s, V, act_ptr, cost, tr_ptr, succ, prob, elim)
        r = K.residual(V[s], q)
        if r > err:
            err = r
    return err


def bellman_error(mdp: Mdp, V: np.ndarray, subset: Iterable[int] | np.ndarray | None = None) -> float:
    """Largest residual a backup would produce over ``subset`` (default all
    states). V is not modified."""
    if subset is None:
        idx = np.arange(mdp.num_states, dtype=np.int64)
    else:
        idx = np.fromiter(subset, dtype=np.int64) if not isinstance(subset, np.ndarray) \
            else subset.astype(np.int64)
    return float(_bellman_error(idx, V, mdp.goal, *mdp.arrays(), no_elimination(mdp)))


def evaluate_policy(mdp: Mdp, policy: np.ndarray) -> np.ndarray:
    """Exact value of a (partial) policy by a sparse linear solve.

    Only states with a defined choice are solved; their successors must be
    goals or also defined. Other entries are NaN, goals are 0.
    """
    n = mdp.num_states
    defined = np.flatnonzero(policy >= 0)
    V = np.full(n, np.nan)
    V[mdp.goal] = 0.0
    if defined.size == 0:
        return V
    pos = np.full(n, -1, dtype=np.int64)
    pos[defined] = np.arange(defined.size)
    rows, cols, vals = [], [], []
    c = np.empty(defined.size)
    for i, s in enumerate(defined):
        a = mdp.act_ptr[s] + policy[s]
        c[i] = mdp.cost[a]
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        for k in range(mdp.tr_ptr[a], mdp.tr_ptr[a + 1]):
            t = mdp.succ[k]
            if mdp.goal[t]:
                continue
            if pos[t] < 0:
                raise ValueError(f"policy leaves its domain at state {t}")
            rows.append(i)
            cols.append(pos[t])
            vals.append(-mdp.prob[k])
    A = sp.csc_matrix((vals, (rows, cols)), shape=(defined.size, defined.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        x = spla.spsolve(A, c)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DivergentValue("policy is improper")
    V[defined] = x
    return V


__all__ = [
    "Action", "Mdp", "q_value", "bellman_backup", "greedy_action", "extract_policy",
    "bellman_error", "evaluate_policy",
]

"""Seeded problem generators: layered random MDPs, goal-count random MDPs,
a slippery grid, and heuristic scaling.

All randomness comes from the SplitMix64 stream in :mod:`ssp_topo.rng`, so
instances are reproducible bit for bit from their parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import InvalidSpec, Unsatisfiable
from .mdp import Mdp
from .rng import make_state, rand_below, rand_unit


@dataclass(frozen=True)
class LayeredSpec:
    num_states: int
    n_l: int
    n_a: int = 10
    n_s: int = 10
    seed: int = 0

    def check(self) -> None:
        if self.num_states < 1 or self.n_l < 1 or self.n_a < 1 or self.n_s < 1:
            raise InvalidSpec("num_states, n_l, n_a and n_s must all be >= 1")
        if self.n_l > self.num_states:
            raise InvalidSpec("more layers than states")


@dataclass(frozen=True)
class GoalCountSpec:
    num_states: int
    num_goals: int = 1
    goal_depth: int = 6
    seed: int = 0

    def check(self) -> None:
        if self.num_states < 2:
            raise InvalidSpec("need at least two states")
        if self.num_goals < 1:
            raise InvalidSpec("num_goals must be >= 1")
        if self.num_goals >= self.num_states:
            raise InvalidSpec("num_goals must leave room for a non-goal initial state")
        if self.goal_depth < 1:
            raise InvalidSpec("goal_depth must be >= 1")


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    p_sticky: float = 0.5
    seed: int = 0

    def check(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidSpec("grid dimensions must be >= 1")
        if not 0.0 <= self.p_sticky <= 1.0:
            raise InvalidSpec("p_sticky must lie in [0, 1]")


# -- shared kernels ---------------------------------------------------------

@njit
def _draw_cost(rng):
    return 1.0 + rand_below(rng, 9001) / 1000.0


@njit
def _simplex(rng, k, out):
    """Uniform point of the (k-1)-simplex via gaps of sorted uniforms."""
    while True:
        cuts = np.empty(k + 1)
        cuts[0] = 0.0
        cuts[k] = 1.0
        for i in range(1, k):
            cuts[i] = rand_unit(rng)
        # insertion sort: k is small
        for i in range(2, k):
            v = cuts[i]
            j = i - 1
            while j >= 1 and cuts[j] > v:
                cuts[j + 1] = cuts[j]
                j -= 1
            cuts[j + 1] = v
        ok = True
        for i in range(k):
            out[i] = cuts[i + 1] - cuts[i]
            if out[i] <= 0.0:
                ok = False
        if ok:
            return


@njit
def _reverse_states(n, act_ptr, tr_ptr, succ):
    """Predecessor lists (with repeats) of the state graph."""
    rptr = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                rptr[succ[k] + 1] += 1
    for v in range(n):
        rptr[v + 1] += rptr[v]
    fill = rptr[:-1].copy()
    rind = np.empty(rptr[n], dtype=np.int64)
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                t = succ[k]
                rind[fill[t]] = s
                fill[t] += 1
    return rptr, rind


@njit
def _mark_reaching(start, reaching, rptr, rind, stack):
    """Flood ``reaching`` backwards from ``start`` over non-reaching states."""
    top = 0
    stack[0] = start
    reaching[start] = True
    top = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for i in range(rptr[v], rptr[v + 1]):
            u = rind[i]
            if not reaching[u]:
                reaching[u] = True
                stack[top] = u
                top += 1


@njit
def _plan_redirect(rng, s, target, max_succ, act_ptr, tr_ptr, red_t, red_off, pool, pool_used):
    """Send one random action of ``s`` toward ``target``.

    If the action has fewer than ``max_succ`` successors, ``target`` joins
    them and the action gets fresh simplex probabilities (kept in ``pool``
    from ``red_off[a]``); otherwise its last successor becomes ``target``
    (``red_off[a] = -1``). Returns the new ``pool_used``.
    """
    a = act_ptr[s] + rand_below(rng, act_ptr[s + 1] - act_ptr[s])
    k = tr_ptr[a + 1] - tr_ptr[a]
    red_t[a] = target
    if k < max_succ:
        red_off[a] = pool_used
        _simplex(rng, k + 1, pool[pool_used:pool_used + k + 1])
        return pool_used + k + 1
    red_off[a] = -1
    return pool_used


@njit
def _apply_redirects(tr_ptr, succ, prob, red_t, red_off, pool):
    na = tr_ptr.shape[0] - 1
    extra = 0
    for a in range(na):
        if red_t[a] >= 0 and red_off[a] >= 0:
            extra += 1
    tr2 = np.zeros(na + 1, dtype=np.int64)
    succ2 = np.empty(succ.shape[0] + extra, dtype=np.int64)
    prob2 = np.empty(succ.shape[0] + extra)
    k2 = 0
    for a in range(na):
        k0 = tr_ptr[a]
        k1 = tr_ptr[a + 1]
        for k in range(k0, k1):
            succ2[k2] = succ[k]
            prob2[k2] = prob[k]
            k2 += 1
        if red_t[a] >= 0:
            if red_off[a] >= 0:
                succ2[k2] = red_t[a]
                k2 += 1
                for j in range(k1 - k0 + 1):
                    prob2[k2 - (k1 - k0 + 1) + j] = pool[red_off[a] + j]
            else:
                succ2[k2 - 1] = red_t[a]
        tr2[a + 1] = k2
    return tr2, succ2, prob2


# -- layered ----------------------------------------------------------------

@njit
def _gen_layered(n, n_l, n_a, n_s, rng):
    size = n // n_l
    layer_start = np.empty(n_l + 1, dtype=np.int64)
    for i in range(n_l):
        layer_start[i] = i * size
    layer_start[n_l] = n
    last_lo = layer_start[n_l - 1]
    goal = last_lo + rand_below(rng, n - last_lo)

    layer_of = np.empty(n, dtype=np.int64)
    for i in range(n_l):
        for s in range(layer_start[i], layer_start[i + 1]):
            layer_of[s] = i

    n_act = (n - 1) * n_a
    act_ptr = np.zeros(n + 1, dtype=np.int64)
    cost = np.empty(n_act)
    tr_ptr = np.zeros(n_act + 1, dtype=np.int64)
    succ = np.empty(n_act * n_s, dtype=np.int64)
    prob = np.empty(n_act * n_s)
    pick = np.empty(n_s, dtype=np.int64)
    probs = np.empty(n_s)
    a_i = 0
    k_i = 0
    for s in range(n):
        if s != goal:
            lo = layer_start[layer_of[s]]
            pool = n - lo - 1
            for _ in range(n_a):
                k = 1 + rand_below(rng, n_s)
                if k > pool:
                    k = pool
                m = 0
                while m < k:
                    t = lo + rand_below(rng, pool)
                    if t >= s:
                        t += 1
                    dup = False
                    for j in range(m):
                        if pick[j] == t:
                            dup = True
                            break
                    if not dup:
                        pick[m] = t
                        m += 1
                _simplex(rng, k, probs)
                cost[a_i] = _draw_cost(rng)
                for j in range(k):
                    succ[k_i] = pick[j]
                    prob[k_i] = probs[j]
                    k_i += 1
                a_i += 1
                tr_ptr[a_i] = k_i
        act_ptr[s + 1] = a_i
    succ = succ[:k_i].copy()
    prob = prob[:k_i].copy()

    # repair: every state gets a route to the goal
    cost = cost[:a_i].copy()
    tr_ptr = tr_ptr[:a_i + 1].copy()
    rptr, rind = _reverse_states(n, act_ptr, tr_ptr, succ)
    reaching = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    _mark_reaching(goal, reaching, rptr, rind, stack)
    red_t = np.full(a_i, -1, dtype=np.int64)
    red_off = np.full(a_i, -1, dtype=np.int64)
    pool_buf = np.empty(n * (n_s + 1))
    used = 0
    repaired = 0
    for s in range(n - 1, -1, -1):
        if reaching[s]:
            continue
        lo = layer_start[layer_of[s]]
        pool = n - lo - 1
        t = goal
        for _ in range(64):
            c = lo + rand_below(rng, pool)
            if c >= s:
                c += 1
            if reaching[c]:
                t = c
                break
        used = _plan_redirect(rng, s, t, n_s, act_ptr, tr_ptr, red_t, red_off, pool_buf, used)
        repaired += 1
        _mark_reaching(s, reaching, rptr, rind, stack)
    tr_ptr, succ, prob = _apply_redirects(tr_ptr, succ, prob, red_t, red_off, pool_buf)
    return goal, act_ptr, cost, tr_ptr, succ, prob, layer_start, repaired


def layer_bounds(spec: LayeredSpec) -> np.ndarray:
    """First state id of every layer plus a trailing ``num_states``; the
    last layer absorbs the remainder of an uneven split."""
    size = spec.num_states // spec.n_l
    out = np.arange(spec.n_l + 1, dtype=np.int64) * size
    out[-1] = spec.num_states
    return out


def gen_layered(spec: LayeredSpec) -> Mdp:
    """Random layered MDP.

    States are numbered layer by layer. Each action of state ``s`` draws
    ``k ~ U{1..n_s}`` distinct successors uniformly from the states of the
    same or later layers (excluding ``s``), with probabilities uniform on the
    simplex and cost uniform on {1.000, 1.001, ..., 10.000}. One state of
    the last layer is the single goal; the initial state is state 0.

    Repair: states are visited from the highest id down; one random action
    of a state without a path to the goal is redirected to a state in its
    successor range that has one (added as a successor when the action has
    fewer than ``n_s``, else replacing its last successor).
    """
    spec.check()
    rng = make_state(spec.seed)
    goal, act_ptr, cost, tr_ptr, succ, prob, _, _ = _gen_layered(
        spec.num_states, spec.n_l, spec.n_a, spec.n_s, rng)
    initial = 0 if goal != 0 else (1 if spec.num_states > 1 else 0)
    return Mdp.from_arrays(spec.num_states, initial, np.array([goal]), act_ptr, cost, tr_ptr,
                           succ, prob)


# -- goal count -------------------------------------------------------------

@njit
def _gen_goalcount_edges(n, rng):
    n_act = 2 * n
    act_ptr = np.zeros(n + 1, dtype=np.int64)
    cost = np.empty(n_act)
    tr_ptr = np.zeros(n_act + 1, dtype=np.int64)
    succ = np.empty(2 * n_act, dtype=np.int64)
    prob = np.empty(2 * n_act)
    probs = np.empty(2)
    a_i = 0
    k_i = 0
    for s in range(n):
        for _ in range(2):
            k = 1 + rand_below(rng, 2)
            t0 = rand_below(rng, n - 1)
            if t0 >= s:
                t0 += 1
            succ[k_i] = t0
            if k == 2:
                while True:
                    t1 = rand_below(rng, n - 1)
                    if t1 >= s:
                        t1 += 1
                    if t1 != t0:
                        break
                succ[k_i + 1] = t1
            _simplex(rng, k, probs)
            for j in range(k):
                prob[k_i + j] = probs[j]
            k_i += k
            cost[a_i] = _draw_cost(rng)
            a_i += 1
            tr_ptr[a_i] = k_i
        act_ptr[s + 1] = a_i
    return act_ptr, cost, tr_ptr, succ[:k_i].copy(), prob[:k_i].copy()


@njit
def _bfs_depth(s0, act_ptr, tr_ptr, succ):
    n = act_ptr.shape[0] - 1
    depth = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    depth[s0] = 0
    queue[0] = s0
    head = 0
    tail = 1
    while head < tail:
        s = queue[head]
        head += 1
        for a in range(act_ptr[s], act_ptr[s + 1]):
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                t = succ[k]
                if depth[t] < 0:
                    depth[t] = depth[s] + 1
                    queue[tail] = t
                    tail += 1
    return depth


@njit
def _strip_and_repair(n, goal, depth, act_ptr, cost, tr_ptr, succ, prob, rng):
    # drop the actions of goal states
    keep_a = np.ones(cost.shape[0], dtype=np.bool_)
    for s in range(n):
        if goal[s]:
            for a in range(act_ptr[s], act_ptr[s + 1]):
                keep_a[a] = False
    na = 0
    nt = 0
    for a in range(cost.shape[0]):
        if keep_a[a]:
            na += 1
            nt += tr_ptr[a + 1] - tr_ptr[a]
    act2 = np.zeros(n + 1, dtype=np.int64)
    cost2 = np.empty(na)
    tr2 = np.zeros(na + 1, dtype=np.int64)
    succ2 = np.empty(nt, dtype=np.int64)
    prob2 = np.empty(nt)
    a2 = 0
    k2 = 0
    for s in range(n):
        for a in range(act_ptr[s], act_ptr[s + 1]):
            if not keep_a[a]:
                continue
            cost2[a2] = cost[a]
            for k in range(tr_ptr[a], tr_ptr[a + 1]):
                succ2[k2] = succ[k]
                prob2[k2] = prob[k]
                k2 += 1
            a2 += 1
            tr2[a2] = k2
        act2[s + 1] = a2

    rptr, rind = _reverse_states(n, act2, tr2, succ2)
    reaching = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for g in range(n):
        if goal[g] and not reaching[g]:
            _mark_reaching(g, reaching, rptr, rind, stack)
    red_t = np.full(na, -1, dtype=np.int64)
    red_off = np.full(na, -1, dtype=np.int64)
    pool_buf = np.empty(3 * n)
    used = 0
    cand = np.empty(n, dtype=np.int64)
    for s in range(n):
        if reaching[s]:
            continue
        # a target at most one level below s cannot shorten any BFS depth;
        # every level above the goals holds reaching states, so one exists
        nc = 0
        for t in range(n):
            if reaching[t] and t != s and (depth[s] < 0 or
                                           (depth[t] >= 0 and depth[t] <= depth[s] + 1)):
                cand[nc] = t
                nc += 1
        used = _plan_redirect(rng, s, cand[rand_below(rng, nc)], 2, act2, tr2, red_t, red_off,
                              pool_buf, used)
        _mark_reaching(s, reaching, rptr, rind, stack)
    tr2, succ2, prob2 = _apply_redirects(tr2, succ2, prob2, red_t, red_off, pool_buf)
    return act2, cost2, tr2, succ2, prob2


def goal_depth_buckets(depth: np.ndarray) -> dict[int, np.ndarray]:
    reached = depth[depth >= 0]
    return {int(d): np.flatnonzero(depth == d) for d in np.unique(reached)}


def gen_goalcount(spec: GoalCountSpec) -> Mdp:
    """Random MDP with two actions per state, each with one or two distinct
    random successors, and ``num_goals`` goals sharing one BFS depth from
    the initial state 0.

    Goals come from depth ``goal_depth``; if it has too few states, from the
    deepest depth that has enough. Goals are a prefix of a seeded shuffle of
    that depth, so for a fixed seed and depth larger goal sets contain the
    smaller ones. For each non-goal state that cannot reach a goal, one
    random action is redirected (new or replaced successor, at most two per
    action) to a state that can, chosen so goal depths are unchanged.
    """
    spec.check()
    n = spec.num_states
    rng = make_state(spec.seed)
    act_ptr, cost, tr_ptr, succ, prob = _gen_goalcount_edges(n, rng)
    depth = _bfs_depth(0, act_ptr, tr_ptr, succ)
    buckets = goal_depth_buckets(depth)
    d = spec.goal_depth
    if d not in buckets or buckets[d].size < spec.num_goals:
        deep = [k for k, v in buckets.items() if k >= 1 and v.size >= spec.num_goals]
        if not deep:
            raise Unsatisfiable(f"no BFS depth holds {spec.num_goals} states")
        d = max(deep)
    bucket = buckets[d].copy()
    # seeded Fisher-Yates over the bucket
    for i in range(bucket.size - 1, 0, -1):
        j = int(rand_below(rng, i + 1))
        bucket[i], bucket[j] = bucket[j], bucket[i]
    goal = np.zeros(n, dtype=np.bool_)
    goal[bucket[:spec.num_goals]] = True
    arrays = _strip_and_repair(n, goal, depth, act_ptr, cost, tr_ptr, succ, prob, rng)
    return Mdp.from_arrays(n, 0, goal, *arrays)


# -- grid -------------------------------------------------------------------

MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))  # up, down, left, right as (dx, dy)


def gen_grid(spec: GridSpec) -> Mdp:
    """Grid with start at the top-left and goal at the bottom-right cell.

    Each non-goal cell has four unit-cost moves; moves into a wall stay put.
    On a wet cell (probability ``p_sticky`` each) a move succeeds with
    probability 0.6 and otherwise slips to a uniformly chosen in-bounds
    neighbour; dry cells move deterministically.
    """
    spec.check()
    w, h = spec.width, spec.height
    n = w * h
    rng = make_state(spec.seed)
    wet = np.array([rand_unit(rng) < spec.p_sticky for _ in range(n)], dtype=bool)
    goal = n - 1

    def cell(x, y):
        return y * w + x

    def clamp_move(x, y, dx, dy):
        nx, ny = x + dx, y + dy
        if 0 <= nx < w and 0 <= ny < h:
            return cell(nx, ny)
        return cell(x, y)

    actions = []
    for s in range(n):
        if s == goal:
            actions.append([])
            continue
        x, y = s % w, s // w
        neigh = [cell(x + dx, y + dy) for dx, dy in MOVES if 0 <= x + dx < w and 0 <= y + dy < h]
        acts = []
        for dx, dy in MOVES:
            target = clamp_move(x, y, dx, dy)
            if not wet[s] or not neigh:
                acts.append((1.0, [(target, 1.0)]))
                continue
            dist: dict[int, float] = {target: 0.6}
            for t in neigh:
                dist[t] = dist.get(t, 0.0) + 0.4 / len(neigh)
            acts.append((1.0, sorted(dist.items())))
        actions.append(acts)
    return Mdp.from_lists(n, 0, [goal], actions)


def scale_heuristic(V_ref: np.ndarray, f: float, goal: np.ndarray | None = None) -> np.ndarray:
    """Pointwise ``f * V_ref`` for ``f`` in (0, 1]; goals stay at 0."""
    if not 0.0 < f <= 1.0:
        raise ValueError("f must lie in (0, 1]")
    out = f * np.asarray(V_ref, dtype=np.float64)
    if goal is not None:
        out[goal] = 0.0
    return out


__all__ = ["LayeredSpec", "GoalCountSpec", "GridSpec", "gen_layered", "gen_goalcount",
           "gen_grid", "scale_heuristic", "layer_bounds", "goal_depth_buckets"]

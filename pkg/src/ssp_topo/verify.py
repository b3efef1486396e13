"""Oracle checks for a single instance: cross-solver agreement, the bound
sandwich during FTVI, and soundness of action elimination."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import ValueBounds, h_min, upper_bound
from .errors import DivergentValue
from .ftvi import FtviConfig, ftvi
from .graph import build_graph, kosaraju_scc, reachable_mask
from .mdp import Mdp, evaluate_policy, extract_policy, greedy_action
from .solve import ALGORITHMS, RunOptions, run_algorithm
from .vi import SolverConfig, solve_vi, starting_values

ORACLE_DELTA = 1e-10


@dataclass
class Oracle:
    """Reference values: ``low`` from VI at a tight threshold (a lower
    bound when started from an admissible heuristic) and ``high`` the exact
    value of its greedy policy (an upper bound). V* lies between them."""
    low: np.ndarray
    high: np.ndarray
    policy: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return self.low

    def q(self, mdp: Mdp, a: int) -> float:
        k0, k1 = mdp.tr_ptr[a], mdp.tr_ptr[a + 1]
        return float(mdp.cost[a] + np.dot(mdp.prob[k0:k1], self.low[mdp.succ[k0:k1]]))


def oracle(mdp: Mdp, delta: float = ORACLE_DELTA, value_cap: float = 1e12) -> Oracle:
    V, _ = solve_vi(mdp, SolverConfig(delta=delta, value_cap=value_cap))
    policy = extract_policy(mdp, V)
    closed = policy >= 0
    full = np.where(closed, policy, 0)
    # evaluate on every state with a finite value, not only the reachable closure
    for s in np.flatnonzero(~closed & ~mdp.goal & (V < np.inf)):
        full[s] = greedy_action(mdp, V, int(s))
    full[mdp.goal] = -1
    full[~(V < np.inf)] = -1
    high = evaluate_policy(mdp, full)
    high = np.where(np.isnan(high), np.inf, high)
    return Oracle(V, high, policy)


@dataclass
class Violation:
    check: str
    message: str
    state: int | None = None
    action: tuple[int, int] | None = None

    def __str__(self) -> str:
        where = ""
        if self.state is not None:
            where += f" state={self.state}"
        if self.action is not None:
            where += f" action={self.action}"
        return f"{self.check}:{where} {self.message}"


@dataclass
class VerifyReport:
    v_oracle: float = float("nan")
    values: dict[str, float] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    eliminated: int = 0
    batches_checked: int = 0
    max_scc_full: int = 0
    max_scc_pruned: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = [f"oracle v_s0 = {self.v_oracle!r}"]
        out += [f"{k:6s} v_s0 = {v!r}  |diff| = {abs(v - self.v_oracle):.3g}"
                for k, v in self.values.items()]
        out.append(f"eliminated actions checked: {self.eliminated}")
        out.append(f"sandwich checked after {self.batches_checked} search batches")
        out += [f"FAIL {v}" for v in self.violations]
        out.append("PASS" if self.ok else "FAIL")
        return out


def check_sandwich(bounds: ValueBounds, orc: Oracle, tol: float = 1e-9) -> Violation | None:
    lo_bad = np.flatnonzero(bounds.lower > orc.high + tol)
    if lo_bad.size:
        s = int(lo_bad[0])
        return Violation("sandwich", f"V_l={bounds.lower[s]!r} exceeds V*<={orc.high[s]!r}", s)
    up_bad = np.flatnonzero(bounds.upper < orc.low - tol)
    if up_bad.size:
        s = int(up_bad[0])
        return Violation("sandwich", f"V_u={bounds.upper[s]!r} below V*>={orc.low[s]!r}", s)
    return None


def check_elimination(mdp: Mdp, mask: np.ndarray, orc: Oracle, tol: float = 1e-9,
                      opt_tol: float = 1e-7) -> list[Violation]:
    """No eliminated action may have Q* <= V* - tol, and every state with a
    finite value keeps an action whose Q* is within ``opt_tol`` (relative)
    of V*."""
    out: list[Violation] = []
    V = orc.low
    for a in np.flatnonzero(mask):
        s, slot = mdp.action_ref(int(a))
        if not V[s] < np.inf:
            continue
        q = orc.q(mdp, int(a))
        if q <= V[s] - tol:
            out.append(Violation("elimination", f"eliminated Q*={q!r} <= V*={V[s]!r}", s, (s, slot)))
            return out
    touched = np.unique(mdp.action_owner()[mask])
    for s in touched:
        s = int(s)
        if not V[s] < np.inf:
            continue
        qs = [orc.q(mdp, a) for a in range(mdp.act_ptr[s], mdp.act_ptr[s + 1]) if not mask[a]]
        if not qs:
            out.append(Violation("elimination", "every action eliminated", s))
            return out
        if min(qs) > V[s] + opt_tol * (1.0 + abs(V[s])):
            out.append(Violation("elimination",
                                 f"no optimal action survives (best {min(qs)!r} vs V*={V[s]!r})", s))
            return out
    return out


def verify_instance(mdp: Mdp, algorithms=ALGORITHMS, delta: float = 1e-6, tol: float = 1e-4,
                    seed: int = 0, orc: Oracle | None = None) -> VerifyReport:
    """Raises DivergentValue if the initial state has no finite value."""
    rep = VerifyReport()
    orc = orc or oracle(mdp)
    s0 = mdp.initial
    rep.v_oracle = float(orc.low[s0])
    opts = RunOptions(delta=delta, seed=seed)

    for algo in algorithms:
        if algo == "ftvi":
            continue
        V, stats = run_algorithm(mdp, algo, opts)
        rep.values[algo] = stats.v_s0
        if not abs(stats.v_s0 - rep.v_oracle) <= tol:
            rep.violations.append(Violation("agreement", f"{algo} v_s0={stats.v_s0!r} vs oracle "
                                            f"{rep.v_oracle!r}", s0))
        if algo == "vi-ae":
            mask = stats.extra.get("mask", np.zeros(mdp.num_actions, dtype=bool))
            rep.eliminated += int(mask.sum())
            rep.violations += check_elimination(mdp, mask, orc)

    if "ftvi" in algorithms:
        def on_batch(bounds, mask):
            rep.batches_checked += 1
            bad = check_sandwich(bounds, orc)
            if bad is not None and not any(x.check == "sandwich" for x in rep.violations):
                rep.violations.append(bad)

        cfg = FtviConfig(delta=delta)
        init = ValueBounds(starting_values(mdp, h_min(mdp)), upper_bound(mdp, cfg.upper_passes))
        v = check_sandwich(init, orc)
        if v is not None:
            rep.violations.append(v)
        V, _, stats = ftvi(mdp, cfg, on_batch=on_batch)
        rep.values["ftvi"] = stats.v_s0
        if not abs(stats.v_s0 - rep.v_oracle) <= tol:
            rep.violations.append(Violation("agreement", f"ftvi v_s0={stats.v_s0!r} vs oracle "
                                            f"{rep.v_oracle!r}", s0))
        v = check_sandwich(stats.extra["bounds"], orc)
        if v is not None:
            rep.violations.append(v)
        mask = stats.extra["mask"]
        rep.eliminated += int(mask.sum())
        rep.violations += check_elimination(mdp, mask, orc)
        dec = stats.extra.get("decomposition")
        if dec is not None:
            full = kosaraju_scc(build_graph(mdp, None, reachable_mask(mdp)))
            rep.max_scc_full, rep.max_scc_pruned = full.max_size, dec.max_size
            if dec.max_size > full.max_size:
                rep.violations.append(Violation("decomposition", f"max SCC after pruning "
                                                f"{dec.max_size} > {full.max_size}"))
    return rep


__all__ = ["Oracle", "oracle", "Violation", "VerifyReport", "check_sandwich",
           "check_elimination", "verify_instance", "ORACLE_DELTA", "DivergentValue"]

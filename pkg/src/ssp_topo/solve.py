"""Uniform entry point over all solvers, plus the CSV run record."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .baselines import TrialConfig, brtdp, ilao_star, lrtdp
from .bounds import ValueBounds, h_min, upper_bound
from .ftvi import FtviConfig, ftvi
from .generators import scale_heuristic
from .mdp import Mdp
from .vi import SolverConfig, SolveStats, solve_vi, starting_values, tvi

ALGORITHMS = ("vi", "vi-ae", "tvi", "ftvi", "ilao", "lrtdp", "brtdp")
DETERMINISTIC = ("vi", "vi-ae", "tvi", "ftvi", "ilao")


@dataclass
class RunOptions:
    delta: float = 1e-6
    seed: int = 0
    x: int = 100
    y: float = 3.0
    upper_passes: int = 3
    intra_component: bool = False
    reachability: bool = True
    value_cap: float = 1e12
    heuristic: str = "hmin"
    scale: float = 1.0


@dataclass
class RunRecord:
    problem: str
    algorithm: str
    seed: int
    delta: float
    wall_time_ms: float
    backups: int
    v_s0: float
    scc_count: int
    max_scc: int
    eliminated_actions: int
    converged: bool

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        d = asdict(self)
        d["wall_time_ms"] = f"{self.wall_time_ms:.3f}"
        d["v_s0"] = repr(float(self.v_s0))
        d["delta"] = repr(float(self.delta))
        d["converged"] = "true" if self.converged else "false"
        return [str(d[k]) for k in self.header()]

    @classmethod
    def from_stats(cls, problem: str, stats: SolveStats, seed: int, delta: float) -> "RunRecord":
        return cls(problem, stats.algorithm, seed, delta, stats.wall_time * 1e3, stats.backups,
                   stats.v_s0, stats.scc_count, stats.max_scc, stats.eliminated_actions,
                   stats.converged)


def load_heuristic(mdp: Mdp, spec: str) -> np.ndarray:
    """``hmin``, ``zero`` or ``file:PATH`` (whitespace-separated values,
    one per state; ``.npy`` files are loaded with numpy)."""
    if spec == "hmin":
        return h_min(mdp)
    if spec == "zero":
        return np.zeros(mdp.num_states)
    if spec.startswith("file:"):
        path = Path(spec[5:])
        h = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, dtype=np.float64, ndmin=1)
        h = np.asarray(h, dtype=np.float64).ravel()
        if h.shape != (mdp.num_states,):
            raise ValueError(f"heuristic file has {h.size} values, expected {mdp.num_states}")
        return h
    raise ValueError(f"unknown heuristic {spec!r}")


def heuristic_values(mdp: Mdp, opts: RunOptions) -> np.ndarray:
    h = load_heuristic(mdp, opts.heuristic)
    if opts.scale != 1.0:
        h = scale_heuristic(h, opts.scale, mdp.goal)
    return h


def _trial_cfg(opts: RunOptions) -> TrialConfig:
    return TrialConfig(delta=opts.delta, alpha=2 * opts.delta, rng_seed=opts.seed,
                       upper_passes=opts.upper_passes)


def _run_brtdp(mdp, h, opts):
    cfg = _trial_cfg(opts)
    Vl = starting_values(mdp, h)
    Vu = upper_bound(mdp, opts.upper_passes, finite=True)
    bounds, stats = brtdp(mdp, ValueBounds(Vl, Vu), cfg)
    return 0.5 * (bounds.lower + bounds.upper), stats


_RUNNERS: dict[str, Callable[[Mdp, np.ndarray, RunOptions], tuple[np.ndarray, SolveStats]]] = {
    "vi": lambda m, h, o: solve_vi(m, _solver_cfg(o), False, h, o.upper_passes),
    "vi-ae": lambda m, h, o: solve_vi(m, _solver_cfg(o), True, h, o.upper_passes),
    "tvi": lambda m, h, o: tvi(m, _solver_cfg(o), o.reachability, h),
    "ftvi": lambda m, h, o: _drop_policy(ftvi(m, FtviConfig(
        x=o.x, y=o.y, delta=o.delta, upper_passes=o.upper_passes,
        intra_component=o.intra_component, value_cap=o.value_cap), h)),
    "ilao": lambda m, h, o: ilao_star(m, h, _trial_cfg(o)),
    "lrtdp": lambda m, h, o: lrtdp(m, h, _trial_cfg(o)),
    "brtdp": _run_brtdp,
}


def _solver_cfg(o: RunOptions) -> SolverConfig:
    return SolverConfig(delta=o.delta, value_cap=o.value_cap)


def _drop_policy(res):
    V, _, stats = res
    return V, stats


def run_algorithm(mdp: Mdp, algo: str, opts: RunOptions | None = None,
                  heuristic: np.ndarray | None = None) -> tuple[np.ndarray, SolveStats]:
    """Run ``algo`` on ``mdp``. ``heuristic`` overrides ``opts.heuristic``
    (``opts.scale`` is applied either way)."""
    opts = opts or RunOptions()
    if algo not in _RUNNERS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    if heuristic is None:
        h = heuristic_values(mdp, opts)
    else:
        h = np.asarray(heuristic, dtype=np.float64)
        if opts.scale != 1.0:
            h = scale_heuristic(h, opts.scale, mdp.goal)
    V, stats = _RUNNERS[algo](mdp, h, opts)
    stats.algorithm = algo
    return V, stats


__all__ = ["ALGORITHMS", "DETERMINISTIC", "RunOptions", "RunRecord", "load_heuristic",
           "heuristic_values", "run_algorithm"]

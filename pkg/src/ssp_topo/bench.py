"""Benchmark harness: manifest of problems x algorithms x seeds -> CSV.

Manifest (JSON)::

    {
      "delta": 1e-6,                          # optional
      "algorithms": ["vi", "tvi", "ftvi"],
      "seeds": [0, 1, 2],
      "options": {"x": 100, "y": 3.0},        # optional RunOptions overrides
      "problems": [
        {"id": "layered-nl10", "generator": "layered",
         "params": {"num_states": 5000, "n_l": 10}},
        {"id": "grid", "generator": "grid", "params": {"width": 30, "height": 30},
         "variants": [{"label": "f=0.5", "heuristic": "oracle", "scale": 0.5}]},
        {"id": "two-cycle", "file": "two_cycle.mdp"}
      ]
    }

For generated problems the seed is both the instance seed and the solver
seed; for file problems only the latter. A variant's ``heuristic`` may be
``hmin``, ``zero``, ``file:PATH`` or ``oracle`` (the tight-VI value).

Every (problem, algorithm, seed) cell runs ``repeats`` times in a forked
worker; the reported row holds per-cell medians. A repeat that exceeds the
timeout kills the worker and marks the cell ``converged=false``; its
``v_s0`` median uses the finished repeats only.
"""
from __future__ import annotations

import csv
import json
import multiprocessing as mp
import os
import statistics
import sys
import time
from dataclasses import dataclass, field, fields, replace
from multiprocessing.connection import wait
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .generators import GoalCountSpec, GridSpec, LayeredSpec, gen_goalcount, gen_grid, gen_layered
from .io import read_mdp
from .mdp import Mdp
from .solve import ALGORITHMS, RunOptions, RunRecord, run_algorithm
from .verify import oracle

GENERATORS = {
    "layered": (LayeredSpec, gen_layered),
    "goalcount": (GoalCountSpec, gen_goalcount),
    "grid": (GridSpec, gen_grid),
}

SUMMARY_HEADER = ["problem", "algorithm", "seeds", "delta", "wall_time_ms", "backups", "v_s0",
                  "scc_count", "max_scc", "eliminated_actions", "converged"]


@dataclass
class Cell:
    problem: str
    algorithm: str
    seed: int
    source: dict[str, Any]
    opts: RunOptions
    heuristic: str = "hmin"


@dataclass
class Manifest:
    cells: list[Cell] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        base = RunOptions()
        known = {f.name for f in fields(RunOptions)}
        extra = d.get("options", {}) or {}
        bad = set(extra) - known
        if bad:
            raise ValueError(f"unknown options: {sorted(bad)}")
        base = replace(base, **extra)
        if "delta" in d:
            base = replace(base, delta=float(d["delta"]))
        algos = d.get("algorithms", list(ALGORITHMS))
        for a in algos:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        seeds = [int(s) for s in d.get("seeds", [0])]
        cells = []
        for p in d.get("problems", []):
            if "generator" in p and p["generator"] not in GENERATORS:
                raise ValueError(f"unknown generator {p['generator']!r}")
            if "generator" not in p and "file" not in p:
                raise ValueError("a problem needs 'generator' or 'file'")
            pid = str(p.get("id") or p.get("generator") or Path(p["file"]).stem)
            variants = p.get("variants") or [{}]
            for var in variants:
                label = var.get("label")
                name = f"{pid}[{label}]" if label else pid
                h = var.get("heuristic", base.heuristic)
                opts = replace(base, scale=float(var.get("scale", base.scale)),
                               heuristic="hmin" if h == "oracle" else h)
                for algo in algos:
                    for seed in seeds:
                        cells.append(Cell(name, algo, seed, p, replace(opts, seed=seed), h))
        return cls(cells)

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_problem(source: dict, seed: int) -> Mdp:
    if "file" in source:
        return read_mdp(source["file"])
    spec_cls, gen = GENERATORS[source["generator"]]
    return gen(spec_cls(**{**source.get("params", {}), "seed": seed}))


_ORACLE_CACHE: dict[tuple, np.ndarray] = {}


def _heuristic_for(cell: Cell, mdp: Mdp) -> np.ndarray | None:
    if cell.heuristic != "oracle":
        return None
    key = (json.dumps(cell.source, sort_keys=True), cell.seed)
    if key not in _ORACLE_CACHE:
        _ORACLE_CACHE[key] = oracle(mdp).low
    return _ORACLE_CACHE[key]


def run_cell_once(cell: Cell, mdp: Mdp | None = None):
    mdp = mdp if mdp is not None else build_problem(cell.source, cell.seed)
    _, stats = run_algorithm(mdp, cell.algorithm, cell.opts, _heuristic_for(cell, mdp))
    return RunRecord.from_stats(cell.problem, stats, cell.seed, cell.opts.delta)


def _worker(conn, cell: Cell, repeats: int) -> None:
    try:
        mdp = build_problem(cell.source, cell.seed)
        for _ in range(repeats):
            conn.send(("ok", run_cell_once(cell, mdp)))
    except Exception as exc:  # reported, not raised: one bad cell must not stop the sweep
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def median_record(cell: Cell, recs: list[RunRecord], complete: bool) -> RunRecord:
    if not recs:
        return RunRecord(cell.problem, cell.algorithm, cell.seed, cell.opts.delta, float("nan"),
                         0, float("nan"), 0, 0, 0, False)
    med = lambda xs: statistics.median(xs)  # noqa: E731
    ok = [r for r in recs if r.converged]
    return RunRecord(
        cell.problem, cell.algorithm, cell.seed, cell.opts.delta,
        med([r.wall_time_ms for r in recs]),
        int(round(med([r.backups for r in recs]))),
        med([r.v_s0 for r in ok]) if ok else float("nan"),
        int(round(med([r.scc_count for r in recs]))),
        int(round(med([r.max_scc for r in recs]))),
        int(round(med([r.eliminated_actions for r in recs]))),
        complete and len(ok) == len(recs))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SSP_TOPO_THREADS", "1")))
    except ValueError:
        return 1


def _warm_up() -> None:
    """Compile every kernel once so forked workers inherit it."""
    mdp = gen_layered(LayeredSpec(30, 3, 3, 3, seed=0))
    for algo in ALGORITHMS:
        run_algorithm(mdp, algo, RunOptions(intra_component=False))
    run_algorithm(mdp, "ftvi", RunOptions(intra_component=True))


def run_bench(manifest: Manifest, out: TextIO, repeats: int = 10, timeout: float = 300.0,
              threads: int | None = None, log: TextIO | None = sys.stderr) -> list[RunRecord]:
    """Run every cell, writing one CSV row per cell as soon as it finishes."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RunRecord.header())
    out.flush()
    if not manifest.cells:
        return []
    _warm_up()
    threads = threads or _threads()
    ctx = mp.get_context("fork")
    pending = list(enumerate(manifest.cells))
    active: dict[Any, dict] = {}
    results: dict[int, RunRecord] = {}

    def finish(conn, complete: bool) -> None:
        st = active.pop(conn)
        if st["proc"].is_alive():
            st["proc"].kill()
        st["proc"].join()
        conn.close()
        rec = median_record(st["cell"], st["recs"], complete)
        results[st["index"]] = rec
        writer.writerow(rec.row())
        out.flush()
        if log and st.get("error"):
            print(f"{st['cell'].problem}/{st['cell'].algorithm}/{st['cell'].seed}: "
                  f"{st['error']}", file=log)

    try:
        while pending or active:
            while pending and len(active) < threads:
                idx, cell = pending.pop(0)
                parent, child = ctx.Pipe(duplex=False)
                proc = ctx.Process(target=_worker, args=(child, cell, repeats), daemon=True)
                proc.start()
                child.close()
                active[parent] = dict(proc=proc, cell=cell, index=idx, recs=[],
                                      deadline=time.monotonic() + timeout)
            now = time.monotonic()
            soonest = min(st["deadline"] for st in active.values())
            ready = wait(list(active), timeout=max(0.0, soonest - now))
            for conn in ready:
                st = active[conn]
                try:
                    kind, payload = conn.recv()
                except EOFError:
                    finish(conn, len(st["recs"]) == repeats)
                    continue
                if kind == "ok":
                    st["recs"].append(payload)
                    st["deadline"] = time.monotonic() + timeout
                    if len(st["recs"]) == repeats:
                        finish(conn, True)
                else:
                    st["error"] = payload
                    finish(conn, False)
            now = time.monotonic()
            for conn in [c for c, st in active.items() if st["deadline"] <= now]:
                active[conn]["error"] = f"timed out after {timeout:g} s"
                finish(conn, False)
    finally:
        for conn, st in list(active.items()):
            st["proc"].kill()
            st["proc"].join()
            conn.close()
    return [results[i] for i in sorted(results)]


def summarize(records: list[RunRecord]) -> list[list[str]]:
    """Median over seeds per (problem, algorithm); ``v_s0`` medians skip
    unconverged rows."""
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.problem, r.algorithm), []).append(r)
    rows = []
    for (prob, algo), rs in groups.items():
        ok = [r.v_s0 for r in rs if r.converged]
        med = statistics.median
        rows.append([prob, algo, str(len(rs)), repr(float(rs[0].delta)),
                     f"{med([r.wall_time_ms for r in rs]):.3f}",
                     repr(float(med([r.backups for r in rs]))),
                     repr(float(med(ok))) if ok else "nan",
                     repr(float(med([r.scc_count for r in rs]))),
                     repr(float(med([r.max_scc for r in rs]))),
                     repr(float(med([r.eliminated_actions for r in rs]))),
                     "true" if all(r.converged for r in rs) else "false"])
    return rows


def write_summary(records: list[RunRecord], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    w.writerows(summarize(records))


__all__ = ["Manifest", "Cell", "build_problem", "run_cell_once", "run_bench", "median_record",
           "summarize", "write_summary", "SUMMARY_HEADER", "GENERATORS"]

"""Acceptance checks, one test per criterion.

Each test prints a ``[criterion N] PASS|FAIL: ...`` line (also under
captured output) and then asserts. The trend and scale checks take a few
minutes in total.
"""
import statistics
import time

import numpy as np
import pytest

from conftest import two_cycle_mdp
from ssp_topo import (ALGORITHMS, FtviConfig, GoalCountSpec, GridSpec, LayeredSpec, RunOptions,
                      build_graph, ftvi, gen_goalcount, gen_grid, gen_layered, kosaraju_scc,
                      reachable_mask, read_mdp, run_algorithm, serialize_mdp, tvi)
from ssp_topo.cli import main as cli_main
from ssp_topo.verify import check_elimination, check_sandwich, oracle, verify_instance

NOISE = 1.05          # allowed step-to-step growth in "nonincreasing" trends


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def median_backups(make, algo, seeds, heuristic=None, opts=None):
    out = []
    for seed in seeds:
        m = make(seed)
        h = heuristic(seed) if heuristic else None
        _, st = run_algorithm(m, algo, opts or RunOptions(seed=seed), heuristic=h)
        assert st.converged
        out.append(st.backups)
    return statistics.median(out)


def nonincreasing(values, noise=NOISE):
    return all(b <= a * noise for a, b in zip(values, values[1:]))


# -- 1. oracle equivalence -----------------------------------------------------

def oracle_instances():
    rng = np.random.default_rng(2024)
    for i in range(100):
        n = int(rng.integers(50, 2001))
        n_l = int(rng.choice([1, 2, 5, 10, 20, 50]))
        yield "layered", LayeredSpec(n, min(n_l, n), seed=i), gen_layered
    for i in range(100):
        n = int(rng.integers(200, 2001))
        yield "goalcount", GoalCountSpec(n, int(rng.integers(1, 11)), seed=i), gen_goalcount
    for i in range(100):
        w, h = (int(v) for v in rng.integers(2, 51, size=2))
        yield "grid", GridSpec(w, h, float(rng.choice([0.0, 0.25, 0.5, 0.75])), seed=i), gen_grid


@pytest.mark.slow
def test_c01_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    worst, where, count = 0.0, None, 0
    for fam, spec, gen in oracle_instances():
        m = gen(spec)
        v_star = oracle(m).low[m.initial]
        for algo in ALGORITHMS:
            _, st = run_algorithm(m, algo, RunOptions(seed=spec.seed))
            err = abs(st.v_s0 - v_star)
            count += 1
            if not err <= worst:
                worst, where = err, (fam, spec, algo)
    secs = time.perf_counter() - t0
    verdict(1, worst <= 1e-4 and secs < 300,
            f"{count} runs, max |V(s0)-V_oracle(s0)| = {worst:.2e} ({where[0]} {where[2]}), "
            f"{secs:.0f} s")


# -- 2. two-cycle structure ------------------------------------------------------

def test_c02_two_cycle_structure(verdict):
    m = two_cycle_mdp()
    _, st = tvi(m)
    dec = st.extra["decomposition"]
    order = [c.tolist() for c in dec.component_members]
    ok = (dec.cpntnum == 4 and order == [[5], [4], [2, 3], [0, 1]]
          and np.all(st.extra["component_backups"][1:] > 0))
    verdict(2, ok, f"components in solve order {order} (goal=5)")


# -- 3. layer lower bound ------------------------------------------------------------

def test_c03_layer_lower_bound(verdict):
    bad, count = [], 0
    for n in (50, 300, 2000):
        for n_l in (1, 2, 7, 10, 50):
            for n_a, n_s in ((1, 1), (2, 5), (10, 10)):
                for seed in range(4):
                    m = gen_layered(LayeredSpec(n, n_l, n_a, n_s, seed=seed))
                    c = kosaraju_scc(build_graph(m)).cpntnum
                    count += 1
                    if c < n_l:
                        bad.append((n, n_l, n_a, n_s, seed, c))
    verdict(3, not bad, f"{count} instances, violations: {bad[:3]}")


# -- 4. acyclic optimality -----------------------------------------------------------

def test_c04_acyclic_two_backups(verdict):
    worst, singleton = 0, True
    for seed in range(20):
        m = gen_layered(LayeredSpec(100, 100, 3, 3, seed=seed))
        _, st = tvi(m, use_reachability=False)
        singleton &= st.extra["decomposition"].max_size == 1
        worst = max(worst, st.backups)
    verdict(4, singleton and worst <= 200,
            f"20 acyclic instances, all SCCs singletons={singleton}, max backups {worst} <= 200")


# -- 5-7. elimination soundness, sandwich, dominance -------------------------------

def small_instances():
    for seed in range(12):
        yield gen_layered(LayeredSpec(300, 5, 5, 5, seed=seed))
        yield gen_goalcount(GoalCountSpec(400, 1 + seed % 5, seed=seed))
        yield gen_grid(GridSpec(12, 12, 0.5, seed=seed))
        yield gen_grid(GridSpec(20, 20, 0.75, seed=seed))


@pytest.fixture(scope="module")
def audit():
    """verify runs plus FTVI runs forced into the decomposition step, all
    checked against the oracle."""
    res = {"violations": [], "eliminated": 0, "batches": 0, "decomposed": 0, "runs": 0,
           "states_max": 0}
    for m in small_instances():
        res["states_max"] = max(res["states_max"], m.num_states)
        orc = oracle(m)
        rep = verify_instance(m, ALGORITHMS, orc=orc)
        res["violations"] += rep.violations
        res["eliminated"] += rep.eliminated
        res["batches"] += rep.batches_checked
        res["runs"] += 1
        for cfg in (FtviConfig(x=1, y=99.0), FtviConfig(x=5, y=50.0, intra_component=True)):
            def on_batch(b, mask):
                res["batches"] += 1
                v = check_sandwich(b, orc)
                if v is not None:
                    res["violations"].append(v)
            _, _, st = ftvi(m, cfg, on_batch=on_batch)
            res["runs"] += 1
            v = check_sandwich(st.extra["bounds"], orc)
            if v is not None:
                res["violations"].append(v)
            res["violations"] += check_elimination(m, st.extra["mask"], orc)
            res["eliminated"] += int(st.extra["mask"].sum())
            dec = st.extra.get("decomposition")
            if dec is not None:
                res["decomposed"] += 1
                full = kosaraju_scc(build_graph(m, None, reachable_mask(m))).max_size
                if dec.max_size > full:
                    res["violations"].append(f"decomposition {dec.max_size} > {full}")
    return res


def kinds(res, check):
    return [v for v in res["violations"] if getattr(v, "check", "decomposition") == check]


def test_c05_elimination_soundness(verdict, audit):
    bad = kinds(audit, "elimination")
    verdict(5, not bad and audit["eliminated"] > 0,
            f"{audit['eliminated']} eliminated actions over {audit['runs']} runs, "
            f"violations: {[str(v) for v in bad[:3]]}")


def test_c06_sandwich_invariant(verdict, audit):
    bad = kinds(audit, "sandwich")
    verdict(6, not bad and audit["batches"] > 0 and audit["states_max"] <= 500,
            f"{audit['batches']} batches checked (|S| <= {audit['states_max']}), "
            f"violations: {[str(v) for v in bad[:3]]}")


def test_c07_decomposition_dominance(verdict, audit):
    bad = kinds(audit, "decomposition")
    verdict(7, not bad and audit["decomposed"] > 0,
            f"{audit['decomposed']} decomposition runs, violations: {bad[:3]}")


# -- 8. layer-count trend -------------------------------------------------------------

@pytest.mark.slow
def test_c08_layer_trend(verdict):
    t0 = time.perf_counter()
    seeds = range(10)
    med = {}
    for n_l in (1, 10, 100):
        def make(seed):
            return gen_layered(LayeredSpec(5000, n_l, 10, 10, seed=seed))
        med[n_l] = {a: median_backups(make, a, seeds) for a in ("vi", "tvi")}
    secs = time.perf_counter() - t0
    t = [med[k]["tvi"] for k in (1, 10, 100)]
    ok = (t[0] > t[1] > t[2] and all(med[k]["tvi"] < med[k]["vi"] for k in (10, 100))
          and secs < 120)
    verdict(8, ok, f"median backups {med}, {secs:.0f} s")


# -- 9. heuristic-quality trend ---------------------------------------------------------

@pytest.mark.slow
def test_c09_heuristic_trend(verdict):
    fs = (0.25, 0.5, 0.75, 1.0)
    seeds = range(10)
    grids = {s: gen_grid(GridSpec(30, 30, 0.5, seed=s)) for s in seeds}
    vstar = {s: oracle(m).low for s, m in grids.items()}
    table, failing = {}, []
    for algo in ("vi", "tvi", "ilao", "lrtdp", "ftvi"):
        table[algo] = [median_backups(lambda s: grids[s], algo, seeds,
                                      heuristic=lambda s, f=f: f * vstar[s])
                       for f in fs]
        if not nonincreasing(table[algo]):
            failing.append(algo)
    verdict(9, not failing, f"median backups per f={fs}: {table}; non-monotone: {failing}")


# -- 10. goal-count trend -------------------------------------------------------------

@pytest.mark.slow
def test_c10_goal_count_trend(verdict):
    counts = (1, 5, 20, 50)
    seeds = range(10)
    table = {}
    for algo in ("ilao", "ftvi"):
        table[algo] = [median_backups(lambda s, g=g: gen_goalcount(GoalCountSpec(5000, g, seed=s)),
                                      algo, seeds) for g in counts]
    ratio = {a: v[0] / v[-1] for a, v in table.items()}
    ok = all(nonincreasing(v) for v in table.values()) and ratio["ftvi"] <= ratio["ilao"]
    verdict(10, ok, f"median backups per |G|={counts}: {table}; ratio 1/50 {ratio}")


# -- 11. determinism ------------------------------------------------------------------

def test_c11_determinism(verdict, tmp_path):
    problems = []
    for fam, argv in (("layered", ["--states", "1500", "--layers", "10"]),
                      ("goalcount", ["--states", "1500", "--goals", "5"]),
                      ("grid", ["--width", "20", "--height", "20"])):
        files = [tmp_path / f"{fam}{i}.mdp" for i in range(2)]
        for f in files:
            assert cli_main(["gen", fam, *argv, "--seed", "7", "--out", str(f)]) == 0
        problems.append((fam, files))
    diffs = []
    for fam, (a, b) in problems:
        if a.read_bytes() != b.read_bytes():
            diffs.append(f"{fam} file")
        ma, mb = read_mdp(a), read_mdp(b)
        assert serialize_mdp(ma) == a.read_text()
        for algo in ALGORITHMS:
            _, s1 = run_algorithm(ma, algo, RunOptions(seed=3))
            _, s2 = run_algorithm(mb, algo, RunOptions(seed=3))
            if (s1.backups, s1.v_s0, s1.eliminated_actions) != (s2.backups, s2.v_s0,
                                                                 s2.eliminated_actions):
                diffs.append(f"{fam} {algo}")
    verdict(11, not diffs, f"3 generators x {len(ALGORITHMS)} solvers repeated, differences: "
            f"{diffs}")


# -- 12. scale smoke test --------------------------------------------------------------

@pytest.mark.slow
def test_c12_scale(verdict):
    t0 = time.perf_counter()
    m = gen_layered(LayeredSpec(100_000, 100, seed=0))
    t_gen = time.perf_counter() - t0
    _, st = tvi(m)
    secs = time.perf_counter() - t0
    verdict(12, st.converged and secs < 120,
            f"|S|=100000 n_l=100: generated in {t_gen:.1f} s, TVI done at {secs:.1f} s "
            f"({st.backups} backups, {st.scc_count} SCCs)")

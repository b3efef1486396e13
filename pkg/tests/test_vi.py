import numpy as np
import pytest
from hypothesis import given, settings

from conftest import TWO_CYCLE_VSTAR, dead_end_mdp, small_mdps, trapped_initial_mdp
from oracles import policy_iteration
from ssp_topo import (DivergentValue, LayeredSpec, Mdp, SolverConfig, gen_layered, h_min,
                      solve_vi, tvi, value_iteration)
from ssp_topo.vi import starting_values

TIGHT = SolverConfig(delta=1e-10)


def chain(n: int, toward_low: bool) -> Mdp:
    """Deterministic unit-cost chain; goal at 0 (toward_low) or n-1."""
    if toward_low:
        acts = [[]] + [[(1.0, [(s - 1, 1.0)])] for s in range(1, n)]
        return Mdp.from_lists(n, n - 1, [0], acts)
    acts = [[(1.0, [(s + 1, 1.0)])] for s in range(n - 1)] + [[]]
    return Mdp.from_lists(n, 0, [n - 1], acts)


def looping_trap() -> Mdp:
    """s0 -> s1 <-> s2; s2's exit action also risks an absorbing trap s3,
    so no policy is proper yet every state has a deterministic path."""
    return Mdp.from_lists(5, 0, [4], [
        [(1.0, [(1, 1.0)])],
        [(1.0, [(2, 1.0)])],
        [(1.0, [(1, 1.0)]), (1.0, [(4, 0.5), (3, 0.5)])],
        [(1.0, [(3, 1.0)])],
        [],
    ])


def test_vi_two_cycle(two_cycle):
    V, stats = solve_vi(two_cycle, TIGHT)
    assert np.allclose(V, TWO_CYCLE_VSTAR, atol=1e-8)
    assert stats.converged and stats.algorithm == "vi"


def test_tvi_two_cycle_solves_components_in_order(two_cycle):
    V, stats = tvi(two_cycle, TIGHT)
    assert np.allclose(V, TWO_CYCLE_VSTAR, atol=1e-8)
    dec = stats.extra["decomposition"]
    assert [c.tolist() for c in dec.component_members] == [[5], [4], [2, 3], [0, 1]]
    cb = stats.extra["component_backups"]
    assert cb[0] == 0                       # the goal component is never backed up
    assert cb[1] == 1                       # h_min is already exact at s4
    assert stats.backups == cb.sum()
    _, zero = tvi(two_cycle, TIGHT, initial_V=np.zeros(6))
    assert zero.extra["component_backups"][1] == 2   # one real backup + one confirming
    assert stats.scc_count == 4 and stats.max_scc == 2


def test_gauss_seidel_sweeps_in_ascending_id():
    # successors numbered below their predecessors: one sweep is exact
    _, stats = solve_vi(chain(30, toward_low=True), TIGHT, initial_V=np.zeros(30))
    assert stats.sweeps == 2
    # the opposite numbering needs one sweep per chain link
    _, stats = solve_vi(chain(30, toward_low=False), TIGHT, initial_V=np.zeros(30))
    assert stats.sweeps == 30


def test_vi_ae_matches_vi_and_eliminates():
    m = gen_layered(LayeredSpec(300, 10, 4, 4, seed=5))
    V1, s1 = solve_vi(m, TIGHT)
    V2, s2 = solve_vi(m, TIGHT, eliminate=True)
    assert abs(V1[m.initial] - V2[m.initial]) < 1e-7
    assert s2.algorithm == "vi-ae"
    assert s2.eliminated_actions == int(s2.extra["mask"].sum()) > 0


def test_acyclic_tvi_needs_two_backups_per_state():
    # one state per layer: every edge goes to a higher id, so the graph is a DAG
    for seed in range(5):
        m = gen_layered(LayeredSpec(60, 60, 3, 3, seed=seed))
        V, stats = tvi(m, use_reachability=False)
        dec = stats.extra["decomposition"]
        assert dec.max_size == 1
        assert stats.backups <= 2 * m.num_states


def test_no_reachability_decomposes_everything():
    m = gen_layered(LayeredSpec(200, 10, 2, 2, seed=3))
    _, a = tvi(m)
    _, b = tvi(m, use_reachability=False)
    assert b.extra["decomposition"].id.min() >= 1
    assert a.scc_count <= b.scc_count
    assert a.v_s0 == pytest.approx(b.v_s0, abs=1e-6)


def test_dead_ends_are_infinite_but_initial_finite():
    V, stats = tvi(dead_end_mdp())
    assert V[0] == 1.0 and np.isinf(V[1]) and np.isinf(V[2])
    V, stats = solve_vi(dead_end_mdp())
    assert V[0] == 1.0


@pytest.mark.parametrize("solver", [solve_vi, tvi])
def test_trapped_initial_state_diverges(solver):
    with pytest.raises(DivergentValue) as err:
        solver(trapped_initial_mdp())
    assert err.value.state == 0


def test_value_cap_stops_linear_growth_without_detection():
    m = looping_trap()
    cfg = SolverConfig(delta=1e-6, value_cap=1e3, detect_dead_ends=False)
    with pytest.raises(DivergentValue):
        solve_vi(m, cfg)
    with pytest.raises(DivergentValue):
        tvi(m, cfg)
    # with detection the trap is known up front
    with pytest.raises(DivergentValue):
        starting_values(m)


def test_value_iteration_subset_and_sweep_limit(two_cycle):
    V = starting_values(two_cycle)
    stats = value_iteration(two_cycle, V, subset=[4], cfg=TIGHT)
    assert V[4] == 1.0 and stats.backups == 1 * stats.sweeps
    stats = value_iteration(two_cycle, V, cfg=SolverConfig(delta=1e-12, max_sweeps=2))
    assert not stats.converged and stats.sweeps == 2


def test_elimination_requires_bounds(two_cycle):
    with pytest.raises(ValueError):
        value_iteration(two_cycle, starting_values(two_cycle), eliminate=True)


def test_starting_values_shape_check(two_cycle):
    with pytest.raises(ValueError):
        starting_values(two_cycle, np.zeros(3))


@settings(max_examples=80, deadline=None)
@given(small_mdps(max_states=8, proper=True))
def test_vi_family_matches_policy_iteration(mdp):
    V_star = policy_iteration(mdp)
    for V, _ in (solve_vi(mdp, TIGHT), solve_vi(mdp, TIGHT, eliminate=True), tvi(mdp, TIGHT)):
        assert abs(V[mdp.initial] - V_star[mdp.initial]) < 1e-7


@settings(max_examples=80, deadline=None)
@given(small_mdps(max_states=8))
def test_vi_handles_dead_ends(mdp):
    V_star = policy_iteration(mdp)
    if not np.isfinite(V_star[mdp.initial]):
        with pytest.raises(DivergentValue):
            tvi(mdp, TIGHT)
        return
    V, _ = tvi(mdp, TIGHT)
    assert abs(V[mdp.initial] - V_star[mdp.initial]) < 1e-7
    assert np.all(h_min(mdp) <= V_star + 1e-9)

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import TWO_CYCLE_VSTAR, small_mdps, trapped_initial_mdp
from oracles import policy_iteration
from ssp_topo import (DivergentValue, GridSpec, TrialConfig, ValueBounds, brtdp, gen_grid, h_min,
                      ilao_star, lrtdp, upper_bound)

TIGHT = TrialConfig(delta=1e-10, alpha=1e-9)


@pytest.mark.parametrize("solver", [ilao_star, lrtdp])
def test_two_cycle_lower_bound_solvers(two_cycle, solver):
    V, stats = solver(two_cycle, cfg=TIGHT)
    assert V[0] == pytest.approx(9.0, abs=1e-7)
    assert stats.converged


def test_brtdp_two_cycle(two_cycle):
    b, stats = brtdp(two_cycle, cfg=TIGHT)
    assert stats.converged
    assert b.lower[0] <= 9.0 + 1e-9 <= b.upper[0] + 2e-9
    assert stats.v_s0 == pytest.approx(9.0, abs=1e-8)


@pytest.mark.parametrize("solver", [ilao_star, lrtdp])
def test_trapped_initial(solver):
    with pytest.raises(DivergentValue):
        solver(trapped_initial_mdp())


def test_lrtdp_seed_determinism():
    m = gen_grid(GridSpec(10, 10, 0.5, seed=1))
    runs = [lrtdp(m, cfg=TrialConfig(rng_seed=s))[1] for s in (3, 3, 4)]
    assert runs[0].backups == runs[1].backups and runs[0].v_s0 == runs[1].v_s0
    assert (runs[0].backups, runs[0].sweeps) != (runs[2].backups, runs[2].sweeps)


def test_lrtdp_solved_labels_are_converged():
    m = gen_grid(GridSpec(8, 8, 0.5, seed=2))
    V_star = policy_iteration(m)
    V, stats = lrtdp(m, cfg=TrialConfig(delta=1e-8))
    solved = stats.extra["solved"]
    sv = stats.extra["solved_value"]
    assert solved[m.initial]
    # once labelled, a state is never backed up again
    assert np.array_equal(sv[solved], V[solved])
    assert np.all(np.isnan(sv[~solved]))
    assert np.all(np.abs(V[solved] - V_star[solved]) < 1e-4)


def test_brtdp_seed_determinism_and_sandwich():
    m = gen_grid(GridSpec(10, 10, 0.5, seed=3))
    V_star = policy_iteration(m)
    out = []
    for _ in range(2):
        b, stats = brtdp(m, cfg=TrialConfig(rng_seed=7))
        out.append(stats.backups)
        assert np.all(b.lower <= V_star + 1e-9)
        assert np.all(b.upper >= V_star - 1e-9)
        assert b.upper[m.initial] - b.lower[m.initial] < TrialConfig().alpha
    assert out[0] == out[1]


def test_brtdp_accepts_explicit_bounds(two_cycle):
    b = ValueBounds(h_min(two_cycle), upper_bound(two_cycle, finite=True))
    b2, _ = brtdp(two_cycle, b, TIGHT)
    assert b2 is b


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(alpha=0)
    with pytest.raises(ValueError):
        TrialConfig(delta=-1)


@settings(max_examples=60, deadline=None)
@given(small_mdps(max_states=8))
def test_baselines_match_policy_iteration(mdp):
    V_star = policy_iteration(mdp)
    if not np.isfinite(V_star[mdp.initial]):
        return
    v = V_star[mdp.initial]
    V, _ = ilao_star(mdp, cfg=TIGHT)
    assert abs(V[mdp.initial] - v) < 1e-7
    V, _ = lrtdp(mdp, cfg=TIGHT)
    assert abs(V[mdp.initial] - v) < 1e-7
    b, stats = brtdp(mdp, cfg=TIGHT)
    assert abs(stats.v_s0 - v) < 1e-7
    assert np.all(b.lower <= V_star + 1e-9) and np.all(b.upper >= V_star - 1e-9)

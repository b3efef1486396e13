import networkx as nx
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dead_end_mdp, small_mdps, trapped_initial_mdp
from oracles import bfs_reachable, can_reach_goal_surely, nx_graph
from ssp_topo import (Mdp, build_graph, dead_end_mask, kosaraju_scc, reachable_mask,
                      reachable_states)


def test_two_cycle_components_in_topological_order(two_cycle):
    dec = kosaraju_scc(build_graph(two_cycle))
    assert dec.cpntnum == 4
    assert [c.tolist() for c in dec.component_members] == [[5], [4], [2, 3], [0, 1]]
    assert dec.max_size == 2
    assert list(dec.sizes) == [1, 1, 2, 2]


def test_two_cycle_edges(two_cycle):
    g = build_graph(two_cycle)
    assert g.edges() == {(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (3, 4), (4, 5)}


def test_self_loops_and_duplicates_dropped():
    m = Mdp.from_lists(3, 0, [2], [
        [(1.0, [(0, 0.5), (1, 0.5)]), (1.0, [(1, 1.0)])],
        [(1.0, [(1, 0.3), (2, 0.7)])],
        [],
    ])
    g = build_graph(m)
    assert g.edges() == {(0, 1), (1, 2)}
    assert g.num_edges == 2


def test_action_filter_forms_agree():
    m = dead_end_mdp()
    keep = np.ones(m.num_actions, dtype=bool)
    keep[m.action_id(0, 1)] = False
    a = build_graph(m, keep)
    b = build_graph(m, lambda s, slot: not (s == 0 and slot == 1))
    assert a.edges() == b.edges() == {(0, 3), (1, 2), (2, 1)}


def test_restricted_graph_leaves_outsiders_unnumbered():
    m = dead_end_mdp()
    keep = np.ones(m.num_actions, dtype=bool)
    keep[m.action_id(0, 1)] = False
    restrict = reachable_mask(m, action_filter=keep)
    assert reachable_states(m, action_filter=keep) == {0, 3}
    dec = kosaraju_scc(build_graph(m, keep, restrict))
    assert dec.cpntnum == 2
    assert dec.id[1] == dec.id[2] == 0
    assert [c.tolist() for c in dec.component_members] == [[3], [0]]


def test_restrict_accepts_id_list(two_cycle):
    g = build_graph(two_cycle, None, [2, 3, 4])
    assert g.edges() == {(2, 3), (3, 2), (3, 4)}


def test_dead_ends_detected():
    assert dead_end_mask(dead_end_mdp()).tolist() == [False, True, True, False]
    assert dead_end_mask(trapped_initial_mdp()).tolist() == [True, True, False]


@settings(max_examples=150, deadline=None)
@given(small_mdps(max_states=10))
def test_scc_partition_matches_networkx(mdp):
    dec = kosaraju_scc(build_graph(mdp))
    expected = {frozenset(c) for c in nx.strongly_connected_components(nx_graph(mdp))}
    got = {frozenset(c.tolist()) for c in dec.component_members}
    assert got == expected
    # members are listed once each, ascending within components
    assert sorted(dec.members.tolist()) == list(range(mdp.num_states))
    for c in dec.component_members:
        assert list(c) == sorted(c)


@settings(max_examples=150, deadline=None)
@given(small_mdps(max_states=10))
def test_successor_components_have_smaller_ids(mdp):
    g = build_graph(mdp)
    dec = kosaraju_scc(g)
    for u, v in g.edges():
        assert dec.id[v] <= dec.id[u]
        if dec.id[u] != dec.id[v]:
            assert dec.id[v] < dec.id[u]


@settings(max_examples=100, deadline=None)
@given(small_mdps(max_states=10))
def test_edges_match_networkx(mdp):
    assert build_graph(mdp).edges() == set(nx_graph(mdp).edges())


@settings(max_examples=100, deadline=None)
@given(small_mdps(max_states=10), st.data())
def test_reachability_matches_bfs(mdp, data):
    src = data.draw(st.integers(0, mdp.num_states - 1))
    assert reachable_states(mdp, src) == bfs_reachable(mdp, src)


@settings(max_examples=100, deadline=None)
@given(small_mdps(max_states=8))
def test_dead_end_mask_matches_fixpoint(mdp):
    good = can_reach_goal_surely(mdp)
    assert set(np.flatnonzero(~dead_end_mask(mdp)).tolist()) == good

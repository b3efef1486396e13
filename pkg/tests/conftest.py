import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from ssp_topo import Mdp  # noqa: E402

S = {f"s{i}": i for i in range(5)}
G = 5


def two_cycle_mdp() -> Mdp:
    """Two-cycle chain: {s0,s1} -> {s2,s3} -> s4 -> g, unit costs.

    V* = (9, 8, 5, 4, 1, 0).
    """
    return Mdp.from_lists(6, 0, [G], [
        [(1.0, [(1, 1.0)])],
        [(1.0, [(0, 0.5), (2, 0.5)])],
        [(1.0, [(3, 1.0)])],
        [(1.0, [(2, 0.5), (4, 0.5)])],
        [(1.0, [(G, 1.0)])],
        [],
    ])


TWO_CYCLE_VSTAR = np.array([9.0, 8.0, 5.0, 4.0, 1.0, 0.0])


@pytest.fixture
def two_cycle():
    return two_cycle_mdp()


def chain_with_choice() -> Mdp:
    """s0 has a cheap risky action and an expensive safe one; ties broken
    toward the lower slot where equal."""
    return Mdp.from_lists(3, 0, [2], [
        [(1.0, [(1, 0.5), (2, 0.5)]), (10.0, [(2, 1.0)])],
        [(1.0, [(2, 1.0)]), (1.0, [(2, 1.0)])],
        [],
    ])


def dead_end_mdp() -> Mdp:
    """s0 can go to the goal or to an absorbing loop s1<->s2."""
    return Mdp.from_lists(4, 0, [3], [
        [(1.0, [(3, 1.0)]), (0.5, [(1, 1.0)])],
        [(1.0, [(2, 1.0)])],
        [(1.0, [(1, 1.0)])],
        [],
    ])


def trapped_initial_mdp() -> Mdp:
    """The initial state can never reach the goal."""
    return Mdp.from_lists(3, 0, [2], [
        [(1.0, [(1, 1.0)])],
        [(1.0, [(0, 1.0)])],
        [],
    ])


@st.composite
def small_mdps(draw, max_states=8, max_actions=3, max_succ=3, proper=False):
    """Random MDPs with 2..max_states states. With ``proper`` every action
    has an escape to a higher-numbered state so all states reach the goal."""
    n = draw(st.integers(2, max_states))
    n_goals = draw(st.integers(1, max(1, n // 3)))
    goals = list(range(n - n_goals, n))
    actions = []
    for s in range(n):
        if s in goals:
            actions.append([])
            continue
        acts = []
        for _ in range(draw(st.integers(1, max_actions))):
            k = draw(st.integers(1, min(max_succ, n)))
            succ = draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))
            if proper and not any(t > s for t in succ):
                succ[-1] = draw(st.integers(s + 1, n - 1))
                succ = list(dict.fromkeys(succ))
            w = [draw(st.integers(1, 20)) for _ in succ]
            tot = float(sum(w))
            probs = [x / tot for x in w]
            probs[-1] = 1.0 - sum(probs[:-1])
            cost = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0, 7.25]))
            acts.append((cost, list(zip(succ, probs))))
        actions.append(acts)
    initial = draw(st.integers(0, n - n_goals - 1))
    return Mdp.from_lists(n, initial, goals, actions)

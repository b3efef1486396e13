import numpy as np
import pytest
from hypothesis import given, settings

from conftest import small_mdps
from ssp_topo import (LayeredSpec, ParseError, ValidationError, gen_layered, parse_mdp, read_mdp,
                      serialize_mdp, tvi, write_mdp)


def same_model(a, b):
    assert a.num_states == b.num_states and a.initial == b.initial
    assert np.array_equal(a.goal, b.goal)
    for x, y in zip(a.arrays(), b.arrays()):
        assert np.array_equal(x, y)


@settings(max_examples=100, deadline=None)
@given(small_mdps(max_states=10))
def test_round_trip_is_exact(mdp):
    text = serialize_mdp(mdp)
    back = parse_mdp(text)
    same_model(mdp, back)
    assert serialize_mdp(back) == text


def test_file_round_trip_keeps_backup_counts(tmp_path):
    m = gen_layered(LayeredSpec(2000, 10, seed=4))
    path = tmp_path / "m.mdp"
    write_mdp(m, path)
    m2 = read_mdp(path)
    same_model(m, m2)
    _, s1 = tvi(m)
    _, s2 = tvi(m2)
    assert s1.backups == s2.backups and s1.v_s0 == s2.v_s0


def test_minimal_file():
    m = parse_mdp("mdp 1\ninitial 0\ngoals 0\n")
    assert m.num_states == 1 and m.goal[0] and m.num_actions == 0


def test_comments_and_blank_lines():
    text = """# two states
    mdp 2

    initial 0   # start
    goals 1
    state 0 1
    action 2.5 1
    1 1.0
    """
    m = parse_mdp(text)
    assert m.cost.tolist() == [2.5] and m.succ.tolist() == [1]


def test_probabilities_must_sum_to_one():
    bad = "mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1 2\n1 0.5\n0 0.4\n"
    with pytest.raises(ValidationError):
        parse_mdp(bad)
    ok = "mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1 2\n1 0.5\n0 0.5000000001\n"
    parse_mdp(ok)


@pytest.mark.parametrize("text, line", [
    ("mdp x\n", 1),
    ("mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1\n", 5),
    ("mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1 1\n", 5),
    ("mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1 1\n1 abc\n", 6),
    ("mdp 2\ninitial 0\nbogus 1\n", 3),
    ("mdp 2\ninitial 0\ngoals 1\nstate 0 0\nstate 0 0\n", 5),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        parse_mdp(text)
    assert err.value.lineno == line


@pytest.mark.parametrize("text", [
    "mdp 2\ninitial 5\ngoals 1\n",
    "mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction 1 1\n7 1.0\n",
    "mdp 2\ninitial 0\ngoals 1\nstate 1 1\naction 1 1\n0 1.0\n",
    "mdp 2\ninitial 0\ngoals 1\nstate 0 1\naction -1 1\n1 1.0\n",
])
def test_invalid_models_rejected(text):
    with pytest.raises((ValidationError, ParseError)):
        parse_mdp(text)

"""Line-oriented text format for MDPs.

::

    mdp <num_states>
    initial <s0>
    goals <g1> <g2> ...
    state <id> <num_actions>
    action <cost> <k>
    <succ_id> <prob>        # k lines
    ...

``#`` starts a comment; blank lines are ignored. Floats are written with
``repr`` (shortest round-trip form, at most 17 significant digits), so
``parse_mdp(serialize_mdp(m))`` reproduces ``m`` bit for bit. States without
a ``state`` line have no actions.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .mdp import Mdp

#: probability-sum tolerance applied to parsed files
FILE_PROB_TOL = 1e-6


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_mdp(mdp: Mdp) -> str:
    out = [f"mdp {mdp.num_states}", f"initial {mdp.initial}",
           "goals " + " ".join(str(g) for g in np.flatnonzero(mdp.goal))]
    act_ptr, cost, tr_ptr, succ, prob = mdp.arrays()
    for s in range(mdp.num_states):
        a0, a1 = int(act_ptr[s]), int(act_ptr[s + 1])
        out.append(f"state {s} {a1 - a0}")
        for a in range(a0, a1):
            k0, k1 = int(tr_ptr[a]), int(tr_ptr[a + 1])
            out.append(f"action {_fmt(cost[a])} {k1 - k0}")
            out.extend(f"{int(succ[k])} {_fmt(prob[k])}" for k in range(k0, k1))
    return "\n".join(out) + "\n"


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield no, body


def _int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", no) from None


def _float(tok: str, no: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected number {what}, got {tok!r}", no) from None


def _expect(body: list[str], no: int, key: str, nargs: int | None) -> list[str]:
    if body[0] != key:
        raise ParseError(f"expected '{key}', got {body[0]!r}", no)
    if nargs is not None and len(body) != nargs + 1:
        raise ParseError(f"'{key}' takes {nargs} field(s), got {len(body) - 1}", no)
    return body[1:]


def parse_mdp(text: str, prob_tol: float = FILE_PROB_TOL) -> Mdp:
    """Parse the flat format. Raises ParseError (with line number) on
    syntax problems and ValidationError on model violations."""
    it = _lines(text)
    last = [0]

    def nxt(what: str):
        try:
            item = next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of input, expected {what}",
                             last[0] or None) from None
        last[0] = item[0]
        return item

    no, body = nxt("'mdp'")
    n = _int(_expect(body, no, "mdp", 1)[0], no, "state count")
    if n < 1:
        raise ParseError("state count must be positive", no)
    no, body = nxt("'initial'")
    s0 = _int(_expect(body, no, "initial", 1)[0], no, "initial state")
    if not 0 <= s0 < n:
        raise ValidationError(f"initial state {s0} out of range")
    no, body = nxt("'goals'")
    goal = np.zeros(n, dtype=bool)
    for tok in _expect(body, no, "goals", None):
        g = _int(tok, no, "goal id")
        if not 0 <= g < n:
            raise ValidationError(f"goal id {g} out of range")
        goal[g] = True

    per_state: list[list[tuple[float, list[tuple[int, float]]]] | None] = [None] * n
    for no, body in it:
        sid, k = (_int(t, no, "state field") for t in _expect(body, no, "state", 2))
        if not 0 <= sid < n:
            raise ValidationError(f"state id {sid} out of range")
        if per_state[sid] is not None:
            raise ParseError(f"state {sid} listed twice", no)
        if k < 0:
            raise ParseError("negative action count", no)
        if k and goal[sid]:
            raise ValidationError(f"goal state {sid} has actions")
        acts = []
        for _ in range(k):
            no, body = nxt("'action'")
            c_tok, m_tok = _expect(body, no, "action", 2)
            c = _float(c_tok, no, "cost")
            m = _int(m_tok, no, "successor count")
            if m < 1:
                raise ParseError("an action needs at least one successor", no)
            trans = []
            for _ in range(m):
                no, body = nxt("successor line")
                if len(body) != 2:
                    raise ParseError("successor line takes '<succ_id> <prob>'", no)
                t = _int(body[0], no, "successor id")
                if not 0 <= t < n:
                    raise ValidationError(f"successor id {t} out of range")
                trans.append((t, _float(body[1], no, "probability")))
            acts.append((c, trans))
        per_state[sid] = acts
    return Mdp.from_lists(n, s0, np.flatnonzero(goal).tolist(),
                          [a if a is not None else [] for a in per_state], prob_tol=prob_tol)


def read_mdp(path: str | Path) -> Mdp:
    return parse_mdp(Path(path).read_text())


def write_mdp(mdp: Mdp, path: str | Path) -> None:
    Path(path).write_text(serialize_mdp(mdp))


__all__ = ["serialize_mdp", "parse_mdp", "read_mdp", "write_mdp", "FILE_PROB_TOL"]

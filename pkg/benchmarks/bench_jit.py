"""Compare the numba kernels with the plain-Python fallback.

Each configuration runs in a fresh interpreter (the switch is read at
import). Reports generation and TVI/VI solve times plus backup counts,
which must match between the two paths.

    python3 benchmarks/bench_jit.py --states 2000 --layers 10 --repeats 3
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

PROBE = r"""
import json, sys, time
from ssp_topo import USE_NUMBA, LayeredSpec, gen_layered, solve_vi, tvi
n, n_l, repeats = map(int, sys.argv[1:4])
spec = LayeredSpec(n, n_l, seed=1)
gen_layered(LayeredSpec(50, 2, seed=0)); tvi(gen_layered(LayeredSpec(50, 2, seed=0)))  # warm-up
rows = {}
for name, fn in (("gen", lambda: gen_layered(spec)),):
    ts = []
    for _ in range(repeats):
        t = time.perf_counter(); m = fn(); ts.append(time.perf_counter() - t)
    rows[name] = (min(ts), None)
for name, solver in (("vi", solve_vi), ("tvi", tvi)):
    ts = []
    for _ in range(repeats):
        t = time.perf_counter(); _, st = solver(m); ts.append(time.perf_counter() - t)
    rows[name] = (min(ts), st.backups)
print(json.dumps({"numba": USE_NUMBA, "rows": rows}))
"""


def run(no_jit: bool, states: int, layers: int, repeats: int) -> dict:
    env = dict(os.environ)
    env.pop("SSP_TOPO_NO_JIT", None)
    if no_jit:
        env["SSP_TOPO_NO_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", PROBE, str(states), str(layers), str(repeats)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=2000)
    ap.add_argument("--layers", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    jit = run(False, args.states, args.layers, args.repeats)
    plain = run(True, args.states, args.layers, args.repeats)
    print(f"layered |S|={args.states} n_l={args.layers}  (best of {args.repeats})")
    print(f"{'step':6s} {'numba s':>10s} {'python s':>10s} {'speedup':>8s}  backups")
    ok = True
    for step, (tj, bj) in jit["rows"].items():
        tp, bp = plain["rows"][step]
        same = bj == bp
        ok &= same
        note = "" if bj is None else f"{bj}" + ("" if same else f" != {bp}")
        print(f"{step:6s} {tj:10.4f} {tp:10.4f} {tp / tj:8.1f}x  {note}")
    if not jit["numba"]:
        print("warning: numba unavailable, both runs used the fallback")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

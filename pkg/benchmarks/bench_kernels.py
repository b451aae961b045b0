"""Time the compiled kernels against the pure-Python reference.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each workload runs once per backend with identical seeds, so both do the
same work; the script also checks that their outputs agree.
"""

from __future__ import annotations

import argparse
import json
import time

from zealot import kernels
from zealot._arrays import state_buffer, tree_arrays
from zealot.cobra import simulate_brw, simulate_cobra
from zealot.forward import simulate_forward
from zealot.graphical import sample_event_log
from zealot.trees import build_regular_tree


def workloads():
    tree = build_regular_tree(3, 12)
    log = sample_event_log(tree, {0: 0.2, 1: 0.3, 2: 0.5}, 3.0, 5)
    init = list(range(15))

    def replay(b):
        # raw kernel without per-event snapshots
        arrs = tree_arrays(tree, b)
        cols = (log.sites, log.src_ptr, log.src)
        if b is kernels.python_backend:
            cols = tuple(c.tolist() for c in cols)
        state = state_buffer(tree.n, init, b)
        b.forward_replay(arrs.boundary, arrs.adj_boundary, state, *cols, False)
        return bytes(state)

    return {
        "forward_sim": lambda b: [simulate_forward(tree, {0: 0.1, 2: 0.9}, init, 8.0, s, dt=1.0, backend=b).counts
                                  for s in range(10)],
        "forward_replay": replay,
        "cobra_sim": lambda b: [simulate_cobra(tree, {0: 0.1, 3: 0.9}, init, 10.0, s, dt=1.0, backend=b).counts
                                for s in range(10)],
        "brw_sim": lambda b: [simulate_brw(tree, {1: 0.3, 2: 0.7}, [0], 4.0, s, dt=1.0, backend=b).counts
                              for s in range(10)],
        "pair_coalescence": lambda b: b.pair_coalescence(3, 2, 200.0, 20000, 7),
    }


def best_of(fn, backend, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", help="also write results as JSON")
    args = parser.parse_args(argv)
    if kernels.compiled_backend is None:
        parser.error("compiled extension is not available; build it with pip install -e .")

    rows = []
    print(f"{'kernel':<18}{'python s':>11}{'cython s':>11}{'speedup':>10}  outputs")
    for name, fn in workloads().items():
        tp, op = best_of(fn, kernels.python_backend, args.repeat)
        tc, oc = best_of(fn, kernels.compiled_backend, args.repeat)
        agree = repr(op) == repr(oc)
        rows.append({"kernel": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc, "agree": agree})
        print(f"{name:<18}{tp:>11.4f}{tc:>11.4f}{tp / tc:>9.1f}x  {'identical' if agree else 'DIFFER'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())

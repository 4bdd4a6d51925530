"""Compiled kernel against the pure-Python fallback.

Times transit queries and a fixed number of local-search rounds on the same
instance with both backends and checks they produce identical results.

    python3 benchmarks/bench_kernel.py [--n 40] [--queries 200000] [--rounds 30]
"""
import argparse
import random
import time

import numpy as np

from mpisp._backend import load
from mpisp.instance import random_instance
from mpisp.search import SearchConfig, TabuSearch
from mpisp.transit import TransitTables


def time_queries(tr, qs):
    t0 = time.perf_counter()
    out = [tr.transit(i, j, dt) for i, j, dt in qs]
    return time.perf_counter() - t0, out


def time_rounds(tables, backend, rounds):
    cfg = SearchConfig(seed=1, n_init=5, max_local_iter=rounds)
    ts = TabuSearch(tables, cfg, backend=backend)
    start = ts.best_init()
    t0 = time.perf_counter()
    moves = []
    ts.move_hook = lambda ev: moves.append(ev["move"])
    ts.local_search(start)
    return time.perf_counter() - t0, moves


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--queries", type=int, default=200000)
    ap.add_argument("--rounds", type=int, default=30)
    a = ap.parse_args()
    inst = random_instance(np.random.default_rng(7), a.n, m=3, w=3)
    tables = TransitTables.build(inst)
    rng = random.Random(0)
    qs = [(rng.randrange(inst.n1), rng.randrange(inst.n1), rng.uniform(0, inst.horizon))
          for _ in range(a.queries)]
    res = {}
    for name in ("compiled", "python"):
        k = load(name)
        tq, outq = time_queries(tables.primitives(k), qs)
        tl, moves = time_rounds(tables, k, a.rounds)
        res[name] = (tq, tl, outq, moves)
        print("%-8s  queries %8.3fs (%6.2f us/query)   local search %8.3fs (%d moves)"
              % (name, tq, 1e6 * tq / len(qs), tl, len(moves)))
    c, p = res["compiled"], res["python"]
    print("speed-up  queries x%.1f   local search x%.1f" % (p[0] / c[0], p[1] / c[1]))
    print("identical results:", c[2] == p[2] and c[3] == p[3])


if __name__ == "__main__":
    main()

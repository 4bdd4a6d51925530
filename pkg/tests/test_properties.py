"""Randomized property suites.

Each hypothesis example draws a seed and checks a batch of cases derived from
it, so every suite covers EXAMPLES * BATCH = 10^4 cases.
"""
import math
import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import random_case
from mpisp.search import SearchConfig, TabuSearch
from mpisp.solution import Fitness, compare, evaluate
from oracles import Simulator

EXAMPLES = 1_000
BATCH = 10
PROPS = settings(max_examples=EXAMPLES, deadline=None, derandomize=True, database=None,
                 suppress_health_check=list(HealthCheck))


def _pool():
    out = []
    for seed in range(96):
        frac = (0.5, 2.0, 6.0)[seed % 3]
        inst, tab = random_case(1000 + seed, n=3 + seed % 6, window_frac=frac)
        out.append((inst, tab, Simulator(inst)))
    return out


POOL = _pool()
seeds = st.integers(0, 2**32 - 1)


def _cases(seed):
    rng = random.Random(seed)
    for _ in range(BATCH):
        yield POOL[rng.randrange(len(POOL))], rng


def _solution(tab, seed, steps):
    """A feasible state reached by init plus a few random moves."""
    ts = TabuSearch(tab, SearchConfig(seed=seed))
    ts.init_once()
    eng = ts.engine
    rng = random.Random(seed)
    for _ in range(steps):
        cand = eng.candidates()
        if not cand:
            break
        eng.apply(*rng.choice(cand))
    return ts, rng


def _edges(routes):
    out = set()
    for r in routes:
        if r:
            seq = [0] + list(r) + [0]
            out.update(zip(seq, seq[1:]))
    return out


# -- FIFO transit -------------------------------------------------------------------

@PROPS
@given(seeds)
def test_fifo(seed):
    for (inst, tab, _), rng in _cases(seed):
        i, j = rng.randrange(inst.n1), rng.randrange(inst.n1)
        H = inst.grid.horizon
        lo, hi = sorted((rng.uniform(0, H), rng.uniform(0, H)))
        prims = tab.primitives()
        t1, t2 = prims.transit(i, j, lo), prims.transit(i, j, hi)
        if math.isfinite(t2):
            assert lo + t1 <= hi + t2 + 1e-9
        assert i == j or t1 >= inst.travel[i][j] - 1e-9


# -- removal closure ------------------------------------------------------------------

@PROPS
@given(seeds)
def test_removal_closure(seed):
    for (inst, tab, sim), rng in _cases(seed):
        ts, _ = _solution(tab, rng.randrange(10**9), rng.randrange(5))
        routes = [r for r in ts.engine.routes() if r]
        if not routes:
            continue
        r = rng.choice(routes)
        q = rng.randrange(len(r))
        assert sim.feasible(r)
        rest = r[:q] + r[q + 1:]
        assert sim.feasible(rest)
        fail, *_ = tab.primitives().forward(rest)
        assert fail < 0


# -- cached fitness versus recomputation -----------------------------------------------

@PROPS
@given(seeds)
def test_cache_matches_recompute(seed):
    for (inst, tab, sim), rng in _cases(seed):
        ts, rng2 = _solution(tab, rng.randrange(10**9), rng.randrange(4))
        eng = ts.engine
        cand = eng.candidates()
        if not cand:
            continue
        mv = rng2.choice(cand)
        predicted = eng.evaluate(*mv)
        assert predicted is not None
        eng.apply(*mv)
        cached = eng.fitness()
        fresh = evaluate(tab, eng.routes()).fitness
        assert cached == pytest.approx(predicted, abs=1e-9)
        assert fresh.as_tuple() == pytest.approx(cached, abs=1e-9)
        for r in eng.routes():
            assert sim.feasible(r)


def _canon(routes):
    return tuple(sorted(tuple(r) for r in routes))


def _simple_neighbours(routes, pool):
    """Every relocation and pairwise exchange, built directly."""
    slots = [list(r) for r in routes]
    where = {v: (a, q) for a, r in enumerate(slots) for q, v in enumerate(r)}
    out = []
    for v, (a, q) in where.items():
        base = [list(r) for r in slots]
        del base[a][q]
        out.append(base)                                  # into the pool
        for b in range(len(slots)):
            for p in range(len(base[b]) + 1):
                nxt = [list(r) for r in base]
                nxt[b].insert(p, v)
                out.append(nxt)
    for u in pool:
        for b in range(len(slots)):
            for p in range(len(slots[b]) + 1):
                nxt = [list(r) for r in slots]
                nxt[b].insert(p, u)
                out.append(nxt)
        for v, (a, q) in where.items():
            nxt = [list(r) for r in slots]
            nxt[a][q] = u
            out.append(nxt)
    items = list(where.items())
    for x in range(len(items)):
        for y in range(x + 1, len(items)):
            (v, (a, q)), (u, (b, p)) = items[x], items[y]
            nxt = [list(r) for r in slots]
            nxt[a][q], nxt[b][p] = u, v
            out.append(nxt)
    return out


@settings(max_examples=EXAMPLES // 10, deadline=None, derandomize=True, database=None,
          suppress_health_check=list(HealthCheck))
@given(seeds)
def test_neighbourhood_is_complete(seed):
    for (inst, tab, sim), rng in _cases(seed):
        ts, _ = _solution(tab, rng.randrange(10**9), rng.randrange(4))
        eng = ts.engine
        routes, pool = eng.routes(), eng.pool()
        here = _canon(routes)
        reach = set()
        scratch = tab.engine()
        for mv in eng.candidates():
            scratch.set_solution(routes)
            scratch.apply(*mv)
            reach.add(_canon(scratch.routes()))
        for nb in _simple_neighbours(routes, pool):
            c = _canon(nb)
            if c != here and all(sim.feasible(r) for r in nb):
                assert c in reach, (routes, nb)


# -- tabu replay ----------------------------------------------------------------------

@PROPS
@given(seeds)
def test_tabu_replay(seed):
    for (inst, tab, sim), rng in _cases(seed):
        _replay(tab, sim, rng.randrange(10**9), rng.randint(1, 4))


def _replay(tab, sim, seed, tenure):
    """Re-run the move log against an independent edge tracker."""
    events = []
    cfg = SearchConfig(seed=seed, tenure=tenure, max_local_iter=3)
    ts = TabuSearch(tab, cfg, move_hook=events.append)
    start = ts.init_once()
    ts.local_search(start)
    scratch = tab.engine()
    routes = start.routes
    expiry = {}
    best = start.fitness
    for ev in events:
        it = ev["iteration"]
        scratch.set_solution(routes)
        cand = scratch.candidates()
        scratch.apply(*ev["move"])
        after = scratch.routes()
        assert set(ev["removed"]) == _edges(routes) - _edges(after)
        assert set(ev["created"]) == _edges(after) - _edges(routes)
        hit = any(expiry.get(e, 0) > it for e in ev["removed"])
        assert ev["was_tabu"] == hit
        fit = Fitness(*ev["fitness"])
        assert ev["reference"] == best.as_tuple()
        if hit:
            assert compare(fit, best) > 0
        # the applied move is the best allowable one
        for mv in cand:
            scratch.set_solution(routes)
            f = Fitness(*scratch.evaluate(*mv))
            scratch.apply(*mv)
            rem = _edges(routes) - _edges(scratch.routes())
            if any(expiry.get(e, 0) > it for e in rem) and compare(f, best) <= 0:
                continue
            assert compare(f, fit) <= 0
        for e in ev["created"]:
            expiry[e] = it + 1 + tenure
        for r in after:
            assert sim.feasible(r)
        routes = after
        if compare(fit, best) > 0:
            best = fit
    assert routes == ts.engine.routes()


# -- determinism ------------------------------------------------------------------------

@PROPS
@given(seeds)
def test_same_seed_same_run(seed):
    for (inst, tab, _), rng in _cases(seed):
        cfg = SearchConfig(seed=rng.randrange(10**9), n_init=rng.randint(1, 3),
                           tenure=rng.randint(0, 3), max_local_iter=2, max_perturbation=1)
        a = TabuSearch(tab, cfg).run()
        b = TabuSearch(tab, cfg).run()
        assert a.best.routes == b.best.routes and a.best.pool == b.best.pool
        assert a.best.fitness == b.best.fitness
        assert [(r.P, r.D, r.F) for r in a.trace] == [(r.P, r.D, r.F) for r in b.trace]
        assert a.iterations == b.iterations and a.moves == b.moves

"""Tabu search with an ejection pool and adaptive perturbation.

One run: build ``n_init`` randomized greedy solutions and keep the best;
then repeat local search (best allowable move per round under an edge tabu
list), ejection-pool improvement and perturbation until ``max_perturbation``
consecutive rounds fail to improve the best solution.

Moves are scanned and evaluated inside the kernel; this module drives the
phases and owns the random stream.
"""
from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import kernel
from .solution import Fitness, Solution, better, compare, same
from .transit import TransitTables

COMPONENTS = ("LS", "EP", "PER")

OP_NAMES = {0: "2-opt", 1: "or-opt", 2: "2-opt*", 3: "relocate", 4: "relocate-in",
            5: "relocate-out", 6: "exchange", 7: "exchange-pool"}


@dataclass
class SearchConfig:
    eta: float = 1.0
    n_init: int = 100
    alpha1: float = 5.0
    max_perturbation: int = 4
    max_local_iter: int = 200
    tenure: int = 100
    beta1: float = 0.6
    beta2: float = 0.4
    beta3: float = 0.4
    beta4: float = 0.4
    beta5: float = 0.2
    p_min: float = 0.05
    p_max: float = 0.30
    p_delta: float = 0.1
    n_max: int = 5
    seed: int = 0
    epa_insert: str = "min"
    components: tuple = COMPONENTS
    maximize_f: bool = True
    operators: int = kernel.OPS_ALL

    def __post_init__(self):
        self.components = tuple(c.upper() for c in self.components)
        bad = set(self.components) - set(COMPONENTS)
        if bad or not self.components:
            raise ValueError("components must be a non-empty subset of LS,EP,PER")
        if self.epa_insert not in ("min", "max"):
            raise ValueError("epa_insert must be 'min' or 'max'")
        if not 0 <= self.p_min <= self.p_max <= 1:
            raise ValueError("need 0 <= p_min <= p_max <= 1")

    def digest(self) -> str:
        d = asdict(self)
        d.pop("seed")
        d["components"] = list(d["components"])
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


class TabuList:
    """View of the engine's edge expiry table."""

    def __init__(self, engine):
        self.engine = engine

    def expiry(self, a: int, b: int) -> int:
        return self.engine.tabu_expiry(a, b)

    def is_tabu(self, a: int, b: int, iteration: int) -> bool:
        return iteration < self.expiry(a, b)

    def clear(self):
        self.engine.reset_tabu()


@dataclass
class SolutionLog:
    entries: list = field(default_factory=list)

    def count(self, f: Fitness) -> int:
        return sum(1 for g in self.entries if same(f, g))

    def add(self, f: Fitness):
        self.entries.append(f)


@dataclass
class TraceRow:
    iteration: int
    P: float
    D: float
    F: float
    best_P: float
    pool: int
    elapsed: float


@dataclass
class RunResult:
    best: Solution
    trace: list
    elapsed: float
    iterations: int
    seed: int
    moves: int = 0


class TabuSearch:
    """State of one seeded run over fixed transit tables."""

    def __init__(self, tables: TransitTables, cfg: SearchConfig | None = None,
                 backend=None, move_hook=None):
        self.tables = tables
        self.inst = tables.inst
        self.cfg = cfg or SearchConfig()
        self.rng = random.Random(self.cfg.seed)
        self.engine = tables.engine(eta=self.cfg.eta, maximize_f=self.cfg.maximize_f,
                                    backend=backend)
        self.prims = tables.primitives(backend)
        self.move_hook = move_hook
        self.moves = 0
        self.d = np.asarray(self.inst.workload, dtype=float)

    # -- helpers ---------------------------------------------------------------

    def _better(self, f1, f2):
        return better(f1, f2, self.cfg.maximize_f)

    def load(self, routes) -> Solution:
        self.engine.set_solution([list(r) for r in routes])
        return self.snapshot()

    def snapshot(self) -> Solution:
        e = self.engine
        return Solution(e.routes(), e.pool(), Fitness(*e.fitness()))

    # -- construction ------------------------------------------------------------

    def init_once(self) -> Solution:
        """Randomized greedy appending by transit-per-workload ratio."""
        m = self.inst.m
        tr = self.prims
        cand = np.arange(1, self.inst.n1, dtype=np.int32)
        st = np.empty((m, len(cand)))
        tail = [0] * m
        ed = [0.0] * m
        wl = [0.0] * m
        routes = [[] for _ in range(m)]
        for r in range(m):
            tr.append_costs(0, 0.0, 0.0, cand, st[r])
        alpha = self.cfg.alpha1
        while len(cand):
            dv = self.d[cand]
            with np.errstate(divide="ignore", invalid="ignore"):
                rho = np.where(dv > 0, st.min(axis=0) / np.where(dv > 0, dv, 1.0), np.inf)
            keep = np.isfinite(rho)
            if not keep.all():
                cand, st, rho = cand[keep], st[:, keep], rho[keep]
                if not len(cand):
                    break
            order = np.lexsort((cand, rho))
            k = min(int(self.rng.random() ** alpha * len(cand)), len(cand) - 1)
            idx = int(order[k])
            v = int(cand[idx])
            r = int(np.argmin(st[:, idx]))
            ed[r] = tr.departure_after(tail[r], ed[r], v)
            tail[r] = v
            wl[r] += float(self.d[v])
            routes[r].append(v)
            cand = np.delete(cand, idx)
            st = np.delete(st, idx, axis=1)
            if len(cand):
                row = np.empty(len(cand))
                tr.append_costs(tail[r], ed[r], wl[r], np.ascontiguousarray(cand), row)
                st[r] = row
        return self.load(routes)

    def best_init(self) -> Solution:
        best = None
        for _ in range(max(1, self.cfg.n_init)):
            s = self.init_once()
            if best is None or self._better(s.fitness, best.fitness):
                best = s
        return best

    # -- local search --------------------------------------------------------------

    def local_search(self, start: Solution, tenure: int | None = None) -> Solution:
        """Best allowable move per round; returns the best solution seen.

        With tenure 0 the tabu list is inactive and the loop is a plain
        best-improvement descent that stops at a local optimum.
        """
        cfg = self.cfg
        tenure = cfg.tenure if tenure is None else tenure
        eng = self.engine
        eng.set_solution([list(r) for r in start.routes])
        eng.reset_tabu()
        best = self.snapshot()
        it = 0
        stall = 0
        if tenure <= 0:
            while True:
                it += 1
                cur = Fitness(*eng.fitness())
                mv = eng.scan(it, False, cur.P, cur.D, cur.F, cfg.operators)
                if mv is None or not self._better(Fitness(*mv[5:]), cur):
                    break
                self._apply(mv, it, 0, cur)
            return self.snapshot()
        while stall <= cfg.max_local_iter:
            it += 1
            bf = best.fitness
            mv = eng.scan(it, True, bf.P, bf.D, bf.F, cfg.operators)
            if mv is None:
                break
            self._apply(mv, it, tenure, bf)
            cur = Fitness(*eng.fitness())
            if self._better(cur, bf):
                best = self.snapshot()
                stall = 0
            else:
                stall += 1
        return best

    def _apply(self, mv, it, tenure, ref):
        removed, created, was_tabu = self.engine.apply(*mv[:5], it, tenure)
        self.moves += 1
        if self.move_hook is not None:
            self.move_hook(dict(iteration=it, move=tuple(mv[:5]), fitness=tuple(mv[5:]),
                                removed=removed, created=created, was_tabu=was_tabu,
                                reference=ref.as_tuple(), tenure=tenure))

    # -- ejection pool -----------------------------------------------------------

    def _eject_order(self, seq, u):
        """Drop suppliers (never u) by the smallest ejection score until the
        sequence is feasible; None if only u would remain."""
        cfg = self.cfg
        tr = self.prims
        Q = self.inst.Q
        seq = list(seq)
        while True:
            wl, viol, ok = tr.violations(seq)
            if ok:
                return seq
            if len(seq) <= 1:
                return None
            best_i, best_c = None, None
            for i in seq:
                if i == u:
                    continue
                rest = [v for v in seq if v != i]
                w2, v2, _ = tr.violations(rest)
                c = (cfg.beta3 * self.d[i] + cfg.beta4 * max(w2 - Q, 0.0)
                     + cfg.beta5 * v2)
                if best_c is None or c < best_c:
                    best_i, best_c = i, c
            seq.remove(best_i)

    def epa(self, s: Solution) -> Solution:
        """One insert-and-eject candidate per pool supplier, each polished by
        descent; the best replaces ``s`` if it is better."""
        cfg = self.cfg
        best = s
        for u in list(s.pool):
            self.engine.set_solution([list(r) for r in s.routes])
            r, q = self.engine.epa_position(u, cfg.beta1, cfg.beta2, cfg.epa_insert == "max")
            routes = [list(x) for x in s.routes]
            seq = routes[r][:q] + [u] + routes[r][q:]
            seq = self._eject_order(seq, u)
            if seq is None:
                continue
            routes[r] = seq
            cand = self.local_search(self.load(routes), tenure=0)
            if self._better(cand.fitness, best.fitness):
                best = cand
        if best is not s:
            self.load(best.routes)
        return best

    # -- perturbation --------------------------------------------------------------

    def perturb(self, s: Solution, log: SolutionLog) -> Solution:
        """Remove served suppliers at random, lighter ones less likely.

        Probabilities grow with the number of earlier rounds that ended at a
        solution equal to ``s``.
        """
        cfg = self.cfg
        nrep = log.count(s.fitness)
        shift = cfg.p_delta * min(nrep, cfg.n_max)
        pmin, pmax = cfg.p_min + shift, cfg.p_max + shift
        served = sorted((float(self.d[v]), v) for r in s.routes for v in r)
        n = len(served)
        drop = set()
        for k, (_, v) in enumerate(served, start=1):
            p = min(1.0, max(0.0, pmin + (pmax - pmin) * k / n))
            if self.rng.random() < p:
                drop.add(v)
        routes = [[v for v in r if v not in drop] for r in s.routes]
        return self.load(routes)

    # -- driver ------------------------------------------------------------------------

    def run(self, progress=None) -> RunResult:
        cfg = self.cfg
        t0 = time.perf_counter()
        comps = set(cfg.components)
        s = self.best_init()
        s_best = s
        log = SolutionLog()
        trace = [TraceRow(0, *s.fitness.as_tuple(), s.P, len(s.pool), time.perf_counter() - t0)]
        i = 0
        it = 0
        while i <= cfg.max_perturbation:
            it += 1
            s1 = self.local_search(s) if "LS" in comps else s
            if "EP" in comps:
                s1 = self.epa(s1)
            improved = self._better(s1.fitness, s_best.fitness)
            if improved:
                s_best = s1
                i = 0
            else:
                i += 1
            trace.append(TraceRow(it, *s1.fitness.as_tuple(), s_best.P, len(s1.pool),
                                  time.perf_counter() - t0))
            if progress:
                progress(trace[-1])
            if "PER" in comps:
                s = self.perturb(s1, log)
            elif not improved:
                # without perturbation the next round would repeat this one
                break
            else:
                s = s1
            log.add(s1.fitness)
        return RunResult(best=s_best, trace=trace, elapsed=time.perf_counter() - t0,
                         iterations=it, seed=cfg.seed, moves=self.moves)


# -- functional API ------------------------------------------------------------------

def _ts(tables, cfg, rng):
    ts = TabuSearch(tables, cfg)
    if rng is not None:
        ts.rng = rng
    return ts


def init_once(tables: TransitTables, rng: random.Random | None = None,
              cfg: SearchConfig | None = None) -> Solution:
    return _ts(tables, cfg, rng).init_once()


def best_init(tables: TransitTables, rng: random.Random | None = None,
              cfg: SearchConfig | None = None) -> Solution:
    return _ts(tables, cfg, rng).best_init()


def local_search(tables: TransitTables, s: Solution, cfg: SearchConfig | None = None,
                 tenure: int | None = None) -> Solution:
    return _ts(tables, cfg, None).local_search(s, tenure)


def epa(tables: TransitTables, s: Solution, cfg: SearchConfig | None = None) -> Solution:
    return _ts(tables, cfg, None).epa(s)


def perturb(tables: TransitTables, s: Solution, log: SolutionLog,
            rng: random.Random | None = None, cfg: SearchConfig | None = None) -> Solution:
    return _ts(tables, cfg, rng).perturb(s, log)


def tabu_search(tables: TransitTables, cfg: SearchConfig | None = None) -> RunResult:
    return TabuSearch(tables, cfg).run()


def best_of(tables: TransitTables, repeats: int, cfg: SearchConfig | None = None,
            seed: int = 0) -> list:
    """Independent runs with seeds seed, seed+1, ..."""
    cfg = cfg or SearchConfig()
    out = []
    for k in range(repeats):
        c = SearchConfig(**{**asdict(cfg), "seed": seed + k})
        out.append(TabuSearch(tables, c).run())
    return out

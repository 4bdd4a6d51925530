"""Solutions: served-supplier routes plus the pool of unserved suppliers.

A route lists the suppliers it serves; the depot is implicit at both ends
and travel between consecutive suppliers may pass through rest stops that
are not stored. Fitness is the triple (P, D, F):

* P -- total served workload (maximized);
* D -- how hard the pool is to insert: each pool supplier's cheapest
  insertion violation, sorted ascending, weighted by 1/rank (minimized);
* F -- total slack, per route the largest gap between latest and earliest
  arrival over its slots (maximized by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .transit import TransitTables

TOL = 1e-6


@dataclass(frozen=True)
class Fitness:
    P: float
    D: float
    F: float

    def as_tuple(self):
        return (self.P, self.D, self.F)


def compare(f1: Fitness, f2: Fitness, maximize_f: bool = True) -> int:
    """1 if f1 is better, -1 if f2 is better, 0 if equal within tolerance."""
    if f1.P > f2.P + TOL:
        return 1
    if f1.P < f2.P - TOL:
        return -1
    if f1.D < f2.D - TOL:
        return 1
    if f1.D > f2.D + TOL:
        return -1
    sign = 1.0 if maximize_f else -1.0
    if sign * f1.F > sign * f2.F + TOL:
        return 1
    if sign * f1.F < sign * f2.F - TOL:
        return -1
    return 0


def better(f1: Fitness, f2: Fitness, maximize_f: bool = True) -> bool:
    return compare(f1, f2, maximize_f) > 0


def same(f1: Fitness, f2: Fitness) -> bool:
    return compare(f1, f2) == 0


@dataclass
class Schedule:
    """Per-slot times of one route: slot 0 is the depot start, the last slot
    the depot end. ``start`` is the service start (after any wait for the
    window or for the next period)."""

    suppliers: list
    ea: list
    start: list
    ed: list
    la: list = field(default_factory=list)
    workload: float = 0.0
    fail_pos: int = -1
    fail_kind: str = ""

    @property
    def feasible(self) -> bool:
        return self.fail_pos < 0


def forward_schedule(tables: TransitTables, route, from_pos: int = 0,
                     prefix: Schedule | None = None) -> Schedule:
    """Earliest arrival, service start and departure along ``route``.

    With ``prefix`` (an earlier schedule of a route sharing the first
    ``from_pos`` suppliers) propagation restarts after that prefix.
    """
    tr = tables.primitives()
    inst = tables.inst
    route = list(route)
    if prefix is not None and from_pos > 0:
        ea = prefix.ea[:from_pos + 1]
        st = prefix.start[:from_pos + 1]
        ed = prefix.ed[:from_pos + 1]
    else:
        from_pos = 0
        ea, st, ed = [0.0], [0.0], [0.0]
    wl = float(sum(inst.workload[v] for v in route))
    prev = route[from_pos - 1] if from_pos > 0 else 0
    t = ed[-1]
    for q in range(from_pos, len(route)):
        v = route[q]
        a = t + tr.transit(prev, v, t)
        s = tr.push(max(a, float(inst.ready[v])), float(inst.service[v]))
        ea.append(a)
        st.append(s)
        if s > inst.due[v] + 1e-9:
            ed.append(math.inf)
            return Schedule(route, ea, st, ed, workload=wl, fail_pos=q + 1, fail_kind="window")
        t = s + float(inst.service[v])
        ed.append(t)
        prev = v
    back = t + tr.transit(prev, 0, t)
    ea.append(back)
    st.append(back)
    ed.append(back)
    sched = Schedule(route, ea, st, ed, workload=wl)
    if back > inst.horizon + 1e-9:
        sched.fail_pos, sched.fail_kind = len(route) + 1, "horizon"
    elif wl > inst.Q + 1e-9:
        sched.fail_pos, sched.fail_kind = 0, "capacity"
    return sched


def backward_latest(tables: TransitTables, route) -> list:
    """Latest arrival per slot that keeps every later window and the depot
    deadline; slot 0 holds the latest departure from the depot."""
    return tables.primitives().backward(list(route))


def schedule(tables: TransitTables, route) -> Schedule:
    s = forward_schedule(tables, route)
    s.la = backward_latest(tables, route)
    return s


def mft(sched: Schedule) -> float:
    return max(l - e for l, e in zip(sched.la, sched.ea))


@dataclass
class Solution:
    routes: list
    pool: list
    fitness: Fitness

    @property
    def P(self) -> float:
        return self.fitness.P

    def served(self) -> list:
        return sorted(v for r in self.routes for v in r)

    def copy(self) -> "Solution":
        return Solution([list(r) for r in self.routes], list(self.pool), self.fitness)

    def key(self):
        return tuple(tuple(r) for r in self.routes)


def evaluate(tables: TransitTables, routes, eta: float = 1.0, maximize_f: bool = True,
             engine=None) -> Solution:
    """Check feasibility and compute the fitness of a set of routes."""
    eng = engine or tables.engine(m=len(routes), eta=eta, maximize_f=maximize_f)
    eng.set_solution([list(r) for r in routes])
    return Solution(eng.routes(), eng.pool(), Fitness(*eng.fitness()))


def fitness(tables: TransitTables, routes, eta: float = 1.0) -> Fitness:
    return evaluate(tables, routes, eta).fitness


# -- text format ---------------------------------------------------------------

def to_text(sol: Solution, tables: TransitTables, name: str = "") -> str:
    """Routes with per-stop times, the pool and the fitness triple."""
    out = ["solution %s" % (name or tables.inst.name),
           "fitness %r %r %r" % sol.fitness.as_tuple()]
    for k, r in enumerate(sol.routes):
        out.append("route %d : %s" % (k + 1, " ".join(str(v) for v in r)))
        sc = schedule(tables, r)
        for q, v in enumerate(r, start=1):
            out.append("  stop %d ea=%.6f start=%.6f ed=%.6f la=%.6f"
                       % (v, sc.ea[q], sc.start[q], sc.ed[q], sc.la[q]))
        out.append("  back ea=%.6f" % sc.ea[-1])
    out.append("pool : %s" % " ".join(str(v) for v in sol.pool))
    out.append("end")
    return "\n".join(out) + "\n"


def from_text(text: str, tables: TransitTables, eta: float = 1.0) -> Solution:
    """Read routes from the text format and re-evaluate them."""
    routes = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("route "):
            _, _, rest = line.partition(":")
            routes.append([int(x) for x in rest.split()])
    return evaluate(tables, routes, eta)

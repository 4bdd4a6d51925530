"""Constrained-knapsack upper bound.

Binary ``x[i, k, p]`` says supplier ``i`` is served by inspector ``k`` in
period ``p``. Besides assignment, capacity and pairwise-compatibility rows,
two time rows bound what one inspector can fit: the whole route must fit
before the k-th largest possible return time, and the services of one
period, with travel to a nearest compatible neighbour, must fit in a period
(up to the final leg of that period).

Row families (named by the prefix of each row):

* ``one``    -- each supplier at most once, zero if never servable;
* ``per``    -- zero outside the periods the window spans;
* ``pair``   -- two incompatible suppliers never share an inspector;
* ``cap``    -- workload capacity per inspector (absent when Q is infinite);
* ``route``  -- route duration against the paired return time;
* ``period`` -- per inspector and period, service plus travel within T.

The model is solved by scipy's MILP interface, by a small exact
branch-and-bound, or written out in LP text format.
"""
from __future__ import annotations

import io
import math
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance
from .transit import TransitTables

EPS = 1e-9
SMALL_LIMIT = 5000
FAMILIES = ("one", "per", "pair", "cap", "route", "period")


class ModelTooLarge(ValueError):
    pass


class SearchLimit(RuntimeError):
    pass


# -- coefficients --------------------------------------------------------------

def tighten_windows(inst: Instance):
    """Windows reduced to service starts that can finish inside a period.

    Returns ``(e, l)`` arrays indexed by vertex (depot untouched).
    """
    T = float(inst.grid.T)
    w = inst.grid.w
    e = np.asarray(inst.ready, dtype=float).copy()
    l = np.asarray(inst.due, dtype=float).copy()
    s = np.asarray(inst.service, dtype=float)
    for i in range(1, inst.n1):
        if s[i] <= 0:
            continue
        p = min(int(math.floor(e[i] / T)), w - 1)
        if (p + 1) * T - e[i] < s[i] - EPS:
            e[i] = (p + 1) * T
        p = min(int(math.floor((l[i] + EPS) / T)), w - 1)
        if (p + 1) * T - l[i] < s[i] - EPS:
            l[i] = (p + 1) * T - s[i]
    return e, l


@dataclass
class UbCoefficients:
    e: np.ndarray
    l: np.ndarray
    f1: np.ndarray          # (n1,)
    f2: np.ndarray          # (n1, w)
    f3: np.ndarray          # (n1, n1) symmetric
    r: np.ndarray           # (n1, w); row 0 is the depot
    r0: float
    lam: np.ndarray         # (n1,)
    group: list             # m supplier ids with the largest return times
    lam_sorted: np.ndarray  # (m,) descending; -inf pads when n < m

    @property
    def n(self):
        return len(self.f1) - 1

    @property
    def w(self):
        return self.f2.shape[1]


def _period_span(x_lo, x_hi, T, w):
    """First and last period (0-based) a window may touch; boundaries count
    for both neighbouring periods."""
    p1 = max(0, int(math.ceil((x_lo - EPS) / T)) - 1)
    p2 = min(w - 1, int(math.floor((x_hi + EPS) / T)))
    return p1, p2


def derive_coefficients(inst: Instance, tables: TransitTables | None = None,
                        tightened=None) -> UbCoefficients:
    tables = tables or TransitTables.build(inst)
    e, l = tightened if tightened is not None else tighten_windows(inst)
    n1, w, m = inst.n1, inst.grid.w, inst.m
    T = float(inst.grid.T)
    s = np.asarray(inst.service, dtype=float)
    t = np.asarray(inst.travel, dtype=float)

    f1 = np.zeros(n1, dtype=int)
    f2 = np.zeros((n1, w), dtype=int)
    f2[0, :] = 1
    for i in range(1, n1):
        if e[i] <= l[i] + EPS:
            f1[i] = 1
            p1, p2 = _period_span(e[i], l[i], T, w)
            f2[i, p1:p2 + 1] = 1

    reach = (e + s)[:, None] + t <= l[None, :] + EPS
    f3 = (reach | reach.T).astype(int)
    f3[0, :] = 1
    f3[:, 0] = 1
    np.fill_diagonal(f3, 0)

    r = np.full((n1, w), math.inf)
    for i in range(n1):
        for p in range(w):
            ok = (f2[:, p] == 1) & (f3[i, :] == 1)
            ok[i] = False
            if ok.any():
                r[i, p] = float(t[i, ok].min())
    r0 = float(r[0].min())
    if not math.isfinite(r0):
        r0 = 0.0

    tr = tables.primitives()
    base = tables.base
    lam = np.full(n1, -math.inf)
    for i in range(1, n1):
        # a supplier that can never get home ends no route
        if math.isfinite(base[i, 0]):
            lam[i] = tr.ceil(float(l[i] + s[i])) + float(base[i, 0])
    order = sorted(range(1, n1), key=lambda i: (-lam[i], i))
    group = order[:m]
    lam_sorted = np.array([lam[g] for g in group] + [-math.inf] * (m - len(group)))
    return UbCoefficients(e, l, f1, f2, f3, r, r0, lam, group, lam_sorted)


# -- model -----------------------------------------------------------------------

@dataclass
class Row:
    name: str
    terms: dict      # var index -> coefficient
    rhs: float

    @property
    def family(self):
        return self.name.split("_", 1)[0]


@dataclass
class UbModel:
    n: int
    m: int
    w: int
    obj: np.ndarray
    upper: np.ndarray   # 0 for fixed variables, else 1
    rows: list = field(default_factory=list)
    name: str = "ub"

    def index(self, i: int, k: int, p: int) -> int:
        """Variable of supplier i (1..n), inspector k and period p (0-based)."""
        return ((i - 1) * self.m + k) * self.w + p

    def var_name(self, j: int) -> str:
        i, rest = divmod(j, self.m * self.w)
        k, p = divmod(rest, self.w)
        return "x_%d_%d_%d" % (i + 1, k + 1, p + 1)

    @property
    def nvars(self) -> int:
        return self.n * self.m * self.w

    def counts(self) -> dict:
        out = {f: 0 for f in FAMILIES}
        for row in self.rows:
            out[row.family] += 1
        return out

    def matrix(self):
        from scipy.sparse import csr_array
        data, ri, ci = [], [], []
        for k, row in enumerate(self.rows):
            for j, a in row.terms.items():
                data.append(a)
                ri.append(k)
                ci.append(j)
        A = csr_array((data, (ri, ci)), shape=(len(self.rows), self.nvars))
        b = np.array([row.rhs for row in self.rows], dtype=float)
        return A, b

    def check(self, x) -> list:
        """Names of rows and bounds the 0/1 vector ``x`` violates."""
        x = np.asarray(x, dtype=float)
        bad = ["bound_%s" % self.var_name(j) for j in np.flatnonzero(x > self.upper + EPS)]
        for row in self.rows:
            lhs = sum(a * x[j] for j, a in row.terms.items())
            if lhs > row.rhs + 1e-6:
                bad.append(row.name)
        return bad

    def value(self, x) -> float:
        return float(np.dot(self.obj, x))


def build_model(coeffs: UbCoefficients, inst: Instance) -> UbModel:
    n, m, w = inst.n, inst.m, inst.grid.w
    T = float(inst.grid.T)
    d = np.asarray(inst.workload, dtype=float)
    s = np.asarray(inst.service, dtype=float)
    mdl = UbModel(n, m, w, np.zeros(n * m * w), np.ones(n * m * w), name=inst.name)
    ix = mdl.index
    for i in range(1, n + 1):
        for k in range(m):
            for p in range(w):
                mdl.obj[ix(i, k, p)] = d[i]
                if not coeffs.f1[i] or not coeffs.f2[i, p]:
                    mdl.upper[ix(i, k, p)] = 0.0
    rows = mdl.rows
    for i in range(1, n + 1):
        rows.append(Row("one_%d" % i, {ix(i, k, p): 1.0 for k in range(m) for p in range(w)},
                        float(coeffs.f1[i])))
    for i in range(1, n + 1):
        for p in range(w):
            rows.append(Row("per_%d_%d" % (i, p + 1), {ix(i, k, p): 1.0 for k in range(m)},
                            float(coeffs.f2[i, p])))
    for k in range(m):
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                if coeffs.f3[i, j]:
                    continue
                terms = {ix(i, k, p): 1.0 for p in range(w)}
                terms.update({ix(j, k, p): 1.0 for p in range(w)})
                rows.append(Row("pair_%d_%d_%d" % (i, j, k + 1), terms, 1.0))
    if math.isfinite(inst.Q):
        for k in range(m):
            rows.append(Row("cap_%d" % (k + 1),
                            {ix(i, k, p): d[i] for i in range(1, n + 1) for p in range(w)
                             if d[i] != 0}, float(inst.Q)))
    tail = np.minimum.accumulate(coeffs.r[:, ::-1], axis=1)[:, ::-1]
    for k in range(m):
        rhs = coeffs.lam_sorted[k] - coeffs.r0
        if not rhs >= 0:
            # no route can be this long: inspector k serves nobody
            for i in range(1, n + 1):
                for p in range(w):
                    mdl.upper[ix(i, k, p)] = 0.0
            rhs = 0.0
        terms = {}
        for i in range(1, n + 1):
            for p in range(w):
                a = s[i] + tail[i, p]
                if a != 0:
                    terms[ix(i, k, p)] = float(a)
        rows.append(Row("route_%d" % (k + 1), terms, float(rhs)))
    for k in range(m):
        for p in range(w):
            rmax = float(coeffs.r[1:, p].max()) if n else 0.0
            terms = {}
            for i in range(1, n + 1):
                a = s[i] + coeffs.r[i, p]
                if a != 0:
                    terms[ix(i, k, p)] = float(a)
            rows.append(Row("period_%d_%d" % (k + 1, p + 1), terms, T + rmax))
    return mdl


def model_for(inst: Instance, tables: TransitTables | None = None) -> UbModel:
    tables = tables or TransitTables.build(inst)
    return build_model(derive_coefficients(inst, tables), inst)


# -- solving ---------------------------------------------------------------------------

@dataclass
class UbResult:
    value: float
    x: np.ndarray | None
    status: str
    solve_time: float
    method: str


def solve_milp(model: UbModel, time_limit: float | None = None) -> UbResult:
    """Solve with scipy's MILP interface (HiGHS)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    t0 = time.perf_counter()
    if model.nvars == 0:
        return UbResult(0.0, np.zeros(0), "optimal", 0.0, "milp")
    A, b = model.matrix()
    cons = [LinearConstraint(A, -np.inf, b)] if len(model.rows) else []
    opts = {"time_limit": time_limit} if time_limit else {}
    res = milp(-model.obj, constraints=cons, integrality=np.ones(model.nvars),
               bounds=Bounds(np.zeros(model.nvars), model.upper), options=opts)
    dt = time.perf_counter() - t0
    if res.x is None:
        return UbResult(math.nan, None, res.message, dt, "milp")
    x = np.round(res.x)
    status = "optimal" if res.status == 0 else "limit"
    # with a time limit the incumbent is not a bound; report the dual bound
    value = model.value(x) if res.status == 0 else -float(res.mip_dual_bound)
    return UbResult(value, x, status, dt, "milp")


def solve_exact_small(model: UbModel, limit: int = SMALL_LIMIT,
                      node_limit: int = 5_000_000) -> UbResult:
    """Depth-first branch-and-bound over suppliers by decreasing workload.

    Each supplier is either skipped or given one allowed (inspector, period).
    The bound adds, per inspector, a fractional knapsack of the remaining
    suppliers against its spare capacity and spare route time.
    """
    if model.nvars > limit:
        raise ModelTooLarge("%d variables exceed %d; write the model with emit_lp "
                            "or use solve_milp" % (model.nvars, limit))
    t0 = time.perf_counter()
    n, m, w = model.n, model.m, model.w
    ix = model.index
    fam = {f: [r for r in model.rows if r.family == f] for f in FAMILIES}
    d = np.zeros(n + 1)
    for i in range(1, n + 1):
        d[i] = model.obj[ix(i, 0, 0)] if m and w else 0.0
    cap = [math.inf] * m
    capw = np.zeros((m, n + 1))
    for row in fam["cap"]:
        k = int(row.name.split("_")[1]) - 1
        cap[k] = row.rhs
    route_rhs = [math.inf] * m
    route_a = np.zeros((m, n + 1, w))
    for row in fam["route"]:
        k = int(row.name.split("_")[1]) - 1
        route_rhs[k] = row.rhs
        for j, a in row.terms.items():
            i = j // (m * w) + 1
            route_a[k, i, j % w] = a
    per_rhs = np.full((m, w), math.inf)
    per_a = np.zeros((m, n + 1, w))
    for row in fam["period"]:
        _, k, p = row.name.split("_")
        k, p = int(k) - 1, int(p) - 1
        per_rhs[k, p] = row.rhs
        for j, a in row.terms.items():
            per_a[k, j // (m * w) + 1, p] = a
    for row in fam["cap"]:
        k = int(row.name.split("_")[1]) - 1
        for j, a in row.terms.items():
            capw[k, j // (m * w) + 1] = a
    conflict = [set() for _ in range(n + 1)]
    for row in fam["pair"]:
        _, i, j, _k = row.name.split("_")
        conflict[int(i)].add(int(j))
        conflict[int(j)].add(int(i))
    allowed = {}
    for i in range(1, n + 1):
        allowed[i] = [(k, p) for k in range(m) for p in range(w)
                      if model.upper[ix(i, k, p)] > 0.5]
    # routes with equal limits are interchangeable
    twin = [k > 0 and route_rhs[k] == route_rhs[k - 1] and cap[k] == cap[k - 1]
            for k in range(m)]
    order = sorted((i for i in range(1, n + 1) if allowed[i] and d[i] > 0),
                   key=lambda i: (-d[i], i))
    N = len(order)
    load = [0.0] * m
    rtime = [0.0] * m
    ptime = np.zeros((m, w))
    members = [[] for _ in range(m)]
    assign = {}
    best = [0.0, {}]
    nodes = [0]
    min_route = np.where(route_a > 0, route_a, np.inf).min(axis=2) if w else route_a

    def bound(pos, val):
        rest = order[pos:]
        if not rest:
            return val
        total = sum(d[i] for i in rest)
        extra = 0.0
        for k in range(m):
            cap_k = cap[k] - load[k]
            tim_k = route_rhs[k] - rtime[k]
            best_k = math.inf
            for spare, wt in ((cap_k, capw[k]), (tim_k, min_route[k])):
                if not math.isfinite(spare):
                    continue
                items = []
                for i in rest:
                    if any(c in conflict[i] for c in members[k]):
                        continue
                    a = wt[i]
                    if a <= 0:
                        items = None
                        break
                    items.append((d[i] / a, d[i], a))
                if items is None:
                    continue
                items.sort(reverse=True)
                got, room = 0.0, spare
                for _, v, a in items:
                    if a <= room:
                        got += v
                        room -= a
                    else:
                        got += v * room / a
                        break
                best_k = min(best_k, got)
            extra += best_k
            if extra >= total:
                return val + total
        return val + min(total, extra)

    def dfs(pos, val):
        nodes[0] += 1
        if nodes[0] > node_limit:
            raise SearchLimit("node limit reached")
        if val > best[0] + EPS:
            best[0] = val
            best[1] = dict(assign)
        if pos == N or bound(pos, val) <= best[0] + 1e-9:
            return
        i = order[pos]
        for k, p in allowed[i]:
            if twin[k] and not members[k - 1] and not members[k]:
                continue
            if load[k] + capw[k, i] > cap[k] + 1e-9:
                continue
            if rtime[k] + route_a[k, i, p] > route_rhs[k] + 1e-9:
                continue
            if ptime[k, p] + per_a[k, i, p] > per_rhs[k, p] + 1e-9:
                continue
            if any(c in conflict[i] for c in members[k]):
                continue
            load[k] += capw[k, i]
            rtime[k] += route_a[k, i, p]
            ptime[k, p] += per_a[k, i, p]
            members[k].append(i)
            assign[i] = (k, p)
            dfs(pos + 1, val + d[i])
            del assign[i]
            members[k].pop()
            load[k] -= capw[k, i]
            rtime[k] -= route_a[k, i, p]
            ptime[k, p] -= per_a[k, i, p]
        dfs(pos + 1, val)

    dfs(0, 0.0)
    x = np.zeros(model.nvars)
    for i, (k, p) in best[1].items():
        x[ix(i, k, p)] = 1.0
    return UbResult(best[0], x, "optimal", time.perf_counter() - t0, "exact")


def upper_bound(inst: Instance, tables: TransitTables | None = None,
                method: str = "auto", time_limit: float | None = None) -> UbResult:
    mdl = model_for(inst, tables)
    if method == "exact" or (method == "auto" and mdl.nvars <= 60):
        return solve_exact_small(mdl)
    return solve_milp(mdl, time_limit)


# -- solutions as assignments ----------------------------------------------------------

def solution_to_assignment(model: UbModel, tables: TransitTables, routes) -> np.ndarray:
    """0/1 vector of a feasible solution: routes ordered by decreasing
    return time, each supplier in the period its service occupies."""
    tr = tables.primitives()
    T = float(tables.inst.grid.T)
    w = model.w
    s = tables.inst.service
    timed = []
    for k, seq in enumerate(routes):
        fail, _kind, _ea, st, ed = tr.forward(list(seq))
        if fail >= 0:
            raise ValueError("route %d is infeasible" % (k + 1))
        timed.append((-ed[-1] if seq else math.inf, k, list(seq), st))
    timed.sort()
    x = np.zeros(model.nvars)
    for kk, (_back, _k, seq, st) in enumerate(timed):
        for q, v in enumerate(seq, start=1):
            p = int(math.floor((st[q] + EPS) / T))
            if s[v] > 0 and (p + 1) * T - st[q] < s[v] - 1e-7:
                p += 1
            p = min(p, w - 1)
            x[model.index(v, kk, p)] = 1.0
    return x


# -- LP text format -------------------------------------------------------------------

def _num(a: float) -> str:
    if a == int(a) and abs(a) < 1e15:
        return str(int(a))
    return repr(float(a))


def _expr(terms, names, per_line=6):
    parts = []
    for k, (j, a) in enumerate(sorted(terms.items())):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        coef = "" if mag == 1 else _num(mag) + " "
        if k == 0:
            parts.append(("- " if a < 0 else "") + coef + names[j])
        else:
            parts.append("%s %s%s" % (sign, coef, names[j]))
    lines = []
    for k in range(0, len(parts), per_line):
        lines.append(" ".join(parts[k:k + per_line]))
    return lines


def emit_lp(model: UbModel, sink=None) -> str:
    """Write the model in LP format. Variables are named ``x_i_k_p``;
    fixed variables get an ``= 0`` bound and rows without terms are left
    out. Returns the text; also writes it
    to ``sink`` (path or text stream) when given."""
    names = [model.var_name(j) for j in range(model.nvars)]
    out = ["\\ %s" % model.name, "Maximize"]
    obj = {j: float(a) for j, a in enumerate(model.obj) if a != 0}
    body = _expr(obj, names)
    out.append(" obj: " + (body[0] if body else "0"))
    out.extend("   " + b for b in body[1:])
    out.append("Subject To")
    for row in model.rows:
        if not row.terms:
            # empty rows hold trivially; the builder never makes rhs < 0
            if row.rhs < 0:
                raise ValueError("row %s can never hold" % row.name)
            continue
        body = _expr(row.terms, names)
        if len(body) == 1:
            out.append(" %s: %s <= %s" % (row.name, body[0], _num(row.rhs)))
        else:
            out.append(" %s: %s" % (row.name, body[0]))
            out.extend("   " + b for b in body[1:-1])
            out.append("   %s <= %s" % (body[-1], _num(row.rhs)))
    fixed = [j for j in range(model.nvars) if model.upper[j] < 0.5]
    if fixed:
        out.append("Bounds")
        out.extend(" %s = 0" % names[j] for j in fixed)
    if model.nvars:
        out.append("Binaries")
        for k in range(0, model.nvars, 8):
            out.append(" " + " ".join(names[k:k + 8]))
    out.append("End")
    text = "\n".join(out) + "\n"
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w") as fh:
                fh.write(text)
    return text


_TERM = re.compile(r"([+-])?\s*((?:\d|\.\d)[0-9.eE+-]*\s+)?(x_\d+_\d+_\d+)")


def read_lp(text: str, n: int, m: int, w: int) -> UbModel:
    """Parse text written by :func:`emit_lp` back into a model."""
    mdl = UbModel(n, m, w, np.zeros(n * m * w), np.ones(n * m * w))
    lines = io.StringIO(text).read().splitlines()
    if lines and lines[0].startswith("\\"):
        mdl.name = lines[0][1:].strip()
    section = None
    stmt = []

    def var(name):
        _, i, k, p = name.split("_")
        return mdl.index(int(i), int(k) - 1, int(p) - 1)

    def terms_of(expr):
        out = {}
        for sign, coef, name in _TERM.findall(expr):
            a = float(coef) if coef.strip() else 1.0
            if sign == "-":
                a = -a
            out[var(name)] = out.get(var(name), 0.0) + a
        return out

    def flush():
        if not stmt:
            return
        s = " ".join(stmt)
        stmt.clear()
        name, _, expr = s.partition(":")
        if section == "obj":
            for j, a in terms_of(expr).items():
                mdl.obj[j] = a
        else:
            lhs, _, rhs = expr.rpartition("<=")
            mdl.rows.append(Row(name.strip(), terms_of(lhs), float(rhs)))

    for raw in lines[1:]:
        line = raw.strip()
        head = line.lower()
        if head in ("maximize", "subject to", "bounds", "binaries", "end"):
            flush()
            section = {"maximize": "obj", "subject to": "rows"}.get(head, head)
            continue
        if section in ("obj", "rows"):
            if raw.startswith(" ") and not raw.startswith("   ") and stmt:
                flush()
            stmt.append(line)
        elif section == "bounds" and line:
            name, _, val = line.partition("=")
            mdl.upper[var(name.strip())] = float(val)
    flush()
    return mdl

"""Instance model, Solomon ingestion, generation and the downtime transform.

Vertex 0 is the depot; suppliers are 1..n. All per-vertex data live in
numpy arrays indexed by vertex id. Time windows bound the service start.

Native files are JSON::

    {"format": "mpisp-instance", "version": 1, "name": "c101_w3_m7",
     "inspectors": 7, "capacity": 200.0,
     "periods": {"count": 3, "length": 412.0},
     "travel": {"metric": "euclidean", "rounding": null},
     "vertices": [[0, 40.0, 50.0, 0.0, 0.0, 0.0, 1236.0], ...],
     "generation": {"source": "c101", "w": 3, "m": 7}}

Each vertex row is ``[id, x, y, workload, service, ready, due]``. A
capacity of ``null`` means unlimited. ``travel.metric`` may also be
``"explicit"`` with a full ``matrix``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT = "mpisp-instance"
VERSION = 1
DEFAULT_CAPACITY = 200.0


class ParseError(ValueError):
    """Malformed input text; the message names the offending line."""


class InstanceError(ValueError):
    """An instance that violates a model precondition."""


@dataclass(frozen=True)
class Supplier:
    id: int
    x: float
    y: float
    workload: float
    service: float
    ready: float
    due: float


@dataclass(frozen=True)
class PeriodGrid:
    w: int
    T: float

    @property
    def horizon(self) -> float:
        return self.w * self.T

    def opening(self, p: int) -> float:
        return (p - 1) * self.T

    def closing(self, p: int) -> float:
        return p * self.T

    def boundaries(self) -> list[tuple[float, float]]:
        return [(self.opening(p), self.closing(p)) for p in range(1, self.w + 1)]


@dataclass
class RawSolomon:
    name: str
    vehicles: int
    capacity: float
    rows: np.ndarray  # (n+1, 7): id, x, y, demand, ready, due, service


@dataclass
class Instance:
    name: str
    x: np.ndarray
    y: np.ndarray
    workload: np.ndarray
    service: np.ndarray
    ready: np.ndarray
    due: np.ndarray
    m: int
    Q: float
    grid: PeriodGrid
    travel: np.ndarray
    rounding: float | None = None
    metric: str = "euclidean"
    generation: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.x) - 1

    @property
    def n1(self) -> int:
        return len(self.x)

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    @property
    def suppliers(self) -> list[Supplier]:
        return [self.supplier(i) for i in range(1, self.n1)]

    def supplier(self, i: int) -> Supplier:
        return Supplier(i, float(self.x[i]), float(self.y[i]),
                        float(self.workload[i]), float(self.service[i]),
                        float(self.ready[i]), float(self.due[i]))

    @property
    def total_workload(self) -> float:
        return float(self.workload[1:].sum())

    def with_inspectors(self, m: int) -> "Instance":
        gen = dict(self.generation, m=m)
        return _replace(self, m=m, generation=gen)

    def with_capacity(self, Q: float) -> "Instance":
        return _replace(self, Q=Q)


def _replace(inst: Instance, **kw) -> Instance:
    data = {k: getattr(inst, k) for k in inst.__dataclass_fields__}
    data.update(kw)
    return Instance(**data)


# -- Solomon -----------------------------------------------------------------

_NUM = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_solomon(text: str) -> RawSolomon:
    """Parse a Solomon VRPTW file (name, VEHICLE block, CUSTOMER table)."""
    lines = text.splitlines()
    name = ""
    vehicles = capacity = None
    rows = []
    state = "name"
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        up = line.upper()
        if state == "name":
            name = line
            state = "head"
            continue
        if up.startswith("VEHICLE"):
            state = "vehicle"
            continue
        if up.startswith("CUSTOMER"):
            state = "customer"
            continue
        if up.startswith("NUMBER") or up.startswith("CUST"):
            continue
        parts = line.split()
        if state == "vehicle":
            if len(parts) != 2 or not all(_NUM.match(p) for p in parts):
                raise ParseError("line %d: expected 'number capacity'" % ln)
            vehicles, capacity = int(float(parts[0])), float(parts[1])
            state = "after-vehicle"
            continue
        if state != "customer":
            raise ParseError("line %d: unexpected content %r" % (ln, line))
        if len(parts) != 7:
            raise ParseError("line %d: expected 7 fields, got %d" % (ln, len(parts)))
        if not all(_NUM.match(p) for p in parts):
            raise ParseError("line %d: non-numeric field" % ln)
        rows.append([float(p) for p in parts])
    if vehicles is None:
        raise ParseError("line %d: missing VEHICLE block" % (len(lines)))
    if not rows:
        raise ParseError("line %d: missing depot row" % (len(lines)))
    arr = np.array(rows, dtype=float)
    if arr[0, 0] != 0:
        raise ParseError("first customer row must be the depot (id 0)")
    return RawSolomon(name=name, vehicles=vehicles, capacity=capacity, rows=arr)


def read_solomon(path) -> RawSolomon:
    return parse_solomon(Path(path).read_text())


def euclidean(x: np.ndarray, y: np.ndarray, rounding: float | None = None) -> np.ndarray:
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    t = np.sqrt(dx * dx + dy * dy)
    if rounding:
        t = np.round(t / rounding) * rounding
    np.fill_diagonal(t, 0.0)
    return t


def generate_mpisp(raw: RawSolomon, w: int, m: int, *, Q: float = DEFAULT_CAPACITY,
                   rounding: float | None = None, name: str | None = None) -> Instance:
    """Split the depot window into ``w`` equal periods; workload = demand."""
    if w < 1 or m < 1:
        raise InstanceError("w and m must be positive")
    r = raw.rows
    e0, l0 = r[0, 4], r[0, 5]
    T = (l0 - e0) / w
    service = r[:, 6].copy()
    if service.max() > T:
        raise InstanceError("period length %g shorter than the longest service %g"
                            % (T, service.max()))
    x, y = r[:, 1].copy(), r[:, 2].copy()
    ready = r[:, 4] - e0
    due = r[:, 5] - e0
    base = raw.name.strip().lower() or "instance"
    return Instance(
        name=name or "%s_w%d_m%d" % (base, w, m),
        x=x, y=y, workload=r[:, 3].copy(), service=service,
        ready=ready, due=due, m=m, Q=Q, grid=PeriodGrid(w, T),
        travel=euclidean(x, y, rounding), rounding=rounding,
        generation={"source": base, "w": w, "m": m},
    )


def truncate(inst: Instance, k: int, name: str | None = None) -> Instance:
    """Keep the depot and the first ``k`` suppliers."""
    keep = slice(0, k + 1)
    return _replace(inst, name=name or "%s_first%d" % (inst.name, k),
                    x=inst.x[keep].copy(), y=inst.y[keep].copy(),
                    workload=inst.workload[keep].copy(),
                    service=inst.service[keep].copy(),
                    ready=inst.ready[keep].copy(), due=inst.due[keep].copy(),
                    travel=inst.travel[keep, keep].copy(),
                    generation=dict(inst.generation, truncate=k))


# -- downtime ----------------------------------------------------------------

def transform_downtime(windows, periods):
    """Map windows given on a timeline with rest gaps onto contiguous periods.

    ``periods`` lists the original ``(start, end)`` working intervals, all of
    the same length. A time inside a period moves left by the downtime that
    precedes it; a window start inside a gap moves to the next opening and a
    window end inside a gap to the previous closing. Returns
    ``(new_windows, flags)`` where ``flags[i]`` is True when window ``i``
    holds no working time at all.
    """
    periods = [(float(a), float(b)) for a, b in periods]
    if not periods:
        raise ValueError("at least one period required")
    T = periods[0][1] - periods[0][0]
    for p, (a, b) in enumerate(periods):
        if abs((b - a) - T) > 1e-9:
            raise ValueError("periods must have equal length")
        if p and a < periods[p - 1][1]:
            raise ValueError("periods must be ordered and non-overlapping")
    shift = []
    acc = periods[0][0]
    for p, (a, b) in enumerate(periods):
        if p:
            acc += a - periods[p - 1][1]
        shift.append(acc)

    def locate(x):
        for p, (a, b) in enumerate(periods):
            if x < a:
                return p, "before"
            if x <= b:
                return p, "inside"
        return len(periods) - 1, "after"

    out, flags = [], []
    for e, l in windows:
        pe, ke = locate(float(e))
        pl, kl = locate(float(l))
        if ke == "inside":
            ne = float(e) - shift[pe]
        elif ke == "before":
            ne = periods[pe][0] - shift[pe]
        else:
            ne = periods[-1][1] - shift[-1]
        if kl == "inside":
            nl = float(l) - shift[pl]
        elif kl == "before":
            nl = periods[pl - 1][1] - shift[pl - 1] if pl else periods[0][0] - shift[0]
        else:
            nl = periods[-1][1] - shift[-1]
        gap_only = ke != "inside" and kl != "inside" and pe == pl
        out.append([ne, nl])
        flags.append(bool(gap_only or ne > nl))
    return out, flags


# -- validation --------------------------------------------------------------

def validate(inst: Instance) -> list[str]:
    """Every invariant violation found; empty when the instance is sound."""
    v = []
    n1 = inst.n1
    arrays = (inst.x, inst.y, inst.workload, inst.service, inst.ready, inst.due)
    if any(len(a) != n1 for a in arrays):
        v.append("per-vertex arrays differ in length")
        return v
    t = inst.travel
    if t.shape != (n1, n1):
        v.append("travel matrix shape %s, expected %s" % (t.shape, (n1, n1)))
        return v
    g = inst.grid
    if g.w < 1 or not g.T > 0:
        v.append("period grid needs w >= 1 and T > 0")
    if inst.m < 1:
        v.append("inspector count must be positive")
    if not inst.Q >= 0:
        v.append("capacity must be nonnegative")
    if inst.workload[0] != 0 or inst.service[0] != 0:
        v.append("depot must have zero workload and service")
    if abs(inst.ready[0]) > 1e-9 or abs(inst.due[0] - g.horizon) > 1e-6 * max(1.0, g.horizon):
        v.append("depot window must equal [0, %g]" % g.horizon)
    for i in range(1, n1):
        if inst.workload[i] < 0:
            v.append("supplier %d: negative workload" % i)
        if inst.service[i] < 0:
            v.append("supplier %d: negative service time" % i)
        if inst.service[i] > g.T + 1e-9:
            v.append("supplier %d: service exceeds period" % i)
        if inst.ready[i] < -1e-9 or inst.due[i] > g.horizon + 1e-6:
            v.append("supplier %d: window outside the horizon" % i)
    if np.any(t < 0):
        v.append("travel matrix has negative entries")
    if np.any(np.abs(np.diag(t)) > 0):
        v.append("travel matrix diagonal not zero")
    if not np.allclose(t, t.T, rtol=0, atol=1e-9):
        v.append("travel matrix not symmetric")
    tol = 1e-9 + (inst.rounding or 0.0)
    tmax = max(1.0, float(np.max(t[np.isfinite(t)], initial=0.0)))
    worst = 0.0
    for k in range(n1):
        worst = max(worst, float(np.max(t - (t[:, k][:, None] + t[k, :][None, :]))))
    if worst > tol * tmax:
        v.append("travel matrix violates the triangle inequality (by %g)" % worst)
    return v


# -- serialization -----------------------------------------------------------

def _num(x):
    x = float(x)
    return None if math.isinf(x) else x


def to_dict(inst: Instance) -> dict:
    travel: dict = {"metric": inst.metric, "rounding": inst.rounding}
    if inst.metric != "euclidean":
        travel["matrix"] = inst.travel.tolist()
    rows = [[i, float(inst.x[i]), float(inst.y[i]), float(inst.workload[i]),
             float(inst.service[i]), float(inst.ready[i]), float(inst.due[i])]
            for i in range(inst.n1)]
    return {
        "format": FORMAT, "version": VERSION, "name": inst.name,
        "inspectors": inst.m, "capacity": _num(inst.Q),
        "periods": {"count": inst.grid.w, "length": inst.grid.T},
        "travel": travel, "vertices": rows, "generation": inst.generation,
    }


def from_dict(doc: dict) -> Instance:
    if doc.get("format") != FORMAT:
        raise InstanceError("not an %s document" % FORMAT)
    if doc.get("version") != VERSION:
        raise InstanceError("unsupported version %r" % doc.get("version"))
    rows = np.array(doc["vertices"], dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 7:
        raise InstanceError("vertices must be rows of 7 numbers")
    if list(rows[:, 0].astype(int)) != list(range(len(rows))):
        raise InstanceError("vertex ids must be 0..n in order")
    x, y = rows[:, 1].copy(), rows[:, 2].copy()
    tr = doc.get("travel", {"metric": "euclidean"})
    rounding = tr.get("rounding")
    metric = tr.get("metric", "euclidean")
    if metric == "euclidean":
        t = euclidean(x, y, rounding)
    elif metric == "explicit":
        t = np.array(tr["matrix"], dtype=float)
    else:
        raise InstanceError("unknown travel metric %r" % metric)
    Q = doc.get("capacity")
    per = doc["periods"]
    return Instance(
        name=doc.get("name", "instance"), x=x, y=y, workload=rows[:, 3].copy(),
        service=rows[:, 4].copy(), ready=rows[:, 5].copy(), due=rows[:, 6].copy(),
        m=int(doc["inspectors"]), Q=math.inf if Q is None else float(Q),
        grid=PeriodGrid(int(per["count"]), float(per["length"])),
        travel=t, rounding=rounding, metric=metric,
        generation=dict(doc.get("generation", {})),
    )


def dumps(inst: Instance) -> str:
    return json.dumps(to_dict(inst), indent=1)


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("invalid JSON: %s" % exc) from exc
    try:
        return from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise InstanceError("missing or malformed field: %s" % exc) from exc


def save(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst))


def load(path) -> Instance:
    return loads(Path(path).read_text())


# -- random instances --------------------------------------------------------

def random_instance(rng: np.random.Generator, n: int, m: int = 1, w: int = 1, *,
                    T: float | None = None, side: float = 100.0,
                    service_max: float | None = None, Q: float | None = None,
                    name: str = "random", window_frac: float = 0.5) -> Instance:
    """Uniform points in a square, Euclidean travel, random windows.

    Period length defaults to a value comparable with typical travel so that
    period boundaries actually matter.
    """
    x = rng.uniform(0, side, n + 1)
    y = rng.uniform(0, side, n + 1)
    t = euclidean(x, y)
    if T is None:
        T = float(rng.uniform(0.3, 1.2) * side)
    H = w * T
    smax = service_max if service_max is not None else 0.3 * T
    service = np.concatenate([[0.0], rng.uniform(0, smax, n)])
    service = np.minimum(service, T)
    ready = np.zeros(n + 1)
    due = np.full(n + 1, H)
    for i in range(1, n + 1):
        width = rng.uniform(0.05, 1.0) * window_frac * H
        a = rng.uniform(0, H - width) if width < H else 0.0
        ready[i], due[i] = a, min(H, a + width)
    workload = np.concatenate([[0.0], rng.integers(1, 31, n).astype(float)])
    if Q is None:
        Q = float(max(workload.max(), rng.uniform(0.3, 0.8) * workload.sum()))
    return Instance(name=name, x=x, y=y, workload=workload, service=service,
                    ready=ready, due=due, m=m, Q=Q, grid=PeriodGrid(w, T),
                    travel=t, generation={"source": "random", "w": w, "m": m})

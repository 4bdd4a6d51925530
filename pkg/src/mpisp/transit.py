"""Period-aware shortest transit times.

Inspectors travel and serve only inside working periods and may rest at any
vertex between periods. The transit time from ``i`` to ``j`` therefore
depends on the departure time: with enough time left in the current period
the direct edge is used; otherwise the inspector reaches a staging vertex
within the remaining time, rests until the next opening and continues.

``base[i, j]`` is the shortest transit when leaving ``i`` at a period
opening. For each ``i`` the vertices reachable within one period are sorted
by travel time (``i`` itself first) and ``prefix_min`` holds, for every
prefix of that order, the best ``base`` value through any of its members, so
a query is one binary search.
"""
from __future__ import annotations

import hashlib
import math
from array import array
from pathlib import Path

import numpy as np

from ._backend import kernel
from .instance import Instance, PeriodGrid

EPS = 1e-9


def ceil_of(grid: PeriodGrid, dt: float) -> float:
    """Closing time of the period containing ``dt`` (half-open on the left;
    time 0 belongs to the first period)."""
    if not -EPS <= dt <= grid.horizon + EPS:
        raise ValueError("time %r outside [0, %g]" % (dt, grid.horizon))
    k = max(0, math.floor((dt - EPS) / grid.T))
    return min(k + 1, grid.w) * grid.T


def earliest_departure(grid: PeriodGrid, service_start: float, s: float) -> float:
    """Departure after a service that may not straddle a period boundary.

    Returns +inf when the service cannot finish inside the horizon.
    """
    c = ceil_of(grid, service_start)
    if c - service_start >= s - EPS:
        ed = service_start + s
    else:
        ed = c + s
    return math.inf if ed > grid.horizon + EPS else ed


def _flat(a: np.ndarray) -> array:
    return array("d", np.ascontiguousarray(a, dtype=float).ravel().tolist())


def compute_base(inst: Instance) -> np.ndarray:
    """Shortest transit from every vertex departing at a period opening."""
    n1 = inst.n1
    b = kernel.build_base(n1, _flat(inst.travel), float(inst.grid.T))
    return np.frombuffer(b, dtype=float).reshape(n1, n1).copy()


def neighbor_order(inst: Instance) -> list[list[int]]:
    """Per vertex: itself, then vertices within T sorted by (travel, id)."""
    n1 = inst.n1
    off, cnt, ids, _ = kernel.build_neighbors(n1, _flat(inst.travel), float(inst.grid.T))
    return [list(ids[off[i]:off[i] + cnt[i]]) for i in range(n1)]


def preprocess_prefix_min(base: np.ndarray, order: list[list[int]]) -> list[np.ndarray]:
    """``out[i][k, j]`` = min over the first k+1 entries u of ``order[i]`` of
    ``base[u, j]``."""
    out = []
    for row in order:
        out.append(np.minimum.accumulate(base[row, :], axis=0))
    return out


class TransitTables:
    """Preprocessed transit tables of one instance (immutable)."""

    def __init__(self, inst: Instance, base, off, cnt, ids, dist, pm):
        self.inst = inst
        self.n1 = inst.n1
        self._t = _flat(inst.travel)
        self._base = base
        self._off, self._cnt, self._ids, self._dist, self._pm = off, cnt, ids, dist, pm
        self._tr = self._make(kernel.Transit)

    @classmethod
    def build(cls, inst: Instance) -> "TransitTables":
        n1 = inst.n1
        t = _flat(inst.travel)
        T = float(inst.grid.T)
        base = kernel.build_base(n1, t, T)
        off, cnt, ids, dist = kernel.build_neighbors(n1, t, T)
        pm = kernel.build_prefix_min(n1, base, off, cnt, ids)
        return cls(inst, base, off, cnt, ids, dist, pm)

    def _args(self):
        inst = self.inst
        return (self.n1, int(inst.grid.w), float(inst.grid.T), self._t, self._base,
                self._off, self._cnt, self._dist, self._pm,
                _flat(inst.workload), _flat(inst.ready), _flat(inst.due),
                _flat(inst.service), float(inst.Q))

    def _make(self, cls, *extra):
        return cls(*self._args(), *extra)

    def engine(self, m: int | None = None, eta: float = 1.0, maximize_f: bool = True,
               backend=None):
        """Fresh solution engine over these tables (all routes empty)."""
        k = backend or kernel
        return k.Engine(*self._args(), int(self.inst.m if m is None else m),
                        float(eta), 1.0 if maximize_f else -1.0)

    def primitives(self, backend=None):
        """Schedule primitives (transit, push, latest arrival) of a backend."""
        if backend is None:
            return self._tr
        return backend.Transit(*self._args())

    # -- tables as arrays ------------------------------------------------------

    @property
    def base(self) -> np.ndarray:
        return np.frombuffer(self._base, dtype=float).reshape(self.n1, self.n1)

    def neighbors(self, i: int) -> list[int]:
        o = self._off[i]
        return list(self._ids[o:o + self._cnt[i]])

    def neighbor_distances(self, i: int) -> list[float]:
        o = self._off[i]
        return list(self._dist[o:o + self._cnt[i]])

    def prefix_min(self, i: int) -> np.ndarray:
        o, c = self._off[i], self._cnt[i]
        pm = np.frombuffer(self._pm, dtype=float)
        return pm[o * self.n1:(o + c) * self.n1].reshape(c, self.n1)

    # -- queries ---------------------------------------------------------------

    def _check(self, dt):
        if not -EPS <= dt <= self.inst.horizon + EPS:
            raise ValueError("time %r outside [0, %g]" % (dt, self.inst.horizon))

    def ceil_of(self, dt: float) -> float:
        return ceil_of(self.inst.grid, dt)

    def query(self, i: int, j: int, dt: float) -> float:
        """Shortest transit from i to j leaving at dt."""
        self._check(dt)
        return self._tr.transit(i, j, dt)

    def latest_departure(self, i: int, j: int, deadline: float) -> float:
        """Latest departure from i reaching j by ``deadline`` (-inf if none)."""
        return self._tr.latest_departure(i, j, deadline)

    def earliest_departure(self, service_start: float, s: float) -> float:
        return earliest_departure(self.inst.grid, service_start, s)

    # -- persistence -------------------------------------------------------------

    def content_hash(self) -> str:
        return instance_hash(self.inst)

    def dump(self, directory) -> Path:
        path = Path(directory) / ("transit-%s.npz" % self.content_hash())
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, base=np.frombuffer(self._base), off=np.frombuffer(self._off, dtype=np.int32),
                 cnt=np.frombuffer(self._cnt, dtype=np.int32),
                 ids=np.frombuffer(self._ids, dtype=np.int32),
                 dist=np.frombuffer(self._dist), pm=np.frombuffer(self._pm))
        return path

    @classmethod
    def load(cls, inst: Instance, directory) -> "TransitTables | None":
        path = Path(directory) / ("transit-%s.npz" % instance_hash(inst))
        if not path.exists():
            return None
        z = np.load(path)
        return cls(inst, array("d", z["base"].tolist()), array("i", z["off"].tolist()),
                   array("i", z["cnt"].tolist()), array("i", z["ids"].tolist()),
                   array("d", z["dist"].tolist()), array("d", z["pm"].tolist()))

    @classmethod
    def cached(cls, inst: Instance, directory=None) -> "TransitTables":
        if directory is None:
            return cls.build(inst)
        tab = cls.load(inst, directory)
        if tab is None:
            tab = cls.build(inst)
            tab.dump(directory)
        return tab


def instance_hash(inst: Instance) -> str:
    """Digest of everything the transit tables depend on."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(inst.travel, dtype=float).tobytes())
    h.update(repr((inst.grid.w, float(inst.grid.T))).encode())
    return h.hexdigest()[:20]


def query_transit(tables: TransitTables, i: int, j: int, dt: float) -> float:
    return tables.query(i, j, dt)


def latest_departure(tables: TransitTables, i: int, j: int, deadline: float) -> float:
    return tables.latest_departure(i, j, deadline)

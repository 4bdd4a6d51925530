# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Hot loops: period-aware transit queries, route scheduling and the
neighbourhood scan used by local search.

This file is valid Python. ``setup.py`` compiles it with Cython into
``mpisp._kernel_c``; when that extension is missing the same code runs
interpreted. All arrays are flat ``array.array`` buffers so that both
builds index them the same way.

Route storage: route ``r`` occupies ``R[r*cap : r*cap + len + 2]``; slot 0
is the depot start, slots ``1..len`` the served suppliers and ``len+1`` the
depot end. EA/ST/ED/LA hold earliest arrival, service start, earliest
departure and latest arrival for the same slots.
"""
import cython
from array import array

INF = cython.declare(cython.double, float("inf"))
EPS = cython.declare(cython.double, 1e-9)
FTOL = cython.declare(cython.double, 1e-6)

# operator codes
TWO_OPT = 0
OR_OPT = 1
TWO_OPT_STAR = 2
RELOCATE = 3
RELOC_IN = 4
RELOC_OUT = 5
EXCHANGE = 6
EXCH_POOL = 7

OPS_ALL = 31  # bit 1 2-opt, 2 Or-opt, 4 2-opt*, 8 relocate, 16 exchange


def _dalloc(n, v=0.0):
    return array("d", [v]) * max(n, 1)


def _ialloc(n, v=0):
    return array("i", [v]) * max(n, 1)


def is_compiled():
    return cython.compiled


@cython.locals(n1=cython.int, src=cython.int, u=cython.int, v=cython.int,
               j=cython.int, it=cython.int, best=cython.double,
               tau=cython.double, c=cython.double, res=cython.double,
               tuj=cython.double, cand=cython.double, x=cython.double,
               k=cython.long)
def build_base(n1, t: cython.double[::1], T: cython.double):
    """Shortest transit from every vertex when leaving at a period opening.

    Label setting over an extension rule that either fits the edge in the
    remaining period time or waits for the next opening.
    """
    base = _dalloc(n1 * n1, INF)
    bv: cython.double[::1] = base
    lab = _dalloc(n1)
    lv: cython.double[::1] = lab
    done = _ialloc(n1)
    dv: cython.int[::1] = done
    for src in range(n1):
        for v in range(n1):
            lv[v] = INF
            dv[v] = 0
        lv[src] = 0.0
        for it in range(n1):
            u = -1
            best = INF
            for v in range(n1):
                if dv[v] == 0 and lv[v] < best:
                    best = lv[v]
                    u = v
            if u < 0:
                break
            dv[u] = 1
            tau = lv[u]
            x = (tau - EPS) / T
            k = 0 if x < 0.0 else cython.cast(cython.long, x)
            c = (k + 1) * T
            res = c - tau
            for j in range(n1):
                if dv[j]:
                    continue
                tuj = t[u * n1 + j]
                if res >= tuj - EPS:
                    cand = tau + tuj
                elif tuj <= T + EPS:
                    cand = c + tuj
                else:
                    continue
                if cand < lv[j]:
                    lv[j] = cand
        for v in range(n1):
            bv[src * n1 + v] = lv[v]
    return base


def build_neighbors(n1, t, T):
    """Per vertex: itself, then vertices within one period length sorted by
    (travel time, id). Returns flat offset/count/id/distance arrays."""
    off = _ialloc(n1)
    cnt = _ialloc(n1)
    ids = array("i")
    dist = array("d")
    for i in range(n1):
        row = sorted((t[i * n1 + u], u) for u in range(n1)
                     if u != i and t[i * n1 + u] <= T)
        off[i] = len(ids)
        cnt[i] = len(row) + 1
        ids.append(i)
        dist.append(0.0)
        for tu, u in row:
            ids.append(u)
            dist.append(tu)
    return off, cnt, ids, dist


@cython.locals(n1=cython.int, i=cython.int, k=cython.int, j=cython.int,
               o=cython.int, w=cython.int, x=cython.double, y=cython.double)
def build_prefix_min(n1, base: cython.double[::1], off: cython.int[::1],
                     cnt: cython.int[::1], ids: cython.int[::1]):
    """pm[(off[i]+k)*n1 + j] = min over the first k+1 neighbours u of i of
    base[u, j]."""
    total: cython.int = len(ids)
    pm = _dalloc(total * n1, INF)
    pv: cython.double[::1] = pm
    for i in range(n1):
        o = off[i]
        for k in range(cnt[i]):
            w = ids[o + k]
            for j in range(n1):
                y = base[w * n1 + j]
                if k > 0:
                    x = pv[(o + k - 1) * n1 + j]
                    if x < y:
                        y = x
                pv[(o + k) * n1 + j] = y
    return pm


@cython.cclass
class Transit:
    """Static instance data plus transit tables and schedule primitives."""

    n1: cython.int
    w: cython.int
    T: cython.double
    H: cython.double
    Q: cython.double
    t: cython.double[::1]
    base: cython.double[::1]
    nb_off: cython.int[::1]
    nb_cnt: cython.int[::1]
    nb_dist: cython.double[::1]
    pm: cython.double[::1]
    d: cython.double[::1]
    e: cython.double[::1]
    l: cython.double[::1]
    s: cython.double[::1]

    def __init__(self, n1, w, T, t, base, nb_off, nb_cnt, nb_dist, pm,
                 d, e, l, s, Q):
        self.n1 = n1
        self.w = w
        self.T = T
        self.H = w * T
        self.Q = Q
        self.t = t
        self.base = base
        self.nb_off = nb_off
        self.nb_cnt = nb_cnt
        self.nb_dist = nb_dist
        self.pm = pm
        self.d = d
        self.e = e
        self.l = l
        self.s = s

    @property
    def horizon(self):
        return self.H

    # -- primitives ------------------------------------------------------

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(x=cython.double, k=cython.long)
    def _ceil(self, dt: cython.double) -> cython.double:
        if dt == INF:
            return INF
        x = (dt - EPS) / self.T
        k = 0 if x < 0.0 else cython.cast(cython.long, x)
        return (k + 1) * self.T

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(n1=cython.int, tij=cython.double, c=cython.double,
                   r=cython.double, lim=cython.double, off=cython.int,
                   lo=cython.int, hi=cython.int, mid=cython.int)
    def _transit(self, i: cython.int, j: cython.int,
                 dt: cython.double) -> cython.double:
        n1 = self.n1
        tij = self.t[i * n1 + j]
        if dt == INF:
            return INF
        c = self._ceil(dt)
        r = c - dt
        if r < 0.0:
            r = 0.0
        if r >= tij - EPS:
            return tij
        off = self.nb_off[i]
        lo = 0
        hi = self.nb_cnt[i] - 1
        lim = r + EPS
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if self.nb_dist[off + mid] <= lim:
                lo = mid
            else:
                hi = mid - 1
        return r + self.pm[(off + lo) * n1 + j]

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(c=cython.double)
    def _push(self, x: cython.double, sv: cython.double) -> cython.double:
        # service start for a supplier ready at x: now if the service fits
        # the current period, else at the next opening
        if x == INF:
            return INF
        c = self._ceil(x)
        if c - x >= sv - EPS:
            return x
        return c if c > x else x

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(c=cython.double)
    def _ymax(self, L: cython.double, sv: cython.double) -> cython.double:
        # latest ready time y with _push(y) <= L
        if L == -INF:
            return -INF
        c = self._ceil(L)
        if c - L >= sv - EPS:
            return L
        if L >= c - EPS:
            return L
        return c - sv

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(n1=cython.int, T=cython.double, tij=cython.double,
                   x=cython.double, p=cython.long, off=cython.int,
                   cnt=cython.int, last=cython.double, b=cython.double,
                   lower=cython.double, need=cython.double, lo=cython.int,
                   hi=cython.int, mid=cython.int, dk=cython.double,
                   dt=cython.double)
    def _ld(self, i: cython.int, j: cython.int,
            D: cython.double) -> cython.double:
        # latest departure from i reaching j by D
        if D < -EPS:
            return -INF
        n1 = self.n1
        T = self.T
        tij = self.t[i * n1 + j]
        if D == INF:
            x = self.w
        else:
            x = (D - EPS) / T
        p = (0 if x < 0.0 else cython.cast(cython.long, x)) + 1
        if p > self.w:
            p = self.w
        off = self.nb_off[i]
        cnt = self.nb_cnt[i]
        last = self.pm[(off + cnt - 1) * n1 + j]
        while p >= 1:
            b = p * T
            lower = b - T
            need = D - b
            if last <= need + EPS:
                lo = 0
                hi = cnt - 1
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if self.pm[(off + mid) * n1 + j] <= need + EPS:
                        hi = mid
                    else:
                        lo = mid + 1
                dk = self.nb_dist[off + lo]
                if dk < tij - EPS:
                    dt = b - dk
                    if dt >= lower and dt + self._transit(i, j, dt) <= D + EPS:
                        return dt
            if tij <= T + EPS:
                dt = b - tij
                if D - tij < dt:
                    dt = D - tij
                if dt >= lower - EPS:
                    if dt < lower:
                        dt = lower
                    if dt + self._transit(i, j, dt) <= D + EPS:
                        return dt
            p -= 1
        return -INF

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(ld=cython.double, L=cython.double, y=cython.double)
    def _lat(self, v: cython.int, nx: cython.int,
             la_nx: cython.double) -> cython.double:
        # latest arrival at v keeping the service window and the next
        # latest arrival
        ld = self._ld(v, nx, la_nx)
        if ld == -INF:
            return -INF
        L = ld - self.s[v]
        if self.l[v] < L:
            L = self.l[v]
        y = self._ymax(L, self.s[v])
        if y < self.e[v] - EPS:
            return -INF
        return y

    @cython.cfunc
    @cython.exceptval(check=False)
    def _clampH(self, x: cython.double) -> cython.double:
        if x <= 0.0:
            return 0.0
        if not (x < self.H):
            return self.H
        return x

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(ea=cython.double, st=cython.double, edu=cython.double,
                   ea_nx=cython.double, ld=cython.double, la_u=cython.double,
                   su=cython.double)
    def _cost(self, u: cython.int, vi: cython.int, dt: cython.double,
              nx: cython.int, la_nx: cython.double) -> cython.double:
        # time-window part of inserting u between vi (leaving at dt) and nx
        su = self.s[u]
        ea = dt + self._transit(vi, u, dt)
        st = ea if ea > self.e[u] else self.e[u]
        st = self._push(st, su)
        edu = st + su
        ea_nx = edu + self._transit(u, nx, edu)
        ld = self._ld(u, nx, la_nx)
        if ld == -INF:
            la_u = -INF
        else:
            la_u = self._ymax(ld - su, su)
        return (self._clampH(st - self.l[u]) + self._clampH(self.e[u] - la_u)
                + self._clampH(ea_nx - la_nx))

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(tot=cython.double)
    def _ml(self, u: cython.int, wl: cython.double) -> cython.double:
        tot = wl + self.d[u]
        if tot <= self.Q + EPS:
            return 0.0
        return self.H * (tot - self.Q) / tot

    # -- Python-facing wrappers -----------------------------------------

    def ceil(self, dt):
        return self._ceil(dt)

    def transit(self, i, j, dt):
        return self._transit(i, j, dt)

    def push(self, x, sv):
        return self._push(x, sv)

    def latest_departure(self, i, j, D):
        return self._ld(i, j, D)

    def latest_arrival(self, v, nx, la_nx):
        return self._lat(v, nx, la_nx)

    def insertion_cost(self, u, vi, dt, nx, la_nx):
        return self._cost(u, vi, dt, nx, la_nx)

    def overload(self, u, wl):
        return self._ml(u, wl)

    @cython.locals(q=cython.int, v=cython.int, prev=cython.int,
                   ed=cython.double, ea=cython.double, st=cython.double)
    def forward(self, seq):
        """Earliest schedule of a supplier sequence.

        Returns ``(fail_pos, kind, ea, st, ed)`` with lists over the slots
        depot, seq..., depot. ``fail_pos`` is -1 when feasible; ``kind`` is
        "window", "capacity" or "horizon". Propagation stops at the first
        violated window.
        """
        eas = [0.0]
        sts = [0.0]
        eds = [0.0]
        prev = 0
        ed = 0.0
        wl = 0.0
        for q in range(len(seq)):
            v = seq[q]
            ea = ed + self._transit(prev, v, ed)
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            eas.append(ea)
            sts.append(st)
            if st > self.l[v] + EPS:
                eds.append(INF)
                return q + 1, "window", eas, sts, eds
            ed = st + self.s[v]
            eds.append(ed)
            wl += self.d[v]
            prev = v
        ea = ed + self._transit(prev, 0, ed)
        eas.append(ea)
        sts.append(ea)
        eds.append(ea)
        if ea > self.H + EPS:
            return len(seq) + 1, "horizon", eas, sts, eds
        if wl > self.Q + EPS:
            return 0, "capacity", eas, sts, eds
        return -1, "", eas, sts, eds

    def backward(self, seq):
        """Latest arrival per slot (depot start holds the latest departure)."""
        n = len(seq)
        la = [0.0] * (n + 2)
        la[n + 1] = self.H
        full = [0] + list(seq) + [0]
        for q in range(n, 0, -1):
            la[q] = self._lat(full[q], full[q + 1], la[q + 1])
        la[0] = self._ld(0, full[1], la[1])
        return la

    @cython.locals(q=cython.int, v=cython.int, prev=cython.int,
                   ed=cython.double, ea=cython.double, st=cython.double,
                   viol=cython.double, wl=cython.double)
    def violations(self, seq):
        """(workload, window violation, feasible) of a possibly infeasible
        sequence. Lateness counts at every service start and at the depot."""
        prev = 0
        ed = 0.0
        viol = 0.0
        wl = 0.0
        for q in range(len(seq)):
            v = seq[q]
            ea = ed + self._transit(prev, v, ed)
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            viol += self._clampH(st - self.l[v])
            ed = st + self.s[v]
            wl += self.d[v]
            prev = v
        ea = ed + self._transit(prev, 0, ed)
        viol += self._clampH(ea - self.H)
        return wl, viol, (viol <= 0.0 and wl <= self.Q + EPS)

    @cython.locals(k=cython.int, v=cython.int, n=cython.int,
                   ea=cython.double, st=cython.double, edv=cython.double,
                   back=cython.double, tr=cython.double)
    def append_costs(self, tail: cython.int, ed: cython.double,
                     wl: cython.double, cands: cython.int[::1],
                     out: cython.double[::1]):
        """Transit from a route tail to each candidate if appending it keeps
        the route feasible, else +inf."""
        n = len(cands)
        for k in range(n):
            v = cands[k]
            if wl + self.d[v] > self.Q + EPS:
                out[k] = INF
                continue
            tr = self._transit(tail, v, ed)
            ea = ed + tr
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            if st > self.l[v] + EPS:
                out[k] = INF
                continue
            edv = st + self.s[v]
            back = edv + self._transit(v, 0, edv)
            if back > self.H + EPS:
                out[k] = INF
                continue
            out[k] = tr

    def departure_after(self, tail, ed, v):
        ea = ed + self._transit(tail, v, ed)
        st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
        return st + self.s[v]


@cython.final
@cython.cclass
class Engine(Transit):
    """Incrementally maintained solution state and neighbourhood scan."""

    m: cython.int
    cap: cython.int
    eta: cython.double
    fsign: cython.double
    R: cython.int[::1]
    LN: cython.int[::1]
    EA: cython.double[::1]
    ST: cython.double[::1]
    ED: cython.double[::1]
    LA: cython.double[::1]
    CW: cython.double[::1]
    WL: cython.double[::1]
    MFT: cython.double[::1]
    WHERE: cython.int[::1]
    POS: cython.int[::1]
    INPOOL: cython.int[::1]
    POOL: cython.int[::1]
    npool: cython.int
    CC: cython.double[::1]
    MV: cython.double[::1]
    P: cython.double
    D: cython.double
    F: cython.double
    TABU: cython.int[::1]
    # scratch for up to two rebuilt routes
    NS: cython.int
    SR: cython.int[::1]
    SL: cython.int[::1]
    SF: cython.int[::1]
    SH: cython.int[::1]
    SSR: cython.int[::1]
    SSG: cython.int[::1]
    SQ: cython.int[::1]
    SEA: cython.double[::1]
    SST: cython.double[::1]
    SED: cython.double[::1]
    SLA: cython.double[::1]
    SRCR: cython.int[::1]
    SRCQ: cython.int[::1]
    SWL: cython.double[::1]
    SMFT: cython.double[::1]
    add_v: cython.int
    rem_u: cython.int
    MVT: cython.double[::1]
    SUCC: cython.int[::1]
    FST: cython.int[::1]
    # candidate store
    CA: cython.int[::1]
    CP: cython.double[::1]
    ncand: cython.int
    ccap: cython.int
    _pthr: cython.double
    _keep_all: cython.bint
    _ca_obj: object
    _cp_obj: object
    evals: cython.long

    def __init__(self, n1, w, T, t, base, nb_off, nb_cnt, nb_dist, pm,
                 d, e, l, s, Q, m, eta=1.0, fsign=1.0):
        Transit.__init__(self, n1, w, T, t, base, nb_off, nb_cnt, nb_dist,
                         pm, d, e, l, s, Q)
        self.m = m
        self.cap = n1 + 2
        self.eta = eta
        self.fsign = fsign
        self._keep_all = False
        cap = self.cap
        self.R = _ialloc(m * cap)
        self.LN = _ialloc(m)
        self.EA = _dalloc(m * cap)
        self.ST = _dalloc(m * cap)
        self.ED = _dalloc(m * cap)
        self.LA = _dalloc(m * cap)
        self.CW = _dalloc(m * cap)
        self.WL = _dalloc(m)
        self.MFT = _dalloc(m)
        self.WHERE = _ialloc(n1, -1)
        self.POS = _ialloc(n1)
        self.INPOOL = _ialloc(n1)
        self.POOL = _ialloc(n1)
        self.npool = 0
        self.CC = _dalloc(n1 * m * cap)
        self.MV = _dalloc(n1 * m)
        self.TABU = _ialloc(n1 * n1)
        self.SR = _ialloc(2)
        self.SL = _ialloc(2)
        self.SF = _ialloc(2)
        self.SH = _ialloc(2)
        self.SSR = _ialloc(2)
        self.SSG = _ialloc(2)
        self.SQ = _ialloc(2 * cap)
        self.SEA = _dalloc(2 * cap)
        self.SST = _dalloc(2 * cap)
        self.SED = _dalloc(2 * cap)
        self.SLA = _dalloc(2 * cap)
        self.SRCR = _ialloc(2 * cap)
        self.SRCQ = _ialloc(2 * cap)
        self.SWL = _dalloc(2)
        self.SMFT = _dalloc(2)
        self.MVT = _dalloc(n1 + 1)
        self.SUCC = _ialloc(n1, -1)
        self.FST = _ialloc(n1)
        self.ccap = 0
        self._grow(1024)
        self.evals = 0
        self.set_solution([[] for _ in range(m)])

    # -- state management ------------------------------------------------

    def _grow(self, need):
        newcap = max(need, 2 * self.ccap)
        ca = _ialloc(5 * newcap)
        cp = _dalloc(newcap)
        for k in range(5 * self.ncand if self.ccap else 0):
            ca[k] = self._ca_obj[k]
        for k in range(self.ncand if self.ccap else 0):
            cp[k] = self._cp_obj[k]
        self._ca_obj = ca
        self._cp_obj = cp
        self.CA = ca
        self.CP = cp
        self.ccap = newcap

    @cython.locals(r=cython.int, q=cython.int, v=cython.int, b=cython.int,
                   L=cython.int, ed=cython.double, ea=cython.double,
                   st=cython.double, wl=cython.double, mft=cython.double)
    def _refresh_route(self, r: cython.int) -> cython.bint:
        # full schedule of stored route r; False if infeasible
        b = r * self.cap
        L = self.LN[r]
        self.R[b] = 0
        self.R[b + L + 1] = 0
        self.EA[b] = 0.0
        self.ST[b] = 0.0
        self.ED[b] = 0.0
        self.CW[b] = 0.0
        ed = 0.0
        wl = 0.0
        ok = True
        for q in range(1, L + 1):
            v = self.R[b + q]
            ea = ed + self._transit(self.R[b + q - 1], v, ed)
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            if st > self.l[v] + EPS:
                ok = False
            self.EA[b + q] = ea
            self.ST[b + q] = st
            ed = st + self.s[v]
            self.ED[b + q] = ed
            wl += self.d[v]
            self.CW[b + q] = wl
            self.WHERE[v] = r
            self.POS[v] = q
        ea = ed + self._transit(self.R[b + L], 0, ed)
        self.EA[b + L + 1] = ea
        self.ST[b + L + 1] = ea
        self.ED[b + L + 1] = ea
        self.CW[b + L + 1] = wl
        if ea > self.H + EPS or wl > self.Q + EPS:
            ok = False
        self.WL[r] = wl
        self.LA[b + L + 1] = self.H
        for q in range(L, 0, -1):
            self.LA[b + q] = self._lat(self.R[b + q], self.R[b + q + 1],
                                       self.LA[b + q + 1])
        self.LA[b] = self._ld(0, self.R[b + 1], self.LA[b + 1])
        mft = -INF
        for q in range(L + 2):
            if self.LA[b + q] - self.EA[b + q] > mft:
                mft = self.LA[b + q] - self.EA[b + q]
        self.MFT[r] = mft
        return ok

    @cython.cfunc
    @cython.locals(b=cython.int, idx=cython.int, q=cython.int,
                   c=cython.double, best=cython.double, ml=cython.double)
    def _row(self, u: cython.int, r: cython.int):
        b = r * self.cap
        idx = (u * self.m + r) * self.cap
        best = INF
        for q in range(self.LN[r] + 1):
            c = self._cost(u, self.R[b + q], self.ED[b + q], self.R[b + q + 1],
                           self.LA[b + q + 1])
            self.CC[idx + q] = c
            if c < best:
                best = c
        ml = self.eta * self._ml(u, self.WL[r])
        self.MV[u * self.m + r] = ml if ml > best else best

    @cython.cfunc
    @cython.locals(k=cython.int, u=cython.int, r=cython.int,
                   best=cython.double, x=cython.double)
    def _recompute_fitness(self):
        self.P = 0.0
        self.F = 0.0
        for r in range(self.m):
            self.P += self.WL[r]
            self.F += self.MFT[r]
        for k in range(self.npool):
            u = self.POOL[k]
            best = INF
            for r in range(self.m):
                x = self.MV[u * self.m + r]
                if x < best:
                    best = x
            self.MVT[k] = best
        self.D = self._dsum(self.npool)

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(gap=cython.int, i=cython.int, j=cython.int,
                   x=cython.double, tot=cython.double)
    def _dsum(self, cnt: cython.int) -> cython.double:
        # sort MVT[0:cnt] ascending (shell sort) and weight by 1/rank
        gap = 1
        while gap < cnt // 3:
            gap = 3 * gap + 1
        while gap >= 1:
            for i in range(gap, cnt):
                x = self.MVT[i]
                j = i
                while j >= gap and self.MVT[j - gap] > x:
                    self.MVT[j] = self.MVT[j - gap]
                    j -= gap
                self.MVT[j] = x
            gap = gap // 3
        tot = 0.0
        for i in range(cnt):
            tot += self.MVT[i] / (i + 1)
        return tot

    def set_solution(self, routes):
        """Load routes (lists of supplier ids); every other supplier goes to
        the pool. Raises ValueError on an infeasible or malformed input."""
        if len(routes) != self.m:
            raise ValueError("expected %d routes, got %d" % (self.m, len(routes)))
        seen = set()
        for v in range(self.n1):
            self.WHERE[v] = -1
            self.INPOOL[v] = 0
        for r, seq in enumerate(routes):
            if len(seq) > self.n1 - 1:
                raise ValueError("route %d too long" % r)
            for q, v in enumerate(seq):
                if not 1 <= v < self.n1 or v in seen:
                    raise ValueError("bad or repeated supplier %r" % (v,))
                seen.add(v)
                self.R[r * self.cap + q + 1] = v
            self.LN[r] = len(seq)
        for r in range(self.m):
            if not self._refresh_route(r):
                raise ValueError("route %d is infeasible" % r)
        self.npool = 0
        for v in range(1, self.n1):
            if v not in seen:
                self.POOL[self.npool] = v
                self.npool += 1
                self.INPOOL[v] = 1
        for k in range(self.npool):
            for r in range(self.m):
                self._row(self.POOL[k], r)
        self._recompute_fitness()

    def routes(self):
        return [[self.R[r * self.cap + q] for q in range(1, self.LN[r] + 1)]
                for r in range(self.m)]

    def pool(self):
        return [self.POOL[k] for k in range(self.npool)]

    def fitness(self):
        return (self.P, self.D, self.F)

    def route_times(self, r):
        b = r * self.cap
        n = self.LN[r] + 2
        return ([self.EA[b + q] for q in range(n)],
                [self.ST[b + q] for q in range(n)],
                [self.ED[b + q] for q in range(n)],
                [self.LA[b + q] for q in range(n)])

    def route_mft(self, r):
        return self.MFT[r]

    def mv(self, u, r):
        return self.MV[u * self.m + r]

    def cost_row(self, u, r):
        idx = (u * self.m + r) * self.cap
        return [self.CC[idx + q] for q in range(self.LN[r] + 1)]

    def reset_tabu(self):
        for k in range(self.n1 * self.n1):
            self.TABU[k] = 0

    def tabu_expiry(self, a, b):
        return self.TABU[a * self.n1 + b]

    @property
    def evaluations(self):
        return self.evals

    # -- candidate construction -------------------------------------------

    @cython.cfunc
    @cython.locals(x=cython.int, b=cython.int)
    def _seg(self, k: cython.int, q: cython.int, r: cython.int,
             a: cython.int, z: cython.int, step: cython.int) -> cython.int:
        b = r * self.cap
        if step > 0:
            x = a
            while x <= z:
                self.SQ[k * self.cap + q] = self.R[b + x]
                q += 1
                x += 1
        else:
            x = a
            while x >= z:
                self.SQ[k * self.cap + q] = self.R[b + x]
                q += 1
                x -= 1
        return q

    @cython.cfunc
    @cython.locals(q=cython.int, L=cython.int)
    def _slot(self, k: cython.int, r: cython.int, q: cython.int,
              f: cython.int, h: cython.int, sr: cython.int, sg: cython.int):
        # finish slot k after q-1 positions were written
        L = q - 1
        self.SQ[k * self.cap] = 0
        self.SQ[k * self.cap + L + 1] = 0
        self.SL[k] = L
        self.SR[k] = r
        self.SF[k] = f
        self.SH[k] = h
        self.SSR[k] = sr
        self.SSG[k] = sg

    @cython.cfunc
    @cython.locals(q=cython.int, L=cython.int, L2=cython.int, v=cython.int,
                   cb=cython.int, k=cython.int, wl=cython.double)
    def _build(self, op: cython.int, a: cython.int, b: cython.int,
               c: cython.int, dd: cython.int):
        cb = self.cap
        self.add_v = -1
        self.rem_u = -1
        self.NS = 1
        if op == TWO_OPT:  # (r, i, j)
            L = self.LN[a]
            q = self._seg(0, 1, a, 1, b, 1)
            q = self._seg(0, q, a, c, b + 1, -1)
            q = self._seg(0, q, a, c + 1, L, 1)
            self._slot(0, a, q, b + 1, c + 1, a, c + 1)
        elif op == OR_OPT:  # (r, a, j)
            L = self.LN[a]
            if c > b + 1:
                q = self._seg(0, 1, a, 1, b - 1, 1)
                q = self._seg(0, q, a, b + 2, c, 1)
                q = self._seg(0, q, a, b, b + 1, 1)
                q = self._seg(0, q, a, c + 1, L, 1)
                self._slot(0, a, q, b, c + 1, a, c + 1)
            else:
                q = self._seg(0, 1, a, 1, c, 1)
                q = self._seg(0, q, a, b, b + 1, 1)
                q = self._seg(0, q, a, c + 1, b - 1, 1)
                q = self._seg(0, q, a, b + 2, L, 1)
                self._slot(0, a, q, c + 1, b + 2, a, b + 2)
        elif op == TWO_OPT_STAR:  # (r1, i, r2, j)
            self.NS = 2
            q = self._seg(0, 1, a, 1, b, 1)
            q = self._seg(0, q, c, dd + 1, self.LN[c], 1)
            self._slot(0, a, q, b + 1, b + 1, c, dd + 1)
            q = self._seg(1, 1, c, 1, dd, 1)
            q = self._seg(1, q, a, b + 1, self.LN[a], 1)
            self._slot(1, c, q, dd + 1, dd + 1, a, b + 1)
        elif op == RELOCATE:  # (r1, pos, r2, j)
            v = self.R[a * cb + b]
            L = self.LN[a]
            if a == c:
                if dd > b:
                    q = self._seg(0, 1, a, 1, b - 1, 1)
                    q = self._seg(0, q, a, b + 1, dd, 1)
                    self.SQ[q] = v
                    q = self._seg(0, q + 1, a, dd + 1, L, 1)
                    self._slot(0, a, q, b, dd + 1, a, dd + 1)
                else:
                    q = self._seg(0, 1, a, 1, dd, 1)
                    self.SQ[q] = v
                    q = self._seg(0, q + 1, a, dd + 1, b - 1, 1)
                    q = self._seg(0, q, a, b + 1, L, 1)
                    self._slot(0, a, q, dd + 1, b + 1, a, b + 1)
            else:
                self.NS = 2
                q = self._seg(0, 1, a, 1, b - 1, 1)
                q = self._seg(0, q, a, b + 1, L, 1)
                self._slot(0, a, q, b, b, a, b + 1)
                q = self._seg(1, 1, c, 1, dd, 1)
                self.SQ[cb + q] = v
                q = self._seg(1, q + 1, c, dd + 1, self.LN[c], 1)
                self._slot(1, c, q, dd + 1, dd + 2, c, dd + 1)
        elif op == RELOC_IN:  # (u, r, j)
            q = self._seg(0, 1, b, 1, c, 1)
            self.SQ[q] = a
            q = self._seg(0, q + 1, b, c + 1, self.LN[b], 1)
            self._slot(0, b, q, c + 1, c + 2, b, c + 1)
            self.rem_u = a
        elif op == RELOC_OUT:  # (r, pos)
            self.add_v = self.R[a * cb + b]
            q = self._seg(0, 1, a, 1, b - 1, 1)
            q = self._seg(0, q, a, b + 1, self.LN[a], 1)
            self._slot(0, a, q, b, b, a, b + 1)
        elif op == EXCHANGE:  # (r1, p1, r2, p2)
            if a == c:
                q = self._seg(0, 1, a, 1, self.LN[a], 1)
                self.SQ[b] = self.R[a * cb + dd]
                self.SQ[dd] = self.R[a * cb + b]
                self._slot(0, a, q, b, dd + 1, a, dd + 1)
            else:
                self.NS = 2
                q = self._seg(0, 1, a, 1, self.LN[a], 1)
                self.SQ[b] = self.R[c * cb + dd]
                self._slot(0, a, q, b, b + 1, a, b + 1)
                q = self._seg(1, 1, c, 1, self.LN[c], 1)
                self.SQ[cb + dd] = self.R[a * cb + b]
                self._slot(1, c, q, dd, dd + 1, c, dd + 1)
        else:  # EXCH_POOL (r, pos, u)
            self.add_v = self.R[a * cb + b]
            q = self._seg(0, 1, a, 1, self.LN[a], 1)
            self.SQ[b] = c
            self._slot(0, a, q, b, b + 1, a, b + 1)
            self.rem_u = c
        for k in range(self.NS):
            wl = 0.0
            for q in range(1, self.SL[k] + 1):
                wl += self.d[self.SQ[k * cb + q]]
            self.SWL[k] = wl

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(base=cython.int, r0=cython.int, L=cython.int,
                   f=cython.int, h=cython.int, q=cython.int, v=cython.int,
                   prev=cython.int, ed=cython.double, ea=cython.double,
                   st=cython.double)
    def _feas(self, k: cython.int) -> cython.bint:
        # forward check with early exit once the untouched suffix is reached
        if self.SWL[k] > self.Q + EPS:
            return False
        base = k * self.cap
        r0 = self.SR[k]
        L = self.SL[k]
        f = self.SF[k]
        h = self.SH[k]
        prev = self.SQ[base + f - 1]
        ed = self.ED[r0 * self.cap + f - 1]
        q = f
        while q <= L + 1:
            v = self.SQ[base + q]
            ea = ed + self._transit(prev, v, ed)
            if q >= h:
                return ea <= self.LA[self.SSR[k] * self.cap + self.SSG[k]
                                     + q - h] + EPS
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            if st > self.l[v] + EPS:
                return False
            ed = st + self.s[v]
            prev = v
            q += 1
        return False

    @cython.cfunc
    @cython.locals(base=cython.int, ob=cython.int, L=cython.int,
                   f=cython.int, h=cython.int, q=cython.int, v=cython.int,
                   prev=cython.int, ed=cython.double, ea=cython.double,
                   st=cython.double, mft=cython.double, sb=cython.int)
    def _sched(self, k: cython.int):
        base = k * self.cap
        ob = self.SR[k] * self.cap
        L = self.SL[k]
        f = self.SF[k]
        h = self.SH[k]
        for q in range(f):
            self.SEA[base + q] = self.EA[ob + q]
            self.SST[base + q] = self.ST[ob + q]
            self.SED[base + q] = self.ED[ob + q]
        ed = self.SED[base + f - 1]
        prev = self.SQ[base + f - 1]
        for q in range(f, L + 1):
            v = self.SQ[base + q]
            ea = ed + self._transit(prev, v, ed)
            st = self._push(ea if ea > self.e[v] else self.e[v], self.s[v])
            self.SEA[base + q] = ea
            self.SST[base + q] = st
            ed = st + self.s[v]
            self.SED[base + q] = ed
            prev = v
        if f <= L + 1:
            ea = ed + self._transit(prev, 0, ed)
            self.SEA[base + L + 1] = ea
            self.SST[base + L + 1] = ea
            self.SED[base + L + 1] = ea
        sb = self.SSR[k] * self.cap + self.SSG[k]
        for q in range(h, L + 2):
            self.SLA[base + q] = self.LA[sb + q - h]
        for q in range(h - 1, 0, -1):
            self.SLA[base + q] = self._lat(self.SQ[base + q],
                                           self.SQ[base + q + 1],
                                           self.SLA[base + q + 1])
        self.SLA[base] = self._ld(0, self.SQ[base + 1], self.SLA[base + 1])
        mft = -INF
        for q in range(L + 2):
            if self.SLA[base + q] - self.SEA[base + q] > mft:
                mft = self.SLA[base + q] - self.SEA[base + q]
        self.SMFT[k] = mft
        self.SRCR[base] = self.SR[k]
        self.SRCQ[base] = 0
        for q in range(1, L + 1):
            v = self.SQ[base + q]
            self.SRCR[base + q] = self.WHERE[v]
            self.SRCQ[base + q] = self.POS[v]

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(base=cython.int, L=cython.int, q=cython.int,
                   sr=cython.int, sq=cython.int, c=cython.double,
                   best=cython.double, ml=cython.double, cb=cython.int)
    def _mv_slot(self, u: cython.int, k: cython.int, reuse: cython.bint,
                 bound: cython.double) -> cython.double:
        ml = self.eta * self._ml(u, self.SWL[k])
        if ml >= bound:
            return ml
        cb = self.cap
        base = k * cb
        L = self.SL[k]
        best = INF
        for q in range(L + 1):
            sr = self.SRCR[base + q] if reuse else -1
            if sr >= 0:
                sq = self.SRCQ[base + q]
                if (self.SED[base + q] == self.ED[sr * cb + sq]
                        and self.SQ[base + q + 1] == self.R[sr * cb + sq + 1]
                        and self.SLA[base + q + 1] == self.LA[sr * cb + sq + 1]):
                    c = self.CC[(u * self.m + sr) * cb + sq]
                else:
                    sr = -1
            if sr < 0:
                c = self._cost(u, self.SQ[base + q], self.SED[base + q],
                               self.SQ[base + q + 1], self.SLA[base + q + 1])
                self.evals += 1
            if c < best:
                best = c
                if best <= ml:
                    break
        return ml if ml > best else best

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(b=cython.int, q=cython.int, c=cython.double,
                   best=cython.double, ml=cython.double)
    def _mv_cur(self, u: cython.int, r: cython.int,
                bound: cython.double) -> cython.double:
        ml = self.eta * self._ml(u, self.WL[r])
        if ml >= bound:
            return ml
        b = r * self.cap
        best = INF
        for q in range(self.LN[r] + 1):
            c = self._cost(u, self.R[b + q], self.ED[b + q], self.R[b + q + 1],
                           self.LA[b + q + 1])
            self.evals += 1
            if c < best:
                best = c
                if best <= ml:
                    break
        return ml if ml > best else best

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(r=cython.int, k=cython.int, x=cython.double)
    def _new_P(self) -> cython.double:
        x = 0.0
        for r in range(self.m):
            if r == self.SR[0]:
                x += self.SWL[0]
            elif self.NS == 2 and r == self.SR[1]:
                x += self.SWL[1]
            else:
                x += self.WL[r]
        return x

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(r=cython.int, x=cython.double)
    def _new_F(self) -> cython.double:
        x = 0.0
        for r in range(self.m):
            if r == self.SR[0]:
                x += self.SMFT[0]
            elif self.NS == 2 and r == self.SR[1]:
                x += self.SMFT[1]
            else:
                x += self.MFT[r]
        return x

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(cnt=cython.int, i=cython.int, u=cython.int,
                   r=cython.int, k=cython.int, best=cython.double,
                   x=cython.double, r0=cython.int, r1=cython.int)
    def _new_D(self) -> cython.double:
        r0 = self.SR[0]
        r1 = self.SR[1] if self.NS == 2 else -1
        cnt = 0
        for i in range(self.npool):
            u = self.POOL[i]
            if u == self.rem_u:
                continue
            best = INF
            for r in range(self.m):
                if r != r0 and r != r1:
                    x = self.MV[u * self.m + r]
                    if x < best:
                        best = x
            if best > 0.0:
                for k in range(self.NS):
                    x = self._mv_slot(u, k, True, best)
                    if x < best:
                        best = x
            self.MVT[cnt] = best
            cnt += 1
        u = self.add_v
        if u >= 0:
            best = INF
            for r in range(self.m):
                if r != r0 and r != r1 and best > 0.0:
                    x = self._mv_cur(u, r, best)
                    if x < best:
                        best = x
            for k in range(self.NS):
                if best > 0.0:
                    x = self._mv_slot(u, k, False, best)
                    if x < best:
                        best = x
            # keep the pool order: insert u's value at the end, sorting
            # makes the position irrelevant
            self.MVT[cnt] = best
            cnt += 1
        return self._dsum(cnt)

    @cython.cfunc
    @cython.exceptval(check=False)
    def _better(self, P1: cython.double, D1: cython.double, F1: cython.double,
                P2: cython.double, D2: cython.double,
                F2: cython.double) -> cython.bint:
        if P1 > P2 + FTOL:
            return True
        if P1 < P2 - FTOL:
            return False
        if D1 < D2 - FTOL:
            return True
        if D1 > D2 + FTOL:
            return False
        return self.fsign * F1 > self.fsign * F2 + FTOL

    @cython.cfunc
    @cython.locals(k=cython.int, q=cython.int, base=cython.int,
                   L=cython.int)
    def _mark_new(self, on: cython.bint):
        for k in range(self.NS):
            base = k * self.cap
            L = self.SL[k]
            if L > 0:
                self.FST[self.SQ[base + 1]] = 1 if on else 0
            for q in range(1, L + 1):
                self.SUCC[self.SQ[base + q]] = self.SQ[base + q + 1] if on else -1

    @cython.cfunc
    @cython.exceptval(check=False)
    @cython.locals(k=cython.int, q=cython.int, b=cython.int, r=cython.int,
                   x=cython.int, y=cython.int, hit=cython.bint)
    def _tabu_hit(self, it: cython.int) -> cython.bint:
        # would the built move remove an edge that is still tabu?
        hit = False
        self._mark_new(True)
        for k in range(self.NS):
            r = self.SR[k]
            b = r * self.cap
            for q in range(self.LN[r] + 1):
                x = self.R[b + q]
                y = self.R[b + q + 1]
                if x == 0 and y == 0:
                    continue
                if self.TABU[x * self.n1 + y] > it:
                    if x == 0:
                        if self.FST[y] == 0:
                            hit = True
                    elif self.SUCC[x] != y:
                        hit = True
                if hit:
                    break
            if hit:
                break
        self._mark_new(False)
        return hit

    def _edge_diff(self):
        # (removed, created) directed edges of the built move
        old = set()
        new = set()
        for k in range(self.NS):
            r = self.SR[k]
            b = r * self.cap
            for q in range(self.LN[r] + 1):
                if self.LN[r] > 0:
                    old.add((self.R[b + q], self.R[b + q + 1]))
            base = k * self.cap
            if self.SL[k] > 0:
                for q in range(self.SL[k] + 1):
                    new.add((self.SQ[base + q], self.SQ[base + q + 1]))
        return sorted(old - new), sorted(new - old)

    # -- scan and apply ----------------------------------------------------

    @cython.cfunc
    @cython.locals(k=cython.int, Pn=cython.double, j=cython.int)
    def _consider(self, op: cython.int, a: cython.int, b: cython.int,
                  c: cython.int, dd: cython.int, Papprox: cython.double,
                  it: cython.int, use_tabu: cython.bint, aP: cython.double):
        if Papprox < self._pthr - FTOL:
            return
        self._build(op, a, b, c, dd)
        for k in range(self.NS):
            if not self._feas(k):
                return
        Pn = self._new_P()
        if self.ncand >= self.ccap:
            self._grow(self.ncand + 1)
        j = 5 * self.ncand
        self.CA[j] = op
        self.CA[j + 1] = a
        self.CA[j + 2] = b
        self.CA[j + 3] = c
        self.CA[j + 4] = dd
        self.CP[self.ncand] = Pn
        self.ncand += 1
        if Pn > self._pthr + FTOL and not self._keep_all:
            if (not use_tabu) or Pn > aP + FTOL or not self._tabu_hit(it):
                self._pthr = Pn

    @cython.cfunc
    @cython.locals(m=cython.int, cb=cython.int, P=cython.double,
                   r=cython.int, r1=cython.int, r2=cython.int, L=cython.int,
                   L1=cython.int, L2=cython.int, i=cython.int, j=cython.int,
                   a=cython.int, b=cython.int, v=cython.int, u=cython.int,
                   x=cython.int, fe=cython.int, Q=cython.double,
                   w1=cython.double, w2=cython.double)
    def _enumerate(self, it: cython.int, use_tabu: cython.bint,
                   aP: cython.double, mask: cython.int):
        m = self.m
        cb = self.cap
        P = self.P
        Q = self.Q + FTOL
        # only the first empty route is a target: empty routes are
        # interchangeable and ties keep the first candidate anyway
        fe = -1
        for r in range(m):
            if self.LN[r] == 0:
                fe = r
                break
        if mask & 1:
            for r in range(m):
                L = self.LN[r]
                for i in range(L - 1):
                    for j in range(i + 2, L + 1):
                        self._consider(TWO_OPT, r, i, j, 0, P, it, use_tabu, aP)
        if mask & 2:
            for r in range(m):
                L = self.LN[r]
                for a in range(1, L):
                    for j in range(L + 1):
                        if j >= a - 1 and j <= a + 1:
                            continue
                        self._consider(OR_OPT, r, a, j, 0, P, it, use_tabu, aP)
        if mask & 4:
            for r1 in range(m):
                L1 = self.LN[r1]
                if L1 == 0 and r1 != fe:
                    continue
                for r2 in range(r1 + 1, m):
                    L2 = self.LN[r2]
                    if L2 == 0 and r2 != fe:
                        continue
                    for i in range(L1 + 1):
                        for j in range(L2 + 1):
                            if (i == L1 and j == L2) or (i == 0 and j == 0):
                                continue
                            w1 = (self.CW[r1 * cb + i] + self.WL[r2]
                                  - self.CW[r2 * cb + j])
                            w2 = (self.CW[r2 * cb + j] + self.WL[r1]
                                  - self.CW[r1 * cb + i])
                            if w1 > Q or w2 > Q:
                                continue
                            self._consider(TWO_OPT_STAR, r1, i, r2, j, P, it,
                                           use_tabu, aP)
        if mask & 8:
            for r1 in range(m):
                L1 = self.LN[r1]
                for a in range(1, L1 + 1):
                    v = self.R[r1 * cb + a]
                    for j in range(L1 + 1):
                        if j == a or j == a - 1:
                            continue
                        self._consider(RELOCATE, r1, a, r1, j, P, it,
                                       use_tabu, aP)
                    for r2 in range(m):
                        if r2 == r1 or self.WL[r2] + self.d[v] > Q:
                            continue
                        L2 = self.LN[r2]
                        if L2 == 0 and r2 != fe:
                            continue
                        for j in range(L2 + 1):
                            self._consider(RELOCATE, r1, a, r2, j, P, it,
                                           use_tabu, aP)
            for x in range(self.npool):
                u = self.POOL[x]
                for r in range(m):
                    if self.WL[r] + self.d[u] > Q:
                        continue
                    L = self.LN[r]
                    if L == 0 and r != fe:
                        continue
                    for j in range(L + 1):
                        self._consider(RELOC_IN, u, r, j, 0, P + self.d[u], it,
                                       use_tabu, aP)
            for r in range(m):
                for a in range(1, self.LN[r] + 1):
                    v = self.R[r * cb + a]
                    self._consider(RELOC_OUT, r, a, 0, 0, P - self.d[v], it,
                                   use_tabu, aP)
        if mask & 16:
            for r in range(m):
                L = self.LN[r]
                for a in range(1, L + 1):
                    for b in range(a + 1, L + 1):
                        self._consider(EXCHANGE, r, a, r, b, P, it, use_tabu, aP)
            for r1 in range(m):
                L1 = self.LN[r1]
                for r2 in range(r1 + 1, m):
                    L2 = self.LN[r2]
                    for a in range(1, L1 + 1):
                        v = self.R[r1 * cb + a]
                        for b in range(1, L2 + 1):
                            u = self.R[r2 * cb + b]
                            if (self.WL[r1] - self.d[v] + self.d[u] > Q
                                    or self.WL[r2] - self.d[u] + self.d[v] > Q):
                                continue
                            self._consider(EXCHANGE, r1, a, r2, b, P, it,
                                           use_tabu, aP)
            for r in range(m):
                for a in range(1, self.LN[r] + 1):
                    v = self.R[r * cb + a]
                    for x in range(self.npool):
                        u = self.POOL[x]
                        if self.WL[r] - self.d[v] + self.d[u] > Q:
                            continue
                        self._consider(EXCH_POOL, r, a, u, 0,
                                       P - self.d[v] + self.d[u], it,
                                       use_tabu, aP)

    @cython.locals(ci=cython.int, k=cython.int, j=cython.int,
                   Pn=cython.double, Dn=cython.double, Fn=cython.double,
                   bP=cython.double, bD=cython.double, bF=cython.double,
                   found=cython.bint, bi=cython.int)
    def scan(self, it: cython.int, use_tabu: cython.bint, aP: cython.double,
             aD: cython.double, aF: cython.double, mask: cython.int = OPS_ALL):
        """Best allowable move of the current state.

        A move whose removed edges include a tabu one is allowed only when it
        beats ``(aP, aD, aF)``. Returns ``(op, a, b, c, dd, P, D, F)`` or
        None when no feasible allowable move exists.
        """
        self.ncand = 0
        self._pthr = -INF
        self._enumerate(it, use_tabu, aP, mask)
        found = False
        bi = -1
        bP = bD = bF = 0.0
        for ci in range(self.ncand):
            if self.CP[ci] < self._pthr - FTOL:
                continue
            if found and self.CP[ci] < bP - FTOL:
                continue
            j = 5 * ci
            self._build(self.CA[j], self.CA[j + 1], self.CA[j + 2],
                        self.CA[j + 3], self.CA[j + 4])
            for k in range(self.NS):
                self._sched(k)
            Pn = self._new_P()
            Dn = self._new_D()
            Fn = self._new_F()
            if found and not self._better(Pn, Dn, Fn, bP, bD, bF):
                continue
            if (use_tabu and self._tabu_hit(it)
                    and not self._better(Pn, Dn, Fn, aP, aD, aF)):
                continue
            found = True
            bi = ci
            bP = Pn
            bD = Dn
            bF = Fn
        if not found:
            return None
        j = 5 * bi
        return (self.CA[j], self.CA[j + 1], self.CA[j + 2], self.CA[j + 3],
                self.CA[j + 4], bP, bD, bF)

    def candidates(self, mask=OPS_ALL):
        """All feasible moves of the current state (no tabu filtering)."""
        self.ncand = 0
        self._pthr = -INF
        self._keep_all = True
        try:
            self._enumerate(0, False, INF, mask)
        finally:
            self._keep_all = False
        return [tuple(self.CA[5 * i + x] for x in range(5))
                for i in range(self.ncand)]

    def evaluate(self, op, a, b, c, dd):
        """Fitness the state would have after the move, or None if the move
        is infeasible."""
        self._build(op, a, b, c, dd)
        for k in range(self.NS):
            if not self._feas(k):
                return None
        for k in range(self.NS):
            self._sched(k)
        return (self._new_P(), self._new_D(), self._new_F())

    def is_tabu(self, op, a, b, c, dd, it):
        self._build(op, a, b, c, dd)
        return self._tabu_hit(it)

    @cython.locals(k=cython.int, r=cython.int, q=cython.int, L=cython.int,
                   x=cython.int, u=cython.int, v=cython.int)
    def apply(self, op, a, b, c, dd, it=0, tenure=0):
        """Apply a move. Returns (removed edges, created edges, was_tabu);
        created edges become tabu for ``tenure`` iterations."""
        self._build(op, a, b, c, dd)
        for k in range(self.NS):
            if not self._feas(k):
                raise ValueError("infeasible move %r" % ((op, a, b, c, dd),))
        hit = self._tabu_hit(it)
        removed, created = self._edge_diff()
        for k in range(self.NS):
            r = self.SR[k]
            L = self.SL[k]
            for q in range(L + 2):
                self.R[r * self.cap + q] = self.SQ[k * self.cap + q]
            self.LN[r] = L
        for k in range(self.NS):
            self._refresh_route(self.SR[k])
        u = self.rem_u
        if u >= 0:
            x = 0
            for q in range(self.npool):
                if self.POOL[q] != u:
                    self.POOL[x] = self.POOL[q]
                    x += 1
            self.npool = x
            self.INPOOL[u] = 0
        v = self.add_v
        if v >= 0:
            q = self.npool
            while q > 0 and self.POOL[q - 1] > v:
                self.POOL[q] = self.POOL[q - 1]
                q -= 1
            self.POOL[q] = v
            self.npool += 1
            self.INPOOL[v] = 1
            self.WHERE[v] = -1
        for q in range(self.npool):
            x = self.POOL[q]
            if x == v:
                for r in range(self.m):
                    self._row(x, r)
            else:
                for k in range(self.NS):
                    self._row(x, self.SR[k])
        self._recompute_fitness()
        if tenure > 0:
            for (x, u) in created:
                self.TABU[x * self.n1 + u] = it + 1 + tenure
        return removed, created, hit

    @cython.locals(r=cython.int, q=cython.int, b=cython.int, vi=cython.int,
                   nx=cython.int, dt=cython.double, ea=cython.double,
                   st=cython.double, edu=cython.double, c=cython.double,
                   lnx=cython.double, best=cython.double, br=cython.int,
                   bq=cython.int)
    def epa_position(self, u: cython.int, b1: cython.double,
                     b2: cython.double, maximize: cython.bint):
        """Insertion slot of pool supplier u by the weighted lateness score;
        returns (route, position after which u goes)."""
        best = INF
        br = -1
        bq = -1
        for r in range(self.m):
            b = r * self.cap
            for q in range(self.LN[r] + 1):
                vi = self.R[b + q]
                nx = self.R[b + q + 1]
                dt = self.ED[b + q]
                ea = dt + self._transit(vi, u, dt)
                st = self._push(ea if ea > self.e[u] else self.e[u], self.s[u])
                edu = st + self.s[u]
                ea = edu + self._transit(u, nx, edu)
                if nx == 0:
                    lnx = self.H
                else:
                    ea = self._push(ea if ea > self.e[nx] else self.e[nx],
                                    self.s[nx])
                    lnx = self.l[nx]
                c = b1 * self.d[u] - b2 * (self._clampH(st - self.l[u])
                                           + self._clampH(ea - lnx))
                if maximize:
                    c = -c
                if br < 0 or c < best:
                    best = c
                    br = r
                    bq = q
        return br, bq

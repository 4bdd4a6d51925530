import math
import random

import numpy as np
import pytest

from conftest import random_case
from mpisp.instance import Instance, PeriodGrid, euclidean
from mpisp.transit import (TransitTables, ceil_of, compute_base, earliest_departure,
                           latest_departure, neighbor_order, preprocess_prefix_min,
                           query_transit)
from oracles import expanded_transit, latest_departure_scan, prefix_min_naive

G = PeriodGrid(5, 20.0)


def _line(t, T=20.0, w=5):
    """Instance on an explicit symmetric travel matrix."""
    t = np.asarray(t, dtype=float)
    n1 = len(t)
    z = np.zeros(n1)
    H = w * T
    return Instance("line", z, z, np.r_[0, np.ones(n1 - 1)], z.copy(), z.copy(),
                    np.full(n1, H), 1, 1e9, PeriodGrid(w, T), t, metric="explicit")


@pytest.mark.parametrize("dt,want", [(7, 20), (20, 20), (20.1, 40), (0, 20), (100, 100),
                                     (40, 40), (40.0000001, 60)])
def test_ceil(dt, want):
    assert ceil_of(G, dt) == want


def test_ceil_range():
    with pytest.raises(ValueError):
        ceil_of(G, -1)
    with pytest.raises(ValueError):
        ceil_of(G, 100.5)


def test_earliest_departure():
    assert earliest_departure(G, 5, 10) == 15
    assert earliest_departure(G, 15, 10) == 30
    assert earliest_departure(G, 95, 10) == math.inf
    one = PeriodGrid(1, 50.0)
    for s in np.linspace(0, 50, 11):
        assert earliest_departure(one, 50 - s, s) == 50
        assert earliest_departure(one, 0.5 * (50 - s), s) == 0.5 * (50 - s) + s


def test_base_direct_edge_within_period():
    tab = TransitTables.build(_line([[0, 12], [12, 0]]))
    assert tab.base[0, 1] == 12


def test_base_through_waypoint():
    tab = TransitTables.build(_line([[0, 15, 25], [15, 0, 15], [25, 15, 0]]))
    assert tab.base[0, 2] == 35
    assert expanded_transit(tab.inst.travel.tolist(), 20.0, 0, 2, 0.0) == 35


def test_base_isolated_pair():
    tab = TransitTables.build(_line([[0, 30], [30, 0]]))
    assert tab.base[0, 1] == math.inf
    assert tab.query(0, 1, 3.0) == math.inf
    assert tab.latest_departure(0, 1, 100.0) == -math.inf


def test_base_matches_oracle_and_invariants():
    for seed in range(40):
        inst, tab = random_case(seed)
        t = inst.travel.tolist()
        b = tab.base
        T = inst.grid.T
        for i in range(inst.n1):
            assert b[i, i] == 0
            for j in range(inst.n1):
                assert b[i, j] >= t[i][j] - 1e-12
                want = expanded_transit(t, T, i, j, 0.0)
                assert b[i, j] == pytest.approx(want, abs=1e-9) or b[i, j] == want == math.inf
                for u in range(inst.n1):
                    if t[i][u] <= T and b[u, j] < math.inf:
                        # waiting at u for the next opening never beats the table
                        assert b[i, j] <= T + b[u, j] + 1e-9
    assert np.array_equal(compute_base(inst), tab.base)


def test_neighbor_order():
    for seed in range(20):
        inst, tab = random_case(seed)
        order = neighbor_order(inst)
        t = inst.travel
        for i, row in enumerate(order):
            assert row[0] == i
            rest = row[1:]
            assert rest == sorted(rest, key=lambda u: (t[i, u], u))
            assert set(rest) == {u for u in range(inst.n1) if u != i and t[i, u] <= inst.grid.T}
            assert tab.neighbors(i) == row
            assert tab.neighbor_distances(i) == [t[i, u] for u in row]


def test_prefix_min():
    for seed in range(15):
        inst, tab = random_case(seed, n=7)
        order = neighbor_order(inst)
        naive = prefix_min_naive(tab.base.tolist(), order)
        pre = preprocess_prefix_min(tab.base, order)
        for i in range(inst.n1):
            assert np.array_equal(pre[i], np.array(naive[i]))
            assert np.array_equal(tab.prefix_min(i), pre[i])
            assert np.array_equal(pre[i][0], tab.base[i])
            assert np.all(pre[i][1:] <= pre[i][:-1])


def test_query_branches():
    tab = TransitTables.build(_line([[0, 15, 25], [15, 0, 15], [25, 15, 0]]))
    # a period opening leaves a full period: falls through to the table
    assert tab.query(0, 2, 20.0) == tab.base[0, 2] == 35
    # enough residual time for the direct edge
    assert tab.query(0, 1, 40.5) == 15
    # 5 units left: no waypoint within reach except staying, wait then 25 > T
    assert tab.query(0, 2, 55.0) == 5 + 35
    # 16 left: go to 1 (15), wait, then 15
    assert tab.query(0, 2, 4.0) == 16 + 15
    assert query_transit(tab, 0, 2, 4.0) == 31
    with pytest.raises(ValueError):
        tab.query(0, 1, 101)


def test_query_matches_expanded_graph():
    rng = random.Random(5)
    for seed in range(30):
        inst, tab = random_case(seed, w=4)
        t = inst.travel.tolist()
        for _ in range(150):
            i, j = rng.randrange(inst.n1), rng.randrange(inst.n1)
            dt = rng.uniform(0, inst.horizon)
            got = tab.query(i, j, dt)
            want = expanded_transit(t, inst.grid.T, i, j, dt)
            assert got == pytest.approx(want, abs=1e-9) or got == want == math.inf


def test_query_w1_short_edges_is_plain_travel():
    for seed in range(10):
        inst, tab = random_case(seed, w=1, T=200.0)
        t = inst.travel
        for i in range(inst.n1):
            for j in range(inst.n1):
                assert tab.base[i, j] == t[i, j]
                for dt in (0.0, 0.5 * (200 - t[i, j])):
                    assert tab.query(i, j, dt) == t[i, j]


def test_latest_departure_examples():
    tab = TransitTables.build(_line([[0, 15, 25], [15, 0, 15], [25, 15, 0]]))
    assert tab.latest_departure(0, 1, 100.0) == 85
    assert tab.latest_departure(0, 1, 500.0) >= 85
    assert tab.latest_departure(0, 2, 34.0) == -math.inf
    assert latest_departure(tab, 0, 2, 35.0) == pytest.approx(5.0)


def test_latest_departure_matches_scan():
    rng = random.Random(9)
    for seed in range(12):
        inst, tab = random_case(seed, n=5, w=3)
        t = inst.travel.tolist()
        for _ in range(12):
            i, j = rng.randrange(inst.n1), rng.randrange(inst.n1)
            D = rng.uniform(0, inst.horizon * 1.05)
            got = tab.latest_departure(i, j, D)
            want = latest_departure_scan(t, inst.grid.T, i, j, D, inst.horizon)
            if want == -math.inf:
                assert got == -math.inf
            else:
                assert got == pytest.approx(want, abs=1e-6)
                assert got + tab.query(i, j, got) <= D + 1e-9


def test_dump_and_load(tmp_path):
    inst, tab = random_case(3)
    path = tab.dump(tmp_path)
    assert path.name == "transit-%s.npz" % tab.content_hash()
    back = TransitTables.load(inst, tmp_path)
    assert np.array_equal(back.base, tab.base)
    for i in range(inst.n1):
        assert np.array_equal(back.prefix_min(i), tab.prefix_min(i))
    assert TransitTables.cached(inst, tmp_path).content_hash() == tab.content_hash()
    other, _ = random_case(4)
    assert TransitTables.load(other, tmp_path) is None

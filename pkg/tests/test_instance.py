import math

import numpy as np
import pytest

from conftest import SOLOMON, solomon_path
from mpisp import instance as I
from mpisp.transit import TransitTables

HEADER = "X\n\nVEHICLE\nNUMBER CAPACITY\n 25 200\n\nCUSTOMER\nCUST NO. XCOORD.\n\n"


def test_parse_empty_customer_section_is_an_error():
    with pytest.raises(I.ParseError, match="depot"):
        I.parse_solomon(HEADER)


def test_parse_depot_only_gives_no_suppliers():
    raw = I.parse_solomon(HEADER + "0 40 50 0 0 1236 0\n")
    inst = I.generate_mpisp(raw, 1, 1)
    assert inst.n == 0
    assert inst.grid.T == 1236


def test_parse_reports_line_number():
    with pytest.raises(I.ParseError, match="line 11"):
        I.parse_solomon(HEADER + "0 40 50 0 0 1236 0\n1 2 3 x 5 6 7\n")
    with pytest.raises(I.ParseError, match="7 fields"):
        I.parse_solomon(HEADER + "0 40 50 0 0 1236\n")


def test_parse_c101(c101_raw):
    r = c101_raw.rows
    assert c101_raw.name == "C101"
    assert (c101_raw.vehicles, c101_raw.capacity) == (25, 200)
    assert r.shape == (101, 7)
    assert (r[0, 4], r[0, 5]) == (0, 1236)
    assert r[1:, 3].sum() == 1810


@pytest.mark.parametrize("group,total", [("c1", 1810), ("c2", 1810), ("r1", 1458),
                                         ("r2", 1458), ("rc1", 1724), ("rc2", 1724)])
def test_group_totals(group, total):
    files = sorted(SOLOMON.glob(group + "[0-9][0-9].txt"))
    assert files
    for f in files:
        assert I.read_solomon(f).rows[1:, 3].sum() == total, f.name


def test_all_vendored_files_parse():
    files = sorted(SOLOMON.glob("*.txt"))
    assert len(files) == 56
    for f in files:
        assert I.read_solomon(f).rows.shape == (101, 7)


def test_generate_periods(c101_raw):
    one = I.generate_mpisp(c101_raw, 1, 7)
    assert one.grid.T == 1236 and one.grid.w == 1 and one.Q == 200
    three = I.generate_mpisp(c101_raw, 3, 7)
    assert three.grid.T == 412 and three.Q == 200 and three.m == 7
    assert three.grid.boundaries() == [(0, 412), (412, 824), (824, 1236)]
    assert three.name == "c101_w3_m7"
    assert I.validate(three) == []


def test_generate_w1_ceil_is_depot_close(c101_raw):
    inst = I.generate_mpisp(c101_raw, 1, 3)
    tab = TransitTables.build(inst)
    for dt in np.linspace(1e-6, 1236, 57):
        assert tab.ceil_of(dt) == 1236


def test_generate_rejects_short_periods(c101_raw):
    # c101 services take 90 time units; 14 periods of 88.3 cannot hold one
    with pytest.raises(I.InstanceError, match="period length"):
        I.generate_mpisp(c101_raw, 14, 7)
    with pytest.raises(I.InstanceError):
        I.generate_mpisp(c101_raw, 0, 7)


def test_transform_three_windows():
    out, flags = I.transform_downtime([[5, 90], [10, 50], [85, 95]],
                                      [[0, 20], [40, 60], [80, 100]])
    assert out == [[5, 50], [10, 30], [45, 55]]
    assert flags == [False, False, False]


def test_transform_without_gaps_is_identity():
    w = [[0, 7], [3, 39.5], [20, 60]]
    out, flags = I.transform_downtime(w, [[0, 20], [20, 40], [40, 60]])
    assert out == w and not any(flags)


def test_transform_window_inside_gap_is_flagged():
    out, flags = I.transform_downtime([[21, 24]], [[0, 20], [30, 50]])
    assert out == [[20, 20]] and flags == [True]


def test_transform_preserves_order_and_working_length():
    periods = [[0, 10], [15, 25], [40, 50]]
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = sorted(rng.uniform(0, 50, 2))
        (e, l), = I.transform_downtime([[a, b]], periods)[0]
        work = sum(max(0.0, min(b, q) - max(a, p)) for p, q in periods)
        assert l - e == pytest.approx(work, abs=1e-9) or work == 0


def _toy(**kw):
    x = np.array([0.0, 3.0, 0.0])
    y = np.array([0.0, 0.0, 4.0])
    base = dict(name="toy", x=x, y=y, workload=np.array([0, 5, 5.0]),
                service=np.array([0, 2, 2.0]), ready=np.zeros(3),
                due=np.full(3, 20.0), m=1, Q=10.0, grid=I.PeriodGrid(2, 10.0),
                travel=I.euclidean(x, y))
    base.update(kw)
    return I.Instance(**base)


def test_validate_ok_and_all_violations():
    assert I.validate(_toy()) == []
    bad = _toy(service=np.array([0, 11.0, 2.0]))
    assert any("service exceeds period" in v for v in I.validate(bad))
    t = I.euclidean(np.array([0.0, 3, 0]), np.array([0.0, 0, 4]))
    t[1, 2] += 1e-3
    asym = _toy(travel=t, service=np.array([0, 11.0, 2.0]))
    msgs = I.validate(asym)
    assert any("travel matrix not symmetric" in v for v in msgs)
    assert any("service exceeds period" in v for v in msgs)


def test_validate_triangle():
    t = np.array([[0, 1, 10], [1, 0, 1], [10, 1, 0.0]])
    assert any("triangle" in v for v in I.validate(_toy(travel=t)))


def test_json_round_trip(c101_raw):
    inst = I.generate_mpisp(c101_raw, 3, 9)
    back = I.loads(I.dumps(inst))
    for f in ("x", "y", "workload", "service", "ready", "due", "travel"):
        assert np.array_equal(getattr(inst, f), getattr(back, f)), f
    assert (back.m, back.Q, back.grid, back.name) == (inst.m, inst.Q, inst.grid, inst.name)
    assert back.generation == {"source": "c101", "w": 3, "m": 9}
    inf = inst.with_capacity(math.inf)
    assert I.loads(I.dumps(inf)).Q == math.inf


def test_solomon_round_trip_is_exact(c101_raw, tmp_path):
    text = solomon_path("c101").read_text()
    raw = I.parse_solomon(text)
    lines = ["C101", "", "VEHICLE", "NUMBER CAPACITY", " 25 200", "", "CUSTOMER", "CUST"]
    lines += [" ".join("%g" % v for v in row) for row in raw.rows]
    again = I.parse_solomon("\n".join(lines))
    assert np.array_equal(raw.rows, again.rows)


def test_loads_rejects_garbage():
    with pytest.raises(I.InstanceError):
        I.loads("{")
    with pytest.raises(I.InstanceError):
        I.loads('{"format": "other"}')


def test_explicit_matrix_round_trip():
    t = np.array([[0, 2, 3], [2, 0, 4], [3, 4, 0.0]])
    inst = _toy(travel=t, metric="explicit")
    assert np.array_equal(I.loads(I.dumps(inst)).travel, t)


def test_rounding_option(c101_raw):
    inst = I.generate_mpisp(c101_raw, 1, 1, rounding=0.01)
    assert np.allclose(inst.travel * 100, np.round(inst.travel * 100))


def test_truncate(c101_raw):
    inst = I.truncate(I.generate_mpisp(c101_raw, 1, 2), 15)
    assert inst.n == 15 and inst.travel.shape == (16, 16)
    assert I.validate(inst) == []


def test_random_instance_is_valid():
    for s in range(20):
        inst = I.random_instance(np.random.default_rng(s), 12, m=2, w=3)
        assert I.validate(inst) == []

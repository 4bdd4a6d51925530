import functools
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

ROOT = HERE.parent
SOLOMON = ROOT / "data" / "solomon"
GOLDEN = HERE / "golden"

settings.register_profile("ci", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def solomon_path(name):
    return SOLOMON / ("%s.txt" % name)


@functools.lru_cache(maxsize=None)
def solomon_instance(name, w, m):
    from mpisp.instance import generate_mpisp, read_solomon
    return generate_mpisp(read_solomon(solomon_path(name)), w, m)


@functools.lru_cache(maxsize=None)
def solomon_tables(name, w, m):
    from mpisp.transit import TransitTables
    return TransitTables.build(solomon_instance(name, w, m))


@functools.lru_cache(maxsize=512)
def random_case(seed, n=None, m=None, w=None, **kw):
    """A seeded random instance with its transit tables."""
    from mpisp.instance import random_instance
    from mpisp.transit import TransitTables
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m
    w = int(rng.integers(1, 5)) if w is None else w
    inst = random_instance(rng, n, m=m, w=w, name="rand%d" % seed, **kw)
    return inst, TransitTables.build(inst)


@pytest.fixture(scope="session")
def c101_raw():
    from mpisp.instance import read_solomon
    return read_solomon(solomon_path("c101"))


# -- every solved instance, for the bound sandwich ---------------------------------

SOLVED = {}
ACCEPTANCE = []


def _instance_key(inst):
    import hashlib
    h = hashlib.sha1()
    for a in (inst.travel, inst.workload, inst.service, inst.ready, inst.due):
        h.update(np.ascontiguousarray(a, dtype=float).tobytes())
    h.update(repr((inst.m, float(inst.Q), inst.grid.w, float(inst.grid.T))).encode())
    return h.hexdigest()


@pytest.fixture(autouse=True, scope="session")
def _record_solved():
    import copy
    from mpisp.search import TabuSearch
    orig = TabuSearch.run

    def run(self, *args, **kwargs):
        res = orig(self, *args, **kwargs)
        key = _instance_key(self.inst)
        if key not in SOLVED:
            SOLVED[key] = [copy.deepcopy(self.inst), res.best.P]
        else:
            SOLVED[key][1] = max(SOLVED[key][1], res.best.P)
        return res

    TabuSearch.run = run
    yield
    TabuSearch.run = orig


def record_acceptance(number, ok, detail):
    line = "criterion %s: %s  %s" % (number, "PASS" if ok else "FAIL", detail)
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_collection_modifyitems(session, config, items):
    # the bound sandwich covers everything solved earlier in the session
    last = [it for it in items if it.name == "test_criterion_4_bound_sandwich"]
    items[:] = [it for it in items if it not in last] + last


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

"""Command-line front end.

    mpisp gen SOLOMON_DIR OUT_DIR [--w 1,3,5] [--m 7,9,11,13]
    mpisp solve INSTANCE... [--repeats 10] [--seed 0] [--out runs] [--ub]
    mpisp ub INSTANCE [--emit-lp FILE] [--solve-small] [--time-limit S]
    mpisp report RUN_DIR... [--csv FILE] [--markdown FILE]

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal assertion (e.g. a run
above its upper bound). ``MPISP_WORKERS`` sets the number of worker
processes for independent runs (default 1).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import instance as inst_mod
from . import upper_bound as ub_mod
from ._backend import NAME as BACKEND
from .search import COMPONENTS, SearchConfig, TabuSearch
from .solution import to_text
from .transit import TransitTables

log = logging.getLogger("mpisp")

REPORT_SCHEMA = 1


class UsageError(Exception):
    pass


class AssertionFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def code_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def _ints(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError("expected comma-separated integers, got %r" % text)
    if not out or min(out) < 1:
        raise UsageError("values must be positive: %r" % text)
    return out


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def workers() -> int:
    try:
        return max(1, int(os.environ.get("MPISP_WORKERS", "1")))
    except ValueError:
        raise UsageError("MPISP_WORKERS must be an integer")


# -- gen ---------------------------------------------------------------------------

def cmd_gen(solomon_dir, w_set, m_set, out_dir, Q=inst_mod.DEFAULT_CAPACITY) -> list[Path]:
    src = Path(solomon_dir)
    if not src.is_dir():
        raise FileNotFoundError("no such directory: %s" % src)
    files = sorted(p for p in src.iterdir() if p.suffix.lower() == ".txt")
    if not files:
        log.warning("no Solomon files in %s", src)
    out = Path(out_dir)
    written = []
    for f in files:
        try:
            raw = inst_mod.read_solomon(f)
        except (inst_mod.ParseError, OSError) as exc:
            log.error("%s: %s", f, exc)
            continue
        for w in w_set:
            for m in m_set:
                try:
                    inst = inst_mod.generate_mpisp(raw, w, m, Q=Q)
                except inst_mod.InstanceError as exc:
                    log.error("%s w=%d m=%d: %s", f.name, w, m, exc)
                    continue
                path = out / ("%s.json" % inst.name)
                _write_atomic(path, inst_mod.dumps(inst))
                written.append(path)
    return written


# -- solve -------------------------------------------------------------------------

def load_instance(path, w=None, m=None) -> inst_mod.Instance:
    p = Path(path)
    if p.suffix.lower() == ".json":
        inst = inst_mod.load(p)
        if m is not None:
            inst = inst.with_inspectors(m)
        return inst
    if w is None or m is None:
        raise UsageError("a Solomon file needs --w and --m")
    return inst_mod.generate_mpisp(inst_mod.read_solomon(p), w, m)


def _one_run(args):
    inst_doc, cfg_doc = args
    inst = inst_mod.from_dict(inst_doc)
    cfg = SearchConfig(**cfg_doc)
    tables = TransitTables.build(inst)
    res = TabuSearch(tables, cfg).run()
    return {
        "seed": cfg.seed, "P": res.best.fitness.P, "D": res.best.fitness.D,
        "F": res.best.fitness.F, "time": res.elapsed, "iterations": res.iterations,
        "moves": res.moves, "routes": res.best.routes, "pool": res.best.pool,
        "trace": [asdict(t) for t in res.trace],
    }


def cmd_solve(inst: inst_mod.Instance, repeats: int, seed: int, cfg: SearchConfig,
              out_dir=None, ub: float | None = None, stop_at: float | None = None) -> dict:
    """Independent runs with seeds seed, seed+1, ...; returns the report."""
    problems = inst_mod.validate(inst)
    if problems:
        raise inst_mod.InstanceError("; ".join(problems))
    doc = inst_mod.to_dict(inst)
    cfg_doc = asdict(cfg)
    jobs = [(doc, dict(cfg_doc, seed=seed + k)) for k in range(repeats)]
    runs = []
    nw = workers()
    if nw > 1 and stop_at is None and repeats > 1:
        with ProcessPoolExecutor(max_workers=min(nw, repeats)) as ex:
            runs = list(ex.map(_one_run, jobs))
    else:
        for job in jobs:
            runs.append(_one_run(job))
            if stop_at is not None and runs[-1]["P"] >= stop_at - 1e-6:
                break
    Ps = [r["P"] for r in runs]
    report = {
        "schema": REPORT_SCHEMA, "instance": inst.name,
        "group": group_of(inst), "w": inst.grid.w, "m": inst.m,
        "total_workload": inst.total_workload,
        "seed": seed, "repeats": len(runs), "cfg_hash": cfg.digest(),
        "config": dict(cfg_doc, components=list(cfg.components), seed=seed),
        "code_version": code_version(), "backend": BACKEND,
        "max": max(Ps), "avg": sum(Ps) / len(Ps),
        "avg_time": sum(r["time"] for r in runs) / len(runs),
        "ub": ub, "runs": [{k: v for k, v in r.items() if k != "trace"} for r in runs],
    }
    if out_dir is not None:
        d = Path(out_dir) / inst.name
        tables = TransitTables.build(inst)
        for r in runs:
            _write_trace(d / ("trace_seed%d.csv" % r["seed"]), r["trace"])
        best = max(runs, key=lambda r: r["P"])
        from .solution import evaluate
        sol = evaluate(tables, best["routes"], cfg.eta, cfg.maximize_f)
        _write_atomic(d / "best_solution.txt", to_text(sol, tables))
        _write_atomic(d / "report.json", json.dumps(report, indent=1, default=_json_default))
    if ub is not None and report["max"] > ub + 1e-6:
        raise AssertionFailure("%s: workload %g above upper bound %g"
                               % (inst.name, report["max"], ub))
    return report


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return float(x)


def _write_trace(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["iteration", "P", "D", "F", "best_P", "pool", "elapsed"]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for r in rows:
            wr.writerow([r[c] for c in cols])
    os.replace(tmp, path)


def group_of(inst: inst_mod.Instance) -> str:
    src = str(inst.generation.get("source") or inst.name).lower()
    m = re.match(r"([a-z]+)(\d)\d\d", src)
    return (m.group(1) + m.group(2)).upper() if m else src.upper()


# -- ub ----------------------------------------------------------------------------

def cmd_ub(inst: inst_mod.Instance, emit_lp=None, solve_small=False,
           time_limit=None, solve=True) -> dict:
    tables = TransitTables.build(inst)
    model = ub_mod.model_for(inst, tables)
    out = {"instance": inst.name, "variables": model.nvars, "rows": model.counts()}
    if emit_lp:
        ub_mod.emit_lp(model, emit_lp)
        out["lp"] = str(emit_lp)
    if not solve:
        return out
    res = ub_mod.solve_exact_small(model) if solve_small else ub_mod.solve_milp(model, time_limit)
    out.update({"UB": res.value, "solve_time": res.solve_time, "status": res.status,
                "method": res.method})
    return out


# -- report ------------------------------------------------------------------------

REQUIRED = ("instance", "group", "w", "m", "max", "avg", "avg_time")


def collect_reports(paths) -> list[dict]:
    out = []
    for p in paths:
        p = Path(p)
        files = [p] if p.is_file() else sorted(p.rglob("report.json"))
        for f in files:
            try:
                doc = json.loads(f.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                log.warning("skipping %s: %s", f, exc)
                continue
            if doc.get("schema") != REPORT_SCHEMA or any(k not in doc for k in REQUIRED):
                log.warning("skipping %s: not a run report", f)
                continue
            out.append(doc)
    return out


def _source(doc):
    return doc["instance"].split("_w")[0]


def cmd_report(reports: list[dict]) -> dict:
    """Per-m tables with one row per source instance and UB/Max/Avg/Time
    columns per w, plus average time per group and w."""
    rows = sorted(reports, key=lambda d: (d["group"], _source(d), d["w"], d["m"]))
    ws = sorted({d["w"] for d in rows})
    tables = {}
    for m in sorted({d["m"] for d in rows}):
        by_src = {}
        for d in rows:
            if d["m"] == m:
                by_src.setdefault((d["group"], _source(d)), {})[d["w"]] = d
        tables[m] = sorted(by_src.items())
    times = {}
    for d in rows:
        times.setdefault((d["group"], d["w"]), []).append(d["avg_time"])
    return {"ws": ws, "tables": tables,
            "times": {k: sum(v) / len(v) for k, v in sorted(times.items())},
            "flat": rows}


def _fmt(x, nd=0):
    if x is None:
        return "-"
    return ("%.*f" % (nd, x)) if nd else "%d" % round(x)


def report_markdown(rep: dict) -> str:
    ws = rep["ws"]
    out = []
    for m, items in rep["tables"].items():
        out.append("### m = %d\n" % m)
        head = ["Instance"]
        for w in ws:
            head += ["w=%d UB" % w, "Max", "Avg", "Time"]
        out.append("| " + " | ".join(head) + " |")
        out.append("|" + "---|" * len(head))
        for (_g, src), per_w in items:
            cells = [src]
            for w in ws:
                d = per_w.get(w)
                if d is None:
                    cells += ["-"] * 4
                else:
                    cells += [_fmt(d.get("ub")), _fmt(d["max"]), _fmt(d["avg"], 1),
                              _fmt(d["avg_time"], 1)]
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    out.append("### average time (s)\n")
    groups = sorted({g for g, _ in rep["times"]})
    out.append("| Group | " + " | ".join("w=%d" % w for w in ws) + " |")
    out.append("|" + "---|" * (len(ws) + 1))
    for g in groups:
        out.append("| %s | " % g + " | ".join(_fmt(rep["times"].get((g, w)), 1) for w in ws)
                   + " |")
    return "\n".join(out) + "\n"


def report_csv(rep: dict) -> str:
    cols = ["group", "instance", "w", "m", "ub", "max", "avg", "avg_time", "repeats", "cfg_hash"]
    import io
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for d in rep["flat"]:
        wr.writerow([d.get(c) for c in cols])
    return buf.getvalue()


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpisp", description="Multi-period inspector scheduling")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate instances from Solomon files")
    g.add_argument("solomon_dir")
    g.add_argument("out_dir")
    g.add_argument("--w", default="1,3,5")
    g.add_argument("--m", default="7,9,11,13")

    s = sub.add_parser("solve", help="run the tabu search")
    s.add_argument("instances", nargs="+", help="instance JSON or Solomon file")
    s.add_argument("--w", type=int, help="periods (Solomon input)")
    s.add_argument("--m", type=int, help="inspectors (Solomon input, overrides JSON)")
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="runs")
    s.add_argument("--toptw", action="store_true", help="unlimited capacity, needs w = 1")
    s.add_argument("--epa-insert", choices=("min", "max"), default="min")
    s.add_argument("--components", default=",".join(COMPONENTS))
    s.add_argument("--minimize-f", action="store_true")
    s.add_argument("--n-init", type=int)
    s.add_argument("--max-perturbation", type=int)
    s.add_argument("--max-local-iter", type=int)
    s.add_argument("--tenure", type=int)
    s.add_argument("--ub", action="store_true", help="also compute the upper bound")
    s.add_argument("--stop-at", type=float, help="stop repeating once a run reaches this")

    u = sub.add_parser("ub", help="upper bound model")
    u.add_argument("instance")
    u.add_argument("--w", type=int)
    u.add_argument("--m", type=int)
    u.add_argument("--emit-lp", metavar="FILE")
    u.add_argument("--solve-small", action="store_true", help="exact branch-and-bound")
    u.add_argument("--no-solve", action="store_true")
    u.add_argument("--time-limit", type=float)
    u.add_argument("--json", metavar="FILE", help="write the bound report here")

    r = sub.add_parser("report", help="tables from run directories")
    r.add_argument("runs", nargs="+")
    r.add_argument("--csv", metavar="FILE")
    r.add_argument("--markdown", metavar="FILE")
    return p


def _cfg(a) -> SearchConfig:
    kw = dict(seed=a.seed, epa_insert=a.epa_insert,
              components=tuple(x.strip() for x in a.components.split(",") if x.strip()),
              maximize_f=not a.minimize_f)
    for name in ("n_init", "max_perturbation", "max_local_iter", "tenure"):
        v = getattr(a, name)
        if v is not None:
            kw[name] = v
    try:
        return SearchConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc))


def run(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if a.cmd == "gen":
        paths = cmd_gen(a.solomon_dir, _ints(a.w), _ints(a.m), a.out_dir)
        print("%d instances written to %s" % (len(paths), a.out_dir))
    elif a.cmd == "solve":
        if a.repeats < 1:
            raise UsageError("--repeats must be positive")
        cfg = _cfg(a)
        for path in a.instances:
            inst = load_instance(path, a.w, a.m)
            if a.toptw:
                if inst.grid.w != 1:
                    raise UsageError("--toptw needs a single period (w = 1)")
                inst = inst.with_capacity(math.inf)
            ub = cmd_ub(inst)["UB"] if a.ub else None
            rep = cmd_solve(inst, a.repeats, a.seed, cfg, a.out, ub, a.stop_at)
            print("%s max=%g avg=%.1f time=%.1fs%s" % (
                inst.name, rep["max"], rep["avg"], rep["avg_time"],
                "" if ub is None else " ub=%g" % ub))
    elif a.cmd == "ub":
        inst = load_instance(a.instance, a.w, a.m)
        try:
            rep = cmd_ub(inst, a.emit_lp, a.solve_small, a.time_limit, not a.no_solve)
        except ub_mod.ModelTooLarge as exc:
            raise UsageError(str(exc))
        if a.json:
            _write_atomic(Path(a.json), json.dumps(rep, indent=1))
        print(json.dumps(rep))
    elif a.cmd == "report":
        reps = collect_reports(a.runs)
        if not reps:
            raise inst_mod.InstanceError("no run reports found")
        rep = cmd_report(reps)
        md = report_markdown(rep)
        if a.markdown:
            _write_atomic(Path(a.markdown), md)
        if a.csv:
            _write_atomic(Path(a.csv), report_csv(rep))
        print(md, end="")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print("mpisp: error: %s" % exc, file=sys.stderr)
        return 1
    except (inst_mod.ParseError, inst_mod.InstanceError, OSError) as exc:
        print("mpisp: data error: %s" % exc, file=sys.stderr)
        return 2
    except AssertionFailure as exc:
        print("mpisp: assertion failed: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

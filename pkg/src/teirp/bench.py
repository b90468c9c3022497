"""Batch benchmark runner and table emission.

Solves every instance file in a directory and emits a CSV with one row
per instance plus aggregate rows keyed by (class, combination, K2):
average gaps at the root, after 20 nodes and at termination, node
counts, root/total times, and the gap-range bucket counts
(optimal < 0.05%, < 5%, >= 5%, no solution).
"""

from __future__ import annotations

import os
import re
import traceback
from dataclasses import dataclass

from .model import Instance, read_instance
from .bnp import SolveConfig, SolveReport, search

BUCKETS = ("opt(<0.05%)", "<5%", ">=5%", "no solution")


@dataclass
class BenchRow:
    instance: str
    klass: str
    combination: str
    k2: int
    status: str
    gap0: float | None
    gap20: float | None
    gapF: float | None
    nodes: int
    time_root: float
    time_total: float
    error: str = ""


def instance_meta(path: str, inst: Instance | None) -> tuple[str, str, int]:
    """(class, combination, K2) for table grouping.

    The class tag is read from the file name when it follows the
    `<class>_<a>s<b>_K<k2>` convention; combination and K2 always fall
    back to the instance contents.
    """
    name = os.path.basename(path)
    m = re.search(r"(?:^|_)([A-Za-z]+\d+)_(\d)s(\d)_K(\d)", name)
    if m:
        return m.group(1), f"{m.group(2)}s{m.group(3)}", int(m.group(4))
    if inst is not None:
        combo = f"{len(inst.suppliers)}s{len(inst.satellites)}"
        return "-", combo, inst.k2
    return "-", "-", 0


def gap_bucket(row: BenchRow) -> str:
    if row.status == "no_solution" or row.gapF is None:
        return BUCKETS[3]
    if row.gapF < 0.0005:
        return BUCKETS[0]
    if row.gapF < 0.05:
        return BUCKETS[1]
    return BUCKETS[2]


def run_one(path: str, config: SolveConfig) -> BenchRow:
    name = os.path.basename(path)
    try:
        inst = read_instance(path)
    except Exception as exc:
        return BenchRow(name, "-", "-", 0, "error", None, None, None,
                        0, 0.0, 0.0, error=str(exc))
    klass, combo, k2 = instance_meta(path, inst)
    try:
        rep: SolveReport = search(inst, config)
    except Exception as exc:
        traceback.print_exc()
        return BenchRow(name, klass, combo, k2, "error",
                        None, None, None, 0, 0.0, 0.0, error=str(exc))
    return BenchRow(name, klass, combo, k2, rep.status,
                    rep.gap0, rep.gap20, rep.gapF, rep.nodes,
                    rep.timeRootSec, rep.timeTotalSec)


def run_benchmark(directory: str, config: SolveConfig) -> list[BenchRow]:
    paths = sorted(os.path.join(directory, f) for f in os.listdir(directory)
                   if f.endswith(".txt") or f.endswith(".dat"))
    return [run_one(p, config) for p in paths]


def _pct(g) -> str:
    return "" if g is None else f"{100.0 * g:.4f}"


def format_tables(rows: list[BenchRow]) -> str:
    """CSV text: per-instance rows, then group averages and bucket counts."""
    out = ["instance,class,combination,K2,status,Gap0,Gap20,GapF,"
           "Nodes,Time_root,Time,error"]
    for r in rows:
        out.append(f"{r.instance},{r.klass},{r.combination},{r.k2},{r.status},"
                   f"{_pct(r.gap0)},{_pct(r.gap20)},{_pct(r.gapF)},"
                   f"{r.nodes},{r.time_root:.2f},{r.time_total:.2f},{r.error}")

    groups: dict[tuple, list[BenchRow]] = {}
    for r in rows:
        groups.setdefault((r.klass, r.combination, r.k2), []).append(r)

    out.append("")
    out.append("class,combination,K2,count,Gap0,Gap20,GapF,Nodes,Time_root,Time")
    for key in sorted(groups):
        g = groups[key]

        def avg(vals):
            vals = [v for v in vals if v is not None]
            return sum(vals) / len(vals) if vals else None

        out.append(
            f"{key[0]},{key[1]},{key[2]},{len(g)},"
            f"{_pct(avg(r.gap0 for r in g))},"
            f"{_pct(avg(r.gap20 for r in g))},"
            f"{_pct(avg(r.gapF for r in g))},"
            f"{avg(r.nodes for r in g):.1f},"
            f"{avg(r.time_root for r in g):.2f},"
            f"{avg(r.time_total for r in g):.2f}")

    out.append("")
    out.append("class,combination,K2," + ",".join(BUCKETS))
    for key in sorted(groups):
        counts = [0, 0, 0, 0]
        for r in groups[key]:
            counts[BUCKETS.index(gap_bucket(r))] += 1
        out.append(f"{key[0]},{key[1]},{key[2]}," +
                   ",".join(str(c) for c in counts))
    return "\n".join(out) + "\n"

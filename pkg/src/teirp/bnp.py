"""Branch-and-price driver.

Ten branching families keep the search complete: four on first-echelon
route variables (total, per period, per satellite, per route-period) and six
on second-echelon column aggregates (total, per period, customer flow over
all periods / per period / per period and satellite, and undirected edge
flow per period). Aggregate decisions become RMP rows whose duals feed back
into pricing arc costs; forcing an edge to zero removes its arcs instead.

Nodes are rebuilt from their decision path against a shared column pool, so
switching nodes costs one LP rebuild rather than a copy per node.
"""

from __future__ import annotations

import copy
import heapq
import json
import math
import time
from dataclasses import dataclass, field

from teirp.columns import Column
from teirp.first_echelon import enumerate_routes
from teirp.lp import INT_TOL
from teirp.master import (ARTIFICIAL_COST, ColGenConfig, RmpState,
                          initial_columns, run_column_generation)
from teirp.model import Instance
from teirp.pricing import GraphMods

GAP_OPTIMAL = 5e-4  # integrality gap below 0.05% counts as solved


@dataclass(frozen=True)
class BranchDecision:
    btype: int            # 1..10
    index: tuple          # family-specific identifiers, see _value_of
    sense: str            # "<=" or ">="
    rhs: float
    value: float          # fractional aggregate value when created

    def key(self):
        return (self.btype, self.index, self.sense, self.rhs)

    def needs_row(self) -> bool:
        if self.btype == 4:
            return False
        if self.btype == 10 and self.sense == "<=" and self.rhs == 0:
            return False
        return True

    # -- master-side coefficients -----------------------------------------

    def lambda_coefficient(self, route, t: int) -> float:
        if self.btype == 1:
            return 1.0
        if self.btype == 2:
            return 1.0 if t == self.index[0] else 0.0
        if self.btype == 3:
            return 1.0 if self.index[0] in route.satellites else 0.0
        return 0.0

    def lambda_bounds(self, route, t: int):
        if self.btype == 4 and self.index == (route.supplier, route.satellites, t):
            if self.sense == "<=":
                return 0.0, self.rhs
            return self.rhs, 1.0
        return None, None

    def column_coefficient(self, col: Column) -> float:
        if self.btype == 5:
            return 1.0
        if self.btype == 6:
            return 1.0 if col.period == self.index[0] else 0.0
        if self.btype == 7:
            return float(col.visits().get(self.index[0], 0))
        if self.btype == 8:
            c, t = self.index
            return float(col.visits().get(c, 0)) if col.period == t else 0.0
        if self.btype == 9:
            c, t, s = self.index
            if col.period == t and col.satellite == s:
                return float(col.visits().get(c, 0))
            return 0.0
        if self.btype == 10:
            i, j, t = self.index
            if col.period != t:
                return 0.0
            e = (i, j) if i <= j else (j, i)
            return float(col.edges().get(e, 0))
        return 0.0

    def column_allowed(self, col: Column) -> bool:
        if self.btype == 10 and self.sense == "<=" and self.rhs == 0:
            return self.column_coefficient(col) == 0.0
        return True


def graph_mods(decisions, duals, s: int, t: int) -> GraphMods:
    """Pricing-graph adjustments induced by the active decisions."""
    mods = GraphMods()
    for dec in decisions:
        if dec.btype == 10 and dec.sense == "<=" and dec.rhs == 0:
            i, j, tt = dec.index
            if tt == t:
                mods.removed_edges.add(frozenset((i, j)))
            continue
        dual = duals.branch.get(dec.key(), 0.0) if duals is not None else 0.0
        if not dual:
            continue
        if dec.btype == 5 or (dec.btype == 6 and dec.index[0] == t):
            mods.source_delta += dual
        elif dec.btype == 7:
            c = dec.index[0]
            mods.enter_delta[c] = mods.enter_delta.get(c, 0.0) + dual
        elif dec.btype == 8 and dec.index[1] == t:
            c = dec.index[0]
            mods.enter_delta[c] = mods.enter_delta.get(c, 0.0) + dual
        elif dec.btype == 9 and dec.index[1] == t and dec.index[2] == s:
            c = dec.index[0]
            mods.enter_delta[c] = mods.enter_delta.get(c, 0.0) + dual
        elif dec.btype == 10 and dec.index[2] == t:
            e = frozenset((dec.index[0], dec.index[1]))
            mods.edge_delta[e] = mods.edge_delta.get(e, 0.0) + dual
    return mods


# -- candidate selection --------------------------------------------------------

def _frac(v: float) -> float:
    return v - math.floor(v)


def _is_frac(v: float) -> bool:
    return INT_TOL < _frac(v) < 1.0 - INT_TOL


def _closest(cands):
    """Fractional candidate closest to 0.5; ties to smaller (type, index)."""
    best = None
    for btype, index, v in cands:
        if not _is_frac(v):
            continue
        score = (abs(_frac(v) - 0.5), btype, index)
        if best is None or score < best[0]:
            best = (score, btype, index, v)
    if best is None:
        return None
    return best[1], best[2], best[3]


def find_branch_candidate(rmp: RmpState, sol) -> BranchDecision | None:
    """Next branching decision, or None when all ten families are integral."""
    inst = rmp.inst
    lam = rmp.lambda_values(sol)
    total1 = sum(lam.values())
    if _is_frac(total1):
        return _make(1, (), total1)
    cands = []
    for t in inst.periods:
        cands.append((2, (t,), sum(v for (p, tt), v in lam.items() if tt == t)))
    for s in inst.satellites:
        cands.append((3, (s,), sum(v for (p, t), v in lam.items()
                                   if s in rmp.routes[p].satellites)))
    for (p, t), v in sorted(lam.items()):
        r = rmp.routes[p]
        cands.append((4, (r.supplier, r.satellites, t), v))
    hit = _closest(cands)
    if hit is not None:
        return _make(*hit)

    alpha = [(rmp.columns[key], v) for key, v in sorted(rmp.alpha_values(sol).items())]
    fam: dict[int, list] = {k: [] for k in range(5, 11)}
    agg: dict[tuple, float] = {}
    for col, v in alpha:
        t = col.period
        agg[(5, ())] = agg.get((5, ()), 0.0) + v
        agg[(6, (t,))] = agg.get((6, (t,)), 0.0) + v
        for c, mult in col.visits().items():
            agg[(7, (c,))] = agg.get((7, (c,)), 0.0) + mult * v
            agg[(8, (c, t))] = agg.get((8, (c, t)), 0.0) + mult * v
            agg[(9, (c, t, col.satellite))] = agg.get(
                (9, (c, t, col.satellite)), 0.0) + mult * v
        for e, mult in col.edges().items():
            agg[(10, (e[0], e[1], t))] = agg.get((10, (e[0], e[1], t)), 0.0) + mult * v
    for (btype, index), v in sorted(agg.items()):
        fam[btype].append((btype, index, v))
    per_type = {btype: _closest(members) for btype, members in fam.items()}
    for btype in (7, 8, 9, 10):
        hit = per_type.get(btype)
        if hit is not None and 0.25 <= _frac(hit[2]) <= 0.75:
            return _make(*hit)
    hit = _closest([(b, i, v) for cand in per_type.values() if cand
                    for b, i, v in [cand]])
    if hit is not None:
        return _make(*hit)
    return None


def _make(btype, index, v) -> BranchDecision:
    return BranchDecision(btype=btype, index=index, sense="<=",
                          rhs=float(math.floor(v)), value=v)


def _children(dec: BranchDecision):
    lo = BranchDecision(dec.btype, dec.index, "<=", math.floor(dec.value), dec.value)
    hi = BranchDecision(dec.btype, dec.index, ">=", math.ceil(dec.value), dec.value)
    return lo, hi


# -- reports ---------------------------------------------------------------------

@dataclass
class SolveReport:
    status: str = "no_solution"
    objective: float | None = None
    lb: float | None = None
    ub: float | None = None
    gap0: float | None = None
    gap20: float | None = None
    gapF: float | None = None
    nodes: int = 0
    timeRootSec: float = 0.0
    timeTotalSec: float = 0.0
    solution: dict | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self, include_times: bool = True) -> dict:
        d = {"status": self.status, "objective": self.objective,
             "lb": self.lb, "ub": self.ub, "gap0": self.gap0,
             "gap20": self.gap20, "gapF": self.gapF, "nodes": self.nodes,
             "solution": self.solution}
        if self.meta:
            d["meta"] = self.meta
        if include_times:
            d["timeRootSec"] = round(self.timeRootSec, 6)
            d["timeTotalSec"] = round(self.timeTotalSec, 6)
        return d

    def to_json(self, include_times: bool = True) -> str:
        return json.dumps(self.to_dict(include_times), sort_keys=True,
                          allow_nan=True)


def _gap(ub, lb):
    if ub is None or lb is None or lb <= 0:
        return None
    return (ub - lb) / lb


@dataclass
class SolveConfig(ColGenConfig):
    time_limit: float = 3600.0
    node_limit: int = 100000
    search: str = "best-first"     # or "local-depth-first"
    milp_time: float = 20.0
    gap_tol: float = GAP_OPTIMAL


# -- search ------------------------------------------------------------------------

class _Tree:
    def __init__(self):
        self.heap = []
        self.counter = 0

    def push(self, bound, depth, path):
        self.counter += 1
        heapq.heappush(self.heap, (bound, -depth, self.counter, path))

    def pop(self):
        return heapq.heappop(self.heap)

    def best_bound(self):
        return self.heap[0][0] if self.heap else None

    def __len__(self):
        return len(self.heap)

    def prune(self, cutoff):
        self.heap = [n for n in self.heap if n[0] < cutoff]
        heapq.heapify(self.heap)


def search(inst: Instance, config: SolveConfig | None = None) -> SolveReport:
    config = config or SolveConfig()
    t_start = time.monotonic()
    routes = enumerate_routes(inst)
    pool: dict = {}
    for col in initial_columns(inst):
        pool[col.key()] = col
    incumbent: tuple[float, dict] | None = None
    report = SolveReport()

    def time_left():
        return config.time_limit - (time.monotonic() - t_start)

    def solve_node(path):
        """(bound, rmp, sol) or (None, None, None) if the node is infeasible."""
        rmp = RmpState(inst, routes)
        feasible = True
        for dec in path:
            rmp.add_decision(dec)
        for col in pool.values():
            rmp.add_column(col)
        mods = (lambda s, t, duals=None: graph_mods(rmp.decisions, duals, s, t))
        sol = run_column_generation(rmp, config, mods_for=mods)
        if not sol.optimal:
            return None, None, None
        for key, col in rmp.columns.items():
            pool.setdefault(key, col)
        if rmp.artificial_value(sol) > 1e-6:
            return None, None, None
        return sol.objective, rmp, sol

    def try_incumbent(obj, sol_dict):
        nonlocal incumbent
        if sol_dict is None:
            return
        if incumbent is None or obj < incumbent[0] - 1e-9:
            incumbent = (obj, sol_dict)

    tree = _Tree()
    depth_stack: list[tuple[float, int, tuple]] = []  # local depth-first pool
    solved = 0
    lb_global = None

    root_t0 = time.monotonic()
    bound, rmp, sol = solve_node(())
    report.timeRootSec = time.monotonic() - root_t0
    if bound is None:
        report.status = "no_solution"
        report.timeTotalSec = time.monotonic() - t_start
        return report
    lb_global = bound
    solved = 1
    dec = find_branch_candidate(rmp, sol)
    if dec is None:
        obj, sol_dict = extract_solution(inst, rmp, sol)
        try_incumbent(obj, sol_dict)
    else:
        heur = integer_rmp_heuristic(inst, rmp, sol, config)
        if heur is not None:
            try_incumbent(*heur)
        for child in _children(dec):
            node = (bound, 1, (child,))
            tree.push(*node) if config.search == "best-first" else depth_stack.append(node)
    report.gap0 = _gap(incumbent[0] if incumbent else None, bound)

    while (len(tree) or depth_stack) and solved < config.node_limit:
        if time_left() <= 0:
            report.status = "timeout"
            break
        cutoff = incumbent[0] - 1e-6 if incumbent else math.inf
        if config.search == "best-first":
            nbound, ndepth, _, path = tree.pop()
            ndepth = -ndepth
        else:
            nbound, ndepth, path = depth_stack.pop()
        if nbound >= cutoff:
            continue
        bound, rmp, sol = solve_node(path)
        solved += 1
        if bound is not None and bound < cutoff:
            dec = find_branch_candidate(rmp, sol)
            if dec is None:
                obj, sol_dict = extract_solution(inst, rmp, sol)
                try_incumbent(obj, sol_dict)
            else:
                for child in _children(dec):
                    node = (bound, ndepth + 1, path + (child,))
                    if config.search == "best-first":
                        tree.push(*node)
                    else:
                        depth_stack.append(node)
        lb_candidates = [b for b, _, _ in depth_stack]
        if tree.heap:
            lb_candidates.append(tree.best_bound())
        if incumbent is not None:
            lb_candidates.append(incumbent[0])
        if lb_candidates:
            lb_global = max(lb_global, min(lb_candidates))
        if solved == 20:
            if bound is not None:
                heur = integer_rmp_heuristic(inst, rmp, sol, config)
                if heur is not None:
                    try_incumbent(*heur)
            report.gap20 = _gap(incumbent[0] if incumbent else None, lb_global)
        if incumbent is not None:
            tree.prune(incumbent[0] - 1e-6)
            depth_stack = [n for n in depth_stack if n[0] < incumbent[0] - 1e-6]
            g = _gap(incumbent[0], lb_global)
            if g is not None and g < config.gap_tol:
                break
    else:
        if solved >= config.node_limit and (len(tree) or depth_stack):
            report.status = "timeout"

    if not (len(tree) or depth_stack) and incumbent is not None:
        lb_global = incumbent[0]
    report.nodes = solved
    report.lb = lb_global
    if incumbent is not None:
        report.ub = incumbent[0]
        report.objective = incumbent[0]
        report.solution = incumbent[1]
        report.gapF = _gap(report.ub, report.lb)
        if report.status not in ("timeout",):
            report.status = "optimal" if (report.gapF is not None
                                          and report.gapF < config.gap_tol) else "timeout"
    else:
        report.status = "timeout" if report.status == "timeout" else "no_solution"
        report.gapF = None
    report.timeTotalSec = time.monotonic() - t_start
    return report


# -- incumbent extraction -----------------------------------------------------------

def extract_solution(inst: Instance, rmp: RmpState, sol):
    """Turn an integral node LP solution into the report solution schema.

    Lambda variables and all column aggregates are integral here; individual
    alpha values may still split one route's deliveries across several RDPs,
    so columns are merged per (satellite, period, undirected sequence).
    """
    lam = rmp.lambda_values(sol)
    psi = rmp.psi_values(sol)
    first: dict = {}
    inflow = {}  # (s, l) -> quantity entering satellite s in period l
    for (s, t, l), v in psi.items():
        if l >= 1:
            inflow[(s, l)] = inflow.get((s, l), 0.0) + v
    for (p, t), v in sorted(lam.items()):
        if v < 0.5:
            continue
        route = rmp.routes[p]
        deliveries = {str(s): inflow.get((s, t), 0.0) for s in route.satellites}
        first.setdefault(str(t), []).append({
            "supplier": route.supplier,
            "satellites": list(route.seq),
            "deliveries": deliveries,
        })
    groups: dict = {}
    for key, v in rmp.alpha_values(sol).items():
        col = rmp.columns[key]
        seq = col.seq if col.seq <= col.seq[::-1] else col.seq[::-1]
        gkey = (col.period, col.satellite, seq)
        groups.setdefault(gkey, []).append((col, v))
    second: dict = {}
    for (t, s, seq), cols in sorted(groups.items()):
        usage = sum(v for _, v in cols)
        if usage < 0.5:
            continue
        if abs(usage - round(usage)) > 1e-6:
            return math.nan, None
        qh: dict = {}
        for col, v in cols:
            for (c, h), qty in col.q_map().items():
                qh[(c, h)] = qh.get((c, h), 0.0) + v * qty
        q_tot: dict = {}
        for (c, h), qty in qh.items():
            q_tot[str(c)] = q_tot.get(str(c), 0.0) + qty
        rep = max(cols, key=lambda cv: cv[1])[0]
        second.setdefault(str(t), []).append({
            "satellite": s,
            "seq": list(rep.seq),
            "q": q_tot,
            "qh": {f"{c},{h}": qty for (c, h), qty in sorted(qh.items())},
        })
    psi_out: dict = {}
    for (s, t, l), v in sorted(psi.items()):
        psi_out.setdefault(str(s), {}).setdefault(str(t), {})[str(l)] = v
    return sol.objective, {"firstEchelon": first, "secondEchelon": second,
                           "psi": psi_out}


def integer_rmp_heuristic(inst: Instance, rmp: RmpState, sol, config: SolveConfig):
    """Solve the integer RMP over the current pool as a primal heuristic.

    Integrality is imposed on lambda and on per-(route, period) aggregates
    of the alpha variables (one auxiliary variable per aggregate), matching
    the binary requirements of the formulation.
    """
    lp = copy.deepcopy(rmp.lp)
    groups: dict = {}
    for key, j in rmp.pool.items():
        col = rmp.columns[key]
        seq = col.seq if col.seq <= col.seq[::-1] else col.seq[::-1]
        groups.setdefault((col.period, col.satellite, seq), []).append(j)
    int_cols = list(rmp.lam.values())
    for gkey, js in sorted(groups.items()):
        row = lp.add_row("=", 0.0, {j: -1.0 for j in js})
        u = lp.add_col(0.0, {row: 1.0}, 0.0, float(inst.k2))
        int_cols.append(u)
    msol = lp.solve_milp(int_cols, time_limit=config.milp_time)
    if msol.status != "optimal" or msol.objective >= ARTIFICIAL_COST / 2:
        return None
    obj, sol_dict = extract_solution(inst, rmp, _wrap(msol))
    if sol_dict is None or math.isnan(obj):
        return None
    return obj, sol_dict


def _wrap(msol):
    class _V:
        pass
    v = _V()
    v.x = msol.x
    v.objective = msol.objective
    return v

"""Independent optimality oracle and solution validator.

The oracle solves tiny instances exactly with a compact arc-flow model
(binary arc variables plus vehicle-load flows for route connectivity,
aggregate inventory balances for the inventory side) handed to scipy's
MILP solver. It shares no code with the column-generation solver beyond
the instance model, so agreement between the two is meaningful evidence.

Customer holding costs are charged on inventory net of the residual initial
inventory: the route-based objective never prices the initial stock sitting
at customers (a constant), and the oracle must match that convention.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import LinearConstraint, milp, Bounds

from teirp.lp import LinearProgram
from teirp.model import Instance, InstanceError

ORACLE_MAX_CUSTOMERS = 5
ORACLE_MAX_TAU = 3
ORACLE_MAX_SATELLITES = 2


def first_echelon_options(inst: Instance):
    """(supplier, satellite subset, cost) for every subset; brute-force TSP."""
    out = []
    for u in inst.suppliers:
        sats = inst.satellites
        for r in range(1, len(sats) + 1):
            for subset in itertools.combinations(sats, r):
                best = math.inf
                for perm in itertools.permutations(subset):
                    stops = (u,) + perm + (u,)
                    cost = sum(inst.edge_cost(a, b) for a, b in zip(stops, stops[1:]))
                    best = min(best, cost)
                out.append((u, subset, best))
    return out


class _Compact:
    """Compact arc-flow model shared by the MILP oracle and the LP bound."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integer: list[bool] = []
        self.rows: list[tuple[str, float, dict[int, float]]] = []
        self.var = {}
        self._build()

    def _new(self, name, obj=0.0, lb=0.0, ub=math.inf, integer=False):
        j = len(self.obj)
        self.obj.append(obj)
        self.lb.append(lb)
        self.ub.append(ub)
        self.integer.append(integer)
        self.var[name] = j
        return j

    def _row(self, sense, rhs, coeffs):
        self.rows.append((sense, float(rhs), {j: v for j, v in coeffs.items() if v}))

    def _build(self):
        inst = self.inst
        T = list(inst.periods)
        self.options = first_echelon_options(inst)
        # variables
        for p, (u, subset, cost) in enumerate(self.options):
            for t in T:
                self._new(("z", p, t), obj=cost, ub=1.0, integer=True)
                for s in subset:
                    self._new(("fin", p, s, t))
        for s in inst.satellites:
            for t in T:
                self._new(("invS", s, t), obj=inst.hold[s])
                for i in (s, *inst.customers):
                    for j in (s, *inst.customers):
                        if i != j and not (i == s and j == s):
                            self._new(("a", s, t, i, j), obj=inst.edge_cost(i, j),
                                      ub=1.0, integer=True)
                            self._new(("fl", s, t, i, j))
                for c in inst.customers:
                    self._new(("q", c, s, t))
        for c in inst.customers:
            for t in T:
                self._new(("invC", c, t), obj=inst.hold[c])
        # the route model never charges holding on customers' initial stock
        self.const = -sum(inst.hold[c] * sum(inst.residual_inventory(c)[:inst.tau])
                          for c in inst.customers)

        v = self.var
        for t in T:
            self._row("<=", inst.k1,
                      {v[("z", p, t)]: 1.0 for p in range(len(self.options))})
            self._row("<=", inst.k2,
                      {v[("a", s, t, s, c)]: 1.0
                       for s in inst.satellites for c in inst.customers})
        for p, (u, subset, cost) in enumerate(self.options):
            for t in T:
                coeffs = {v[("fin", p, s, t)]: 1.0 for s in subset}
                coeffs[v[("z", p, t)]] = -float(inst.q1)
                self._row("<=", 0.0, coeffs)
        for s in inst.satellites:
            mem = [p for p, (u, sub, _) in enumerate(self.options) if s in sub]
            for t in T:
                self._row("<=", 1.0, {v[("z", p, t)]: 1.0 for p in mem})
                # ML policy: level right after replenishment fits the capacity
                coeffs = {v[("fin", p, s, t)]: 1.0 for p in mem}
                rhs = inst.cap[s]
                if t > 1:
                    coeffs[v[("invS", s, t - 1)]] = 1.0
                else:
                    rhs -= inst.init_inv[s]
                self._row("<=", rhs, coeffs)
                # balance: inv_t = inv_{t-1} + in - net outflow
                coeffs = {v[("invS", s, t)]: 1.0}
                for p in mem:
                    coeffs[v[("fin", p, s, t)]] = -1.0
                for c in inst.customers:
                    coeffs[v[("fl", s, t, s, c)]] = 1.0
                    coeffs[v[("fl", s, t, c, s)]] = -1.0
                rhs = 0.0
                if t > 1:
                    coeffs[v[("invS", s, t - 1)]] = -1.0
                else:
                    rhs = inst.init_inv[s]
                self._row("=", rhs, coeffs)
                nodes = (s, *inst.customers)
                for i in nodes:
                    for j in nodes:
                        if i == j or (i == s and j == s):
                            continue
                        self._row("<=", 0.0, {v[("fl", s, t, i, j)]: 1.0,
                                              v[("a", s, t, i, j)]: -float(inst.q2)})
                for c in inst.customers:
                    ins = {v[("a", s, t, i, c)]: 1.0 for i in nodes if i != c}
                    outs = {v[("a", s, t, c, j)]: -1.0 for j in nodes if j != c}
                    self._row("=", 0.0, {**ins, **outs})
                    coeffs = {v[("fl", s, t, i, c)]: 1.0 for i in nodes if i != c}
                    for j in nodes:
                        if j != c:
                            coeffs[v[("fl", s, t, c, j)]] = -1.0
                    coeffs[v[("q", c, s, t)]] = -1.0
                    self._row("=", 0.0, coeffs)
        for c in inst.customers:
            for t in T:
                self._row("<=", 1.0,
                          {v[("a", s, t, i, c)]: 1.0
                           for s in inst.satellites
                           for i in (s, *inst.customers) if i != c})
                # ML policy at the customer
                coeffs = {v[("q", c, s, t)]: 1.0 for s in inst.satellites}
                rhs = inst.cap[c]
                if t > 1:
                    coeffs[v[("invC", c, t - 1)]] = 1.0
                else:
                    rhs -= inst.init_inv[c]
                self._row("<=", rhs, coeffs)
                coeffs = {v[("invC", c, t)]: 1.0}
                for s in inst.satellites:
                    coeffs[v[("q", c, s, t)]] = -1.0
                rhs = -float(inst.demand[c][t - 1])
                if t > 1:
                    coeffs[v[("invC", c, t - 1)]] = -1.0
                else:
                    rhs += inst.init_inv[c]
                self._row("=", rhs, coeffs)

    def to_scipy(self):
        n = len(self.obj)
        data, ri, ci, lo, hi = [], [], [], [], []
        for k, (sense, rhs, coeffs) in enumerate(self.rows):
            for j, val in coeffs.items():
                ri.append(k)
                ci.append(j)
                data.append(val)
            lo.append(rhs if sense in ("=", ">=") else -math.inf)
            hi.append(rhs if sense in ("=", "<=") else math.inf)
        A = sp.csr_matrix((data, (ri, ci)), shape=(len(self.rows), n))
        return (np.array(self.obj), LinearConstraint(A, lo, hi),
                np.array(self.integer, dtype=float),
                Bounds(np.array(self.lb), np.array(self.ub)))


def _guard(inst: Instance):
    if (len(inst.customers) > ORACLE_MAX_CUSTOMERS or inst.tau > ORACLE_MAX_TAU
            or len(inst.satellites) > ORACLE_MAX_SATELLITES):
        raise InstanceError("oracle refuses instances above its size guard")


def oracle_solve(inst: Instance):
    """Exact optimum of a micro instance: (objective, solution dict)."""
    _guard(inst)
    model = _Compact(inst)
    c, lin, integrality, bounds = model.to_scipy()
    res = milp(c=c, constraints=[lin], integrality=integrality, bounds=bounds,
               options={"time_limit": 300})
    if res.status != 0:
        raise InstanceError(f"oracle MILP failed: {res.message}")
    objective = float(res.fun) + model.const
    solution = _extract(inst, model, res.x)
    audit = _audit_cost(inst, solution)
    if not math.isclose(audit, objective, rel_tol=1e-6, abs_tol=1e-6):
        raise InstanceError(f"oracle extraction mismatch: {audit} vs {objective}")
    solution["objective"] = audit
    return objective, solution


def compact_lp_bound(inst: Instance) -> float:
    """LP relaxation bound of the compact model, via the embedded simplex."""
    _guard(inst)
    model = _Compact(inst)
    lp = LinearProgram()
    for j in range(len(model.obj)):
        lp.add_col(model.obj[j], {}, lb=model.lb[j],
                   ub=model.ub[j] if math.isfinite(model.ub[j]) else math.inf)
    for sense, rhs, coeffs in model.rows:
        lp.add_row(sense, rhs, coeffs)
    sol = lp.solve(warm=False)
    if not sol.optimal:
        raise InstanceError(f"compact LP not optimal: {sol.status}")
    return sol.objective + model.const


# -- solution extraction -------------------------------------------------------

def _extract(inst: Instance, model: _Compact, x: np.ndarray) -> dict:
    v = model.var
    first = {}
    second = {}
    for t in inst.periods:
        routes1 = []
        for p, (u, subset, cost) in enumerate(model.options):
            if x[v[("z", p, t)]] > 0.5:
                deliveries = {s: float(x[v[("fin", p, s, t)]]) for s in subset}
                best = min(itertools.permutations(subset),
                           key=lambda perm: sum(inst.edge_cost(a, b) for a, b in
                                                zip((u,) + perm + (u,), perm + (u,))))
                routes1.append({"supplier": u, "satellites": list(best),
                                "deliveries": {str(s): q for s, q in deliveries.items()}})
        first[str(t)] = routes1
        routes2 = []
        for s in inst.satellites:
            nodes = (s, *inst.customers)
            succ = {}
            for i in nodes:
                for j in nodes:
                    if i != j and not (i == s and j == s):
                        if x[v[("a", s, t, i, j)]] > 0.5:
                            succ.setdefault(i, []).append(j)
            for start in sorted(succ.get(s, [])):
                seq = [start]
                while seq[-1] != s:
                    nxts = succ.get(seq[-1], [])
                    if not nxts:
                        break
                    seq.append(nxts.pop(0))
                    if seq[-1] == s:
                        seq.pop()
                        break
                q = {str(c): float(x[v[("q", c, s, t)]]) for c in seq}
                routes2.append({"satellite": s, "seq": seq, "q": q})
        second[str(t)] = routes2
    psi = _psi_fifo(inst, first, second)
    return {"firstEchelon": first, "secondEchelon": second, "psi": psi}


def _psi_fifo(inst: Instance, first: dict, second: dict) -> dict:
    """Attribute satellite outflows to arrival periods first-in-first-out."""
    psi = {}
    for s in inst.satellites:
        arrivals = [[0, float(inst.init_inv[s])]]
        cells = {}
        for t in inst.periods:
            for r in first.get(str(t), ()):
                got = float(r["deliveries"].get(str(s), 0.0))
                if got > 1e-12:
                    arrivals.append([t, got])
            out = sum(sum(r["q"].values()) for r in second.get(str(t), ())
                      if r["satellite"] == s)
            for slot in arrivals:
                if out <= 1e-12:
                    break
                take = min(slot[1], out)
                if take > 1e-12:
                    cells[(t, slot[0])] = cells.get((t, slot[0]), 0.0) + take
                    slot[1] -= take
                    out -= take
        for slot in arrivals:
            if slot[1] > 1e-12:
                key = (inst.tau + 1, slot[0])
                cells[key] = cells.get(key, 0.0) + slot[1]
        psi[str(s)] = {}
        for (t, l), qty in sorted(cells.items()):
            psi[str(s)].setdefault(str(t), {})[str(l)] = qty
    return psi


def _audit_cost(inst: Instance, solution: dict) -> float:
    total = 0.0
    inv_s = {s: float(inst.init_inv[s]) for s in inst.satellites}
    inv_c = {c: float(inst.init_inv[c]) for c in inst.customers}
    for t in inst.periods:
        for r in solution["firstEchelon"].get(str(t), ()):
            stops = [r["supplier"], *r["satellites"], r["supplier"]]
            total += sum(inst.edge_cost(a, b) for a, b in zip(stops, stops[1:]))
            for s_str, qty in r["deliveries"].items():
                inv_s[int(s_str)] += qty
        for r in solution["secondEchelon"].get(str(t), ()):
            s = r["satellite"]
            stops = [s, *r["seq"], s]
            total += sum(inst.edge_cost(a, b) for a, b in zip(stops, stops[1:]))
            for c_str, qty in r["q"].items():
                inv_s[s] -= qty
                inv_c[int(c_str)] += qty
        for s in inst.satellites:
            total += inst.hold[s] * inv_s[s]
        for c in inst.customers:
            inv_c[c] -= inst.demand[c][t - 1]
            total += inst.hold[c] * (inv_c[c] - inst.residual_inventory(c)[t - 1])
    return total


# -- validator ----------------------------------------------------------------

def validate_solution(inst: Instance, report: dict) -> list[str]:
    """Check a solver report against every model constraint; [] means pass."""
    errs: list[str] = []
    sol = report.get("solution", report)
    for key in ("firstEchelon", "secondEchelon"):
        if key not in sol:
            return [f"schema: missing solution key {key!r}"]

    inv_s = {s: float(inst.init_inv[s]) for s in inst.satellites}
    inv_c = {c: float(inst.init_inv[c]) for c in inst.customers}
    travel = 0.0
    hold = 0.0
    for t in inst.periods:
        routes1 = sol["firstEchelon"].get(str(t), [])
        if len(routes1) > inst.k1:
            errs.append(f"t={t}: {len(routes1)} first-echelon routes > K1={inst.k1}")
        seen_s = set()
        for r in routes1:
            qty = sum(r["deliveries"].values())
            if qty > inst.q1 + 1e-6:
                errs.append(f"t={t}: first-echelon load {qty} > Q1={inst.q1}")
            for s_str, q in r["deliveries"].items():
                s = int(s_str)
                if s in seen_s and q > 1e-9:
                    errs.append(f"t={t}: satellite {s} replenished twice")
                seen_s.add(s)
                inv_s[s] += q
                if inv_s[s] > inst.cap[s] + 1e-6:
                    errs.append(f"t={t}: satellite {s} exceeds capacity")
            stops = [r["supplier"], *r["satellites"], r["supplier"]]
            travel += sum(inst.edge_cost(a, b) for a, b in zip(stops, stops[1:]))
        routes2 = sol["secondEchelon"].get(str(t), [])
        if len(routes2) > inst.k2:
            errs.append(f"t={t}: {len(routes2)} second-echelon routes > K2={inst.k2}")
        seen_c = set()
        for r in routes2:
            s = int(r["satellite"])
            load = sum(r["q"].values())
            if load > inst.q2 + 1e-6:
                errs.append(f"t={t}: route load {load} > Q2={inst.q2}")
            for c in r["seq"]:
                if c in seen_c:
                    errs.append(f"t={t}: customer {c} visited twice")
                seen_c.add(c)
            for c_str, q in r["q"].items():
                c = int(c_str)
                inv_s[s] -= q
                inv_c[c] += q
                if inv_c[c] > inst.cap[c] + 1e-6:
                    errs.append(f"t={t}: customer {c} exceeds capacity")
            if inv_s[s] < -1e-6:
                errs.append(f"t={t}: satellite {s} inventory negative")
            stops = [s, *r["seq"], s]
            travel += sum(inst.edge_cost(a, b) for a, b in zip(stops, stops[1:]))
        for s in inst.satellites:
            hold += inst.hold[s] * inv_s[s]
        for c in inst.customers:
            inv_c[c] -= inst.demand[c][t - 1]
            if inv_c[c] < -1e-6:
                errs.append(f"t={t}: customer {c} demand not met")
            hold += inst.hold[c] * (inv_c[c] - inst.residual_inventory(c)[t - 1])
    psi = sol.get("psi")
    if psi is not None:
        for s in inst.satellites:
            tot0 = sum(float(by_l.get("0", 0.0))
                       for by_l in psi.get(str(s), {}).values())
            if abs(tot0 - inst.init_inv[s]) > 1e-6:
                errs.append(f"satellite {s}: initial-inventory split {tot0} != "
                            f"{inst.init_inv[s]}")
    reported = report.get("objective")
    if reported is not None and not math.isnan(reported):
        if abs(travel + hold - reported) > 1e-6 * max(1.0, abs(reported)):
            errs.append(f"cost audit: recomputed {travel + hold:.9f} != "
                        f"reported {reported:.9f}")
    return errs

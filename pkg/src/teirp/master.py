"""Restricted master problem and the column-generation loop.

The RMP is the LP relaxation of the route-based formulation: first-echelon
route variables lambda (one per enumerated route and period), satellite
transfer variables psi (quantity entering in period l, exiting in period t),
and one alpha variable per generated second-echelon column. Artificial
variables keep the covering rows feasible before real columns exist.

The loop alternates heuristic pricers (tabu search, then one of two
heuristic labelers) with exact labeling rounds; a subproblem that yields
nothing in an exact round is disabled until every subproblem comes up
empty in one round, after which all are re-enabled for a confirmation
round that must also come up empty before the bound is declared final.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from teirp.columns import Column, DualPrices, reduced_cost
from teirp.first_echelon import FirstEchelonRoute, enumerate_routes
from teirp.lp import LinearProgram, LpSolution, OPT_TOL
from teirp.model import Instance, InstanceError
from teirp.pricing import (PricingConfig, PricingGraph, enumerate_cdps,
                           solve_pricing)
from teirp.pricing_heur import heuristic_labeler_1, heuristic_labeler_2, tabu_pricer

ARTIFICIAL_COST = 1e7

log = logging.getLogger("teirp")
if os.environ.get("TEIRP_LOG") and not log.handlers:
    logging.basicConfig(level=os.environ["TEIRP_LOG"].upper())


@dataclass
class ColGenConfig:
    kappa: int = 5
    half_point: float = 0.5
    max_columns: int = 50
    rc_tol: float = OPT_TOL
    iteration_cap: int = 10000
    threads: int = 1
    use_heuristics: bool = True
    dominance: bool = True
    symmetry_break: bool = True

    def pricing(self) -> PricingConfig:
        return PricingConfig(kappa=self.kappa, half_point=self.half_point,
                             max_columns=self.max_columns, rc_tol=self.rc_tol,
                             dominance=self.dominance,
                             symmetry_break=self.symmetry_break)


class RmpState:
    """LP of the master plus bookkeeping for columns and branching rows."""

    def __init__(self, inst: Instance, routes: list[FirstEchelonRoute] | None = None):
        self.inst = inst
        self.routes = routes if routes is not None else enumerate_routes(inst)
        self.lp = LinearProgram()
        self.pool: dict = {}          # column key -> lp column index
        self.columns: dict = {}       # column key -> Column
        self.decisions: list = []     # active branching decisions
        self.branch_row: dict = {}    # decision key -> row index
        self.artificials: list[int] = []
        self._build_rows()
        self._build_base_columns()

    # -- construction -------------------------------------------------------

    def _build_rows(self):
        inst = self.inst
        T = list(inst.periods)
        self.r2 = {(s, t): self.lp.add_row("=", 0.0)
                   for s in inst.satellites for t in T}
        self.r3 = {}
        for c in inst.customers:
            for h in T:
                if inst.residual_demand(c)[h - 1] > 0:
                    self.r3[(c, h)] = self.lp.add_row("=", inst.residual_demand(c)[h - 1])
        self.r4 = {(s, t): self.lp.add_row("<=", inst.cap[s])
                   for s in inst.satellites for t in T}
        self.r5 = {}
        for c in inst.customers:
            for h in T:
                rhs = inst.cap[c] - inst.residual_inventory(c)[h - 1] - inst.demand[c][h - 1]
                self.r5[(c, h)] = self.lp.add_row("<=", rhs)
        self.r6 = {(p, t): self.lp.add_row("<=", inst.q1 * len(self.routes[p].satellites))
                   for p in range(len(self.routes)) for t in T}
        self.r7 = {(s, t): self.lp.add_row("<=", 1.0)
                   for s in inst.satellites for t in T}
        self.r8 = {(c, t): self.lp.add_row("<=", 1.0)
                   for c in inst.customers for t in T}
        self.r9 = {t: self.lp.add_row("<=", inst.k1) for t in T}
        self.r10 = {t: self.lp.add_row("<=", inst.k2) for t in T}
        self.r11 = {s: self.lp.add_row("=", inst.init_inv[s]) for s in inst.satellites}
        self.r12 = {(s, t): self.lp.add_row("<=", 0.0)
                    for s in inst.satellites for t in T}
        self.r19 = {(s, t): self.lp.add_row("<=", 0.0)
                    for s in inst.satellites for t in T}

    def _build_base_columns(self):
        inst = self.inst
        T = list(inst.periods)
        self.lam = {}
        for p, route in enumerate(self.routes):
            sats = route.satellites
            for t in T:
                coeffs = {self.r6[(p, t)]: float(inst.q1 * (len(sats) - 1)),
                          self.r9[t]: 1.0}
                for s in sats:
                    coeffs[self.r7[(s, t)]] = 1.0
                    coeffs[self.r12[(s, t)]] = -float(inst.q1)
                    coeffs[self.r19[(s, t)]] = 1.0
                self.lam[(p, t)] = self.lp.add_col(route.cost, coeffs, 0.0, 1.0)
        self.psi = {}
        for s in inst.satellites:
            for t in list(T) + [inst.tau + 1]:
                for l in range(0, min(t, inst.tau) + 1):
                    held = max(0, min(t - 1, inst.tau) - max(l, 1) + 1)
                    coeffs = {}
                    if t <= inst.tau:
                        coeffs[self.r2[(s, t)]] = 1.0
                    for k in T:
                        if l <= k <= t:
                            coeffs[self.r4[(s, k)]] = 1.0
                    if l >= 1:
                        for p, route in enumerate(self.routes):
                            if s in route.satellites:
                                coeffs[self.r6[(p, l)]] = 1.0
                        coeffs[self.r12[(s, l)]] = 1.0
                        coeffs[self.r19[(s, l)]] = -1.0
                    else:
                        coeffs[self.r11[s]] = 1.0
                    self.psi[(s, t, l)] = self.lp.add_col(inst.hold[s] * held, coeffs)
        for key, row in self.r3.items():
            self.artificials.append(self.lp.add_col(ARTIFICIAL_COST, {row: 1.0}))

    # -- columns -------------------------------------------------------------

    def column_coeffs(self, col: Column) -> dict[int, float]:
        inst = self.inst
        s, t = col.satellite, col.period
        coeffs = {self.r2[(s, t)]: -float(col.q_total), self.r10[t]: 1.0}
        qm = col.q_map()
        for (c, h), v in qm.items():
            if h <= inst.tau:
                coeffs[self.r3[(c, h)]] = coeffs.get(self.r3[(c, h)], 0.0) + v
        for c in set(col.seq):
            for h in inst.gamma_plus(c, t):
                if h > inst.tau:
                    continue
                b = sum(v for (cc, l), v in qm.items() if cc == c and l > h)
                if b:
                    coeffs[self.r5[(c, h)]] = coeffs.get(self.r5[(c, h)], 0.0) + b
        for c, mult in col.visits().items():
            coeffs[self.r8[(c, t)]] = coeffs.get(self.r8[(c, t)], 0.0) + mult
        for dec in self.decisions:
            row = self.branch_row.get(dec.key())
            if row is not None:
                v = dec.column_coefficient(col)
                if v:
                    coeffs[row] = coeffs.get(row, 0.0) + v
        return coeffs

    def add_column(self, col: Column) -> bool:
        key = col.key()
        if key in self.pool:
            return False
        if not self._column_allowed(col):
            return False
        j = self.lp.add_col(col.cost, self.column_coeffs(col))
        self.pool[key] = j
        self.columns[key] = col
        return True

    def _column_allowed(self, col: Column) -> bool:
        for dec in self.decisions:
            if not dec.column_allowed(col):
                return False
        return True

    def add_decision(self, dec) -> None:
        """Impose a branching decision: aggregate row plus column filtering."""
        self.decisions.append(dec)
        if dec.needs_row():
            coeffs = {}
            for (p, t), j in self.lam.items():
                v = dec.lambda_coefficient(self.routes[p], t)
                if v:
                    coeffs[j] = coeffs.get(j, 0.0) + v
            for key, j in self.pool.items():
                v = dec.column_coefficient(self.columns[key])
                if v:
                    coeffs[j] = coeffs.get(j, 0.0) + v
            row = self.lp.add_row(dec.sense, dec.rhs, coeffs)
            self.branch_row[dec.key()] = row
            if dec.sense == ">=":
                self.artificials.append(self.lp.add_col(ARTIFICIAL_COST, {row: 1.0}))
        for (p, t), j in self.lam.items():
            lo, hi = dec.lambda_bounds(self.routes[p], t)
            if lo is not None:
                self.lp.set_bounds(j, max(self.lp.lb[j], lo), min(self.lp.ub[j], hi))
        for key, j in self.pool.items():
            if not dec.column_allowed(self.columns[key]):
                self.lp.set_bounds(j, 0.0, 0.0)

    # -- solving / duals ------------------------------------------------------

    def solve(self, warm: bool = True) -> LpSolution:
        sol = self.lp.solve(warm=warm)
        return sol

    def duals(self, sol: LpSolution) -> DualPrices:
        y = sol.duals
        d = DualPrices()
        d.pi2 = {k: y[r] for k, r in self.r2.items()}
        d.pi3 = {k: y[r] for k, r in self.r3.items()}
        d.pi5 = {k: y[r] for k, r in self.r5.items()}
        d.pi8 = {k: y[r] for k, r in self.r8.items()}
        d.pi10 = {k: y[r] for k, r in self.r10.items()}
        d.branch = {key: y[r] for key, r in self.branch_row.items()}
        return d

    def artificial_value(self, sol: LpSolution) -> float:
        return sum(sol.x[j] for j in self.artificials)

    def alpha_values(self, sol: LpSolution) -> dict:
        return {key: sol.x[j] for key, j in self.pool.items() if sol.x[j] > 1e-12}

    def lambda_values(self, sol: LpSolution) -> dict:
        return {k: sol.x[j] for k, j in self.lam.items() if sol.x[j] > 1e-12}

    def psi_values(self, sol: LpSolution) -> dict:
        return {k: sol.x[j] for k, j in self.psi.items() if sol.x[j] > 1e-12}


def initial_columns(inst: Instance) -> list[Column]:
    """Greedy round trips covering each period's residual demand."""
    from teirp.columns import make_column
    cols = []
    for t in inst.periods:
        budget = {s: min(inst.cap[s], inst.init_inv[s] + inst.q1 * inst.k1)
                  for s in inst.satellites}
        sats = list(inst.satellites)
        cur = 0
        for c in inst.customers:
            if inst.residual_demand(c)[t - 1] == 0:
                continue
            need = min(inst.residual_demand(c)[t - 1], inst.subdelivery_ub(c, t, t))
            while need > 0:
                chunk = min(need, inst.q2)
                if budget[sats[cur]] < chunk and any(
                        budget[s] >= chunk for s in sats):
                    cur = min(range(len(sats)), key=lambda i: (-budget[sats[i]], i))
                s = sats[cur]
                budget[s] -= chunk
                cols.append(make_column(inst, s, t, (c,), {(c, t): chunk}))
                need -= chunk
    return cols


# -- pricing rounds ------------------------------------------------------------

class PricerBank:
    """Per-(s, t) pricing state shared across column-generation iterations."""

    def __init__(self, inst: Instance, config: ColGenConfig, mods_for=None):
        self.inst = inst
        self.config = config
        self.mods_for = mods_for or (lambda s, t, duals=None: None)
        self.subproblems = [(s, t) for s in inst.satellites for t in inst.periods]
        self.use_hl1 = {sp: True for sp in self.subproblems}

    def graph(self, s, t, duals) -> PricingGraph:
        return PricingGraph(self.inst, s, t, duals, mods=self.mods_for(s, t, duals),
                            kappa=self.config.kappa)

    def cdps(self, s, t, duals):
        return {c: enumerate_cdps(self.inst, s, t, c, duals)
                for c in self.inst.customers}

    def _run(self, fn, duals):
        def solve_one(sp):
            s, t = sp
            g = self.graph(s, t, duals)
            return fn(sp, g, self.cdps(s, t, duals))
        if self.config.threads > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as ex:
                results = list(ex.map(solve_one, self.subproblems))
        else:
            results = [solve_one(sp) for sp in self.subproblems]
        return dict(zip(self.subproblems, results))

    def heuristic_round(self, duals) -> dict:
        pc = self.config.pricing()

        def one(sp, g, cdps):
            cols = tabu_pricer(g, cdps, pc)
            if cols:
                return cols
            if self.use_hl1[sp]:
                cols = heuristic_labeler_1(g, cdps, pc)
                if cols:
                    return cols
                self.use_hl1[sp] = False
            return heuristic_labeler_2(g, cdps, pc)
        return self._run(one, duals)

    def exact_round(self, duals, enabled) -> tuple[dict, dict]:
        pc = self.config.pricing()

        def one(sp, g, cdps):
            if not enabled[sp]:
                return [], True
            return solve_pricing(g, cdps, pc)
        results = self._run(one, duals)
        cols = {sp: r[0] for sp, r in results.items()}
        complete = {sp: r[1] for sp, r in results.items()}
        return cols, complete


def run_column_generation(rmp: RmpState, config: ColGenConfig,
                          mods_for=None) -> LpSolution:
    """Alternating heuristic/exact pricing until no negative column exists."""
    inst = rmp.inst
    bank = PricerBank(inst, config, mods_for)
    sol = rmp.solve()
    if not sol.optimal:
        return sol
    iters = 0

    def add_all(col_map, duals) -> int:
        added = 0
        for sp in bank.subproblems:  # deterministic merge order
            for col in col_map.get(sp, ()):
                rc = reduced_cost(inst, col, duals, rmp.decisions)
                if rc < -config.rc_tol and rmp.add_column(col):
                    added += 1
        return added

    def trace(mode, added):
        log.debug("iter %d obj %.6f cols %d new %d mode %s",
                  iters, sol.objective, len(rmp.pool), added, mode)

    # phase 1: heuristics only, as long as they deliver
    while config.use_heuristics:
        iters += 1
        if iters > config.iteration_cap:
            raise InstanceError("column generation iteration cap exceeded")
        duals = rmp.duals(sol)
        added = add_all(bank.heuristic_round(duals), duals)
        trace("heuristic", added)
        if added == 0:
            break
        sol = rmp.solve()
        if not sol.optimal:
            return sol

    # phase 2: alternate exact and heuristic rounds
    enabled = {sp: True for sp in bank.subproblems}
    mode_exact = True
    stalled = 0
    while True:
        iters += 1
        if iters > config.iteration_cap:
            raise InstanceError("column generation iteration cap exceeded")
        duals = rmp.duals(sol)
        if mode_exact:
            all_enabled = all(enabled.values())
            col_map, complete = bank.exact_round(duals, enabled)
            added = add_all(col_map, duals)
            for sp in bank.subproblems:
                if enabled[sp] and complete[sp] and not col_map[sp]:
                    enabled[sp] = False
            trace("exact", added)
            if added == 0 and all(complete.values()):
                if all_enabled:
                    return sol
                enabled = {sp: True for sp in bank.subproblems}
                continue
            if added:
                stalled = 0
                sol = rmp.solve()
                if not sol.optimal:
                    return sol
            else:
                stalled += 1
                if stalled > 2:
                    raise InstanceError(
                        "column generation stalled: exact pricing aborted on a "
                        "label-count cap and heuristics found nothing")
            mode_exact = not config.use_heuristics
        else:
            added = add_all(bank.heuristic_round(duals), duals)
            trace("heuristic", added)
            if added:
                stalled = 0
                sol = rmp.solve()
                if not sol.optimal:
                    return sol
            mode_exact = True

"""Embedded LP/MILP engine.

Bounded-variable two-phase revised simplex, dense basis inverse with
periodic refactorization. Deterministic: Dantzig pricing with smallest-index
tie-breaking, Bland's rule after a long run of degenerate pivots. All solver
tolerances live in this module.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-6
INT_TOL = 1e-6
REFACTOR_EVERY = 100
BLAND_AFTER = 1000

INF = math.inf


@dataclass
class LpSolution:
    status: str                      # optimal | infeasible | unbounded | stalled | no_solution
    objective: float = math.nan
    x: np.ndarray | None = None      # structural columns only
    duals: np.ndarray | None = None  # one per row

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LinearProgram:
    """min c'x, rows A x {<=,=,>=} b, x in [lb, ub]. Rows/cols grow freely."""

    def __init__(self):
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.cols: list[dict[int, float]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self._basis: _Basis | None = None

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def n_cols(self) -> int:
        return len(self.obj)

    def add_row(self, sense: str, rhs: float, coeffs: dict[int, float] | None = None) -> int:
        """Add a row; coeffs may reference existing columns."""
        if sense not in ("<=", "=", ">="):
            raise ValueError(f"bad row sense {sense!r}")
        i = len(self.rhs)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        if coeffs:
            for j, v in coeffs.items():
                if v:
                    self.cols[j][i] = self.cols[j].get(i, 0.0) + v
        self._basis = None  # row structure changed; cold start next solve
        return i

    def add_col(self, obj: float, coeffs: dict[int, float],
                lb: float = 0.0, ub: float = INF) -> int:
        if not math.isfinite(lb):
            raise ValueError("column lower bounds must be finite")
        for i in coeffs:
            if not 0 <= i < self.n_rows:
                raise IndexError(f"row {i} out of range")
        j = len(self.obj)
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.cols.append({i: float(v) for i, v in coeffs.items() if v})
        return j

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        if lb > ub + FEAS_TOL:
            raise ValueError("lb > ub")
        self.lb[j] = float(lb)
        self.ub[j] = float(ub)

    def set_rhs(self, i: int, rhs: float) -> None:
        self.rhs[i] = float(rhs)

    # -- solving -----------------------------------------------------------

    def solve(self, warm: bool = True) -> LpSolution:
        sol, basis = _simplex(self, self._basis if warm else None)
        self._basis = basis
        return sol

    def solve_milp(self, integer_cols: list[int], time_limit: float = 60.0,
                   node_limit: int = 100000) -> LpSolution:
        """Depth-first branch-and-bound over integer_cols (primal heuristic).

        Branches on the most fractional integer variable. Returns the best
        integer-feasible solution found, or status 'no_solution'.
        """
        t0 = time.monotonic()
        saved = {j: (self.lb[j], self.ub[j]) for j in integer_cols}
        best: LpSolution | None = None
        stack: list[dict[int, tuple[float, float]]] = [{}]
        nodes = 0
        while stack and nodes < node_limit:
            if time.monotonic() - t0 > time_limit:
                break
            fixes = stack.pop()
            nodes += 1
            for j, (l, u) in fixes.items():
                self.set_bounds(j, l, u)
            sol = self.solve(warm=False)
            for j in fixes:
                self.set_bounds(j, *saved[j])
            if not sol.optimal:
                continue
            if best is not None and sol.objective >= best.objective - OPT_TOL:
                continue
            frac_j, frac_dist = -1, INT_TOL
            for j in integer_cols:
                dist = abs(sol.x[j] - round(sol.x[j]))
                if dist > frac_dist:
                    frac_j, frac_dist = j, dist
            if frac_j < 0:
                best = sol
                continue
            v = sol.x[frac_j]
            l0, u0 = fixes.get(frac_j, saved[frac_j])
            lo = dict(fixes)
            lo[frac_j] = (l0, math.floor(v + INT_TOL))
            hi = dict(fixes)
            hi[frac_j] = (math.ceil(v - INT_TOL), u0)
            stack.append(lo)
            stack.append(hi)
        if best is None:
            return LpSolution(status="no_solution")
        return best

    # -- debugging ---------------------------------------------------------

    def dump(self) -> str:
        lines = ["min " + " + ".join(f"{c:g} x{j}" for j, c in enumerate(self.obj) if c)]
        for i, (sense, b) in enumerate(zip(self.senses, self.rhs)):
            terms = [f"{col[i]:g} x{j}" for j, col in enumerate(self.cols) if i in col]
            lines.append(f"r{i}: " + " + ".join(terms) + f" {sense} {b:g}")
        for j, (l, u) in enumerate(zip(self.lb, self.ub)):
            lines.append(f"x{j} in [{l:g}, {u:g}]")
        return "\n".join(lines)


@dataclass
class _Basis:
    n_struct: int
    n_rows: int
    basic: list[int]
    at_upper: set[int] = field(default_factory=set)


def _simplex(lp: LinearProgram, basis: _Basis | None) -> tuple[LpSolution, _Basis | None]:
    m, n = lp.n_rows, lp.n_cols
    A = np.zeros((m, n + m))
    for j, col in enumerate(lp.cols):
        for i, v in col.items():
            A[i, j] = v
    lb = np.concatenate([np.array(lp.lb, dtype=float), np.zeros(m)])
    ub = np.concatenate([np.array(lp.ub, dtype=float), np.zeros(m)])
    c = np.concatenate([np.array(lp.obj, dtype=float), np.zeros(m)])
    b = np.array(lp.rhs, dtype=float)
    for i, sense in enumerate(lp.senses):
        A[i, n + i] = 1.0
        if sense == "<=":
            lb[n + i], ub[n + i] = 0.0, INF
        elif sense == ">=":
            lb[n + i], ub[n + i] = -INF, 0.0
        else:
            lb[n + i], ub[n + i] = 0.0, 0.0

    warm_ok = (basis is not None and basis.n_rows == m and basis.n_struct <= n
               and len(set(basis.basic)) == m)
    if warm_ok:
        # slack indices shift when columns were added since the basis was saved
        shift = n - basis.n_struct
        basic = [j if j < basis.n_struct else j + shift for j in basis.basic]
        at_upper = {j if j < basis.n_struct else j + shift for j in basis.at_upper}
        at_upper = {j for j in at_upper if math.isfinite(ub[j])}
    else:
        basic = [n + i for i in range(m)]
        at_upper = set()

    st = _State(A, b, c, lb, ub, basic, at_upper, n)
    status = st.run()
    new_basis = _Basis(n, m, [j for j in st.basic], set(st.at_upper))
    # drop artificial indices from the reusable basis
    if any(j >= n + m for j in new_basis.basic):
        new_basis = None
    if status != "optimal":
        return LpSolution(status=status), new_basis
    x = st.values()
    duals = st.duals(st.c)  # st.c may have grown by phase-1 artificial zeros
    obj = float(c[:n] @ x[:n]) if n else 0.0
    return LpSolution(status="optimal", objective=obj, x=x[:n].copy(), duals=duals), new_basis


class _State:
    """Simplex working state over the expanded (structural+slack+artificial) system."""

    def __init__(self, A, b, c, lb, ub, basic, at_upper, n_struct):
        self.A, self.b, self.c = A, b, c
        self.lb, self.ub = lb, ub
        self.basic = basic
        self.at_upper = at_upper
        self.n_struct = n_struct
        self.m = A.shape[0]
        self.Binv = None
        self.xb = None
        self.pivots_since_refactor = 0
        self.art_start = A.shape[1]  # artificials occupy indices >= art_start

    @property
    def n_total(self):
        return self.A.shape[1]

    def nonbasic_value(self, j: int) -> float:
        if j in self.at_upper:
            return self.ub[j]
        return self.lb[j] if math.isfinite(self.lb[j]) else 0.0

    def refactor(self) -> bool:
        B = self.A[:, self.basic]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        self.recompute_xb()
        self.pivots_since_refactor = 0
        return True

    def recompute_xb(self):
        rhs = self.b.copy()
        basic_set = set(self.basic)
        for j in range(self.n_total):
            if j not in basic_set:
                v = self.nonbasic_value(j)
                if v:
                    rhs -= v * self.A[:, j]
        self.xb = self.Binv @ rhs

    def values(self) -> np.ndarray:
        x = np.array([self.nonbasic_value(j) for j in range(self.n_total)])
        for k, j in enumerate(self.basic):
            x[j] = self.xb[k]
        return x

    def duals(self, cost) -> np.ndarray:
        return cost[self.basic] @ self.Binv

    def run(self) -> str:
        if not self.refactor():
            self.basic = [self.art_start - self.m + i for i in range(self.m)]
            self.at_upper = {j for j in self.at_upper if j < self.art_start - self.m}
            if not self.refactor():
                return "stalled"
        viol = [k for k in range(self.m)
                if self.xb[k] < self.lb[self.basic[k]] - FEAS_TOL
                or self.xb[k] > self.ub[self.basic[k]] + FEAS_TOL]
        if viol:
            status = self._phase1(viol)
            if status != "feasible":
                return status
        return self._iterate(self.c)

    def _phase1(self, viol_rows: list[int]) -> str:
        m, nt = self.m, self.n_total
        extra = len(viol_rows)
        art_cols = np.zeros((m, extra))
        c1 = np.zeros(nt + extra)
        for idx, k in enumerate(viol_rows):
            j = self.basic[k]
            sign = -1.0 if self.xb[k] < self.lb[j] else 1.0
            art_cols[:, idx] = sign * self.A[:, j]
            c1[nt + idx] = 1.0
        self.A = np.hstack([self.A, art_cols])
        self.lb = np.concatenate([self.lb, np.zeros(extra)])
        self.ub = np.concatenate([self.ub, np.full(extra, INF)])
        self.c = np.concatenate([self.c, np.zeros(extra)])
        # swap each violated basic out to its nearest bound
        for idx, k in enumerate(viol_rows):
            j = self.basic[k]
            if self.xb[k] > self.ub[j]:
                self.at_upper.add(j)
            else:
                self.at_upper.discard(j)
            self.basic[k] = nt + idx
        if not self.refactor():
            return "infeasible"
        status = self._iterate(c1, phase1=True)
        if status not in ("optimal", "unbounded"):
            return "infeasible"
        infeas = sum(self.xb[k] for k in range(m) if self.basic[k] >= nt)
        if infeas > 1e-6:
            return "infeasible"
        for j in range(nt, nt + extra):
            self.ub[j] = 0.0
            self.at_upper.discard(j)
        return "feasible"

    def _iterate(self, cost: np.ndarray, phase1: bool = False) -> str:
        m = self.m
        degenerate_run = 0
        it = 0
        max_it = 20000 + 50 * self.n_total
        finite_lb = np.isfinite(self.lb)
        while True:
            it += 1
            if it > max_it:
                return "stalled"
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                if not self.refactor():
                    return "stalled"
            y = cost[self.basic] @ self.Binv
            rc = cost - y @ self.A
            mask_basic = np.zeros(self.n_total, dtype=bool)
            mask_basic[self.basic] = True
            fixed = self.lb == self.ub
            upper = np.zeros(self.n_total, dtype=bool)
            if self.at_upper:
                upper[list(self.at_upper)] = True
            can_inc = ~mask_basic & ~fixed & ~upper & (rc < -OPT_TOL)
            can_dec = ~mask_basic & ~fixed & upper & (rc > OPT_TOL)
            if not can_inc.any() and not can_dec.any():
                return "optimal"
            if degenerate_run >= BLAND_AFTER:
                cands = np.flatnonzero(can_inc | can_dec)
                enter = int(cands[0])
            else:
                score = np.where(can_inc, rc, np.where(can_dec, -rc, 0.0))
                enter = int(np.argmin(score))
            direction = -1 if upper[enter] else +1

            w = self.Binv @ self.A[:, enter]
            limit = INF
            if math.isfinite(self.ub[enter]) and math.isfinite(self.lb[enter]):
                limit = self.ub[enter] - self.lb[enter]
            leave_k = -1
            leave_to_upper = False
            for k in range(m):
                j = self.basic[k]
                delta = direction * w[k]
                if delta > 1e-10:
                    room = (self.xb[k] - self.lb[j]) / delta if finite_lb[j] else INF
                    hit_upper = False
                elif delta < -1e-10:
                    room = (self.ub[j] - self.xb[k]) / (-delta) if math.isfinite(self.ub[j]) else INF
                    hit_upper = True
                else:
                    continue
                if room < limit - 1e-10:
                    limit = max(room, 0.0)
                    leave_k = k
                    leave_to_upper = hit_upper
            if math.isinf(limit):
                return "unbounded"
            degenerate_run = degenerate_run + 1 if limit <= FEAS_TOL else 0
            if leave_k < 0:
                # entering variable flips bound without a basis change
                self.xb -= direction * limit * w
                if direction > 0:
                    self.at_upper.add(enter)
                else:
                    self.at_upper.discard(enter)
                continue
            leaving = self.basic[leave_k]
            enter_val = self.nonbasic_value(enter) + direction * limit
            self.xb -= direction * limit * w
            self.xb[leave_k] = enter_val
            self.basic[leave_k] = enter
            self.at_upper.discard(enter)
            if leave_to_upper and math.isfinite(self.ub[leaving]):
                self.at_upper.add(leaving)
            else:
                self.at_upper.discard(leaving)
            piv = w[leave_k]
            if abs(piv) < 1e-11:
                if not self.refactor():
                    return "stalled"
                continue
            self.Binv[leave_k, :] /= piv
            col = w.copy()
            col[leave_k] = 0.0
            self.Binv -= np.outer(col, self.Binv[leave_k, :])
            self.pivots_since_refactor += 1

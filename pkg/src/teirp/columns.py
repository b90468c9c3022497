"""Second-echelon columns: a route plus an extreme delivery pattern.

A column belongs to one (satellite, period) pair. Its sequence may repeat a
customer when priced under the neighborhood relaxation; coefficients then
count visits with multiplicity, which keeps the master a valid relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from teirp.model import Instance

RC_TOL = 1e-6


@dataclass(frozen=True)
class Column:
    satellite: int
    period: int
    seq: tuple[int, ...]                     # customer visit order
    q: tuple[tuple[int, int, int], ...]      # sorted ((c, h, qty)) with qty > 0
    cost: float                              # f_rw: travel + customer holding
    travel: float
    q_total: int

    def key(self):
        """Dedup key: direction-insensitive route plus delivery vector."""
        seq = self.seq if self.seq <= self.seq[::-1] else self.seq[::-1]
        return (self.satellite, self.period, seq, self.q)

    def q_map(self) -> dict[tuple[int, int], int]:
        return {(c, h): v for c, h, v in self.q}

    def visits(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for c in self.seq:
            out[c] = out.get(c, 0) + 1
        return out

    def edges(self) -> dict[tuple[int, int], int]:
        """Undirected edge usage counts, satellite arcs included."""
        out: dict[tuple[int, int], int] = {}
        path = (self.satellite,) + self.seq + (self.satellite,)
        for i, j in zip(path, path[1:]):
            e = (i, j) if i <= j else (j, i)
            out[e] = out.get(e, 0) + 1
        return out


def route_travel_cost(inst: Instance, s: int, seq: tuple[int, ...]) -> float:
    if not seq:
        return 0.0
    cost = inst.edge_cost(s, seq[0]) + inst.edge_cost(seq[-1], s)
    for i, j in zip(seq, seq[1:]):
        cost += inst.edge_cost(i, j)
    return cost


def column_cost(inst: Instance, s: int, seq: tuple[int, ...],
                q: dict[tuple[int, int], int], t: int) -> tuple[float, int, float]:
    """(f_rw, q_w, travel) for route seq with sub-deliveries q at period t.

    Holding at a customer is charged on every delivered unit for each period
    it sits in inventory: a unit dedicated to period l delivered at t is held
    at the end of periods t..l-1.
    """
    travel = route_travel_cost(inst, s, seq)
    hold = 0.0
    for (c, h), v in q.items():
        if v < 0:
            raise ValueError(f"negative sub-delivery for {(c, h)}")
        # held at end of periods t..min(h-1, tau)
        hold += inst.hold[c] * v * (min(h - 1, inst.tau) - t + 1)
    return travel + hold, sum(q.values()), travel


def make_column(inst: Instance, s: int, t: int, seq: tuple[int, ...],
                q: dict[tuple[int, int], int]) -> Column:
    q_items = tuple(sorted((c, h, v) for (c, h), v in q.items() if v > 0))
    cost, q_total, travel = column_cost(inst, s, seq, {(c, h): v for c, h, v in q_items}, t)
    return Column(satellite=s, period=t, seq=tuple(seq), q=q_items,
                  cost=cost, travel=travel, q_total=q_total)


@dataclass
class DualPrices:
    """Dual values of the master rows, keyed the way pricing consumes them."""
    pi2: dict[tuple[int, int], float] = field(default_factory=dict)   # (s, t)
    pi3: dict[tuple[int, int], float] = field(default_factory=dict)   # (c, h), h <= tau
    pi5: dict[tuple[int, int], float] = field(default_factory=dict)   # (c, h)
    pi8: dict[tuple[int, int], float] = field(default_factory=dict)   # (c, t)
    pi10: dict[int, float] = field(default_factory=dict)              # t
    branch: dict[object, float] = field(default_factory=dict)         # decision key -> dual


def rho(inst: Instance, duals: DualPrices, s: int, t: int, c: int, h: int) -> float:
    """Per-unit reduced-cost contribution of a sub-delivery to (c, h) from (s, t)."""
    v = duals.pi2.get((s, t), 0.0)
    if h <= inst.tau:
        v -= duals.pi3.get((c, h), 0.0)
    for l in inst.gamma_plus(c, t):
        if l < h:
            v -= duals.pi5.get((c, l), 0.0)
    v += inst.hold[c] * (h - t)  # held at end of periods t..h-1
    return v


def reduced_cost(inst: Instance, col: Column, duals: DualPrices,
                 decisions=()) -> float:
    """Reduced cost of a column, assembled from the pricing dual formula."""
    s, t = col.satellite, col.period
    rc = col.cost + col.q_total * duals.pi2.get((s, t), 0.0)
    for c, h, v in col.q:
        if h <= inst.tau:
            rc -= v * duals.pi3.get((c, h), 0.0)
        for l in inst.gamma_plus(c, t):
            if l < h:
                rc -= v * duals.pi5.get((c, l), 0.0)
    for c, mult in col.visits().items():
        rc -= mult * duals.pi8.get((c, t), 0.0)
    rc -= duals.pi10.get(t, 0.0)
    for dec in decisions:
        dual = duals.branch.get(dec.key(), 0.0)
        if dual:
            rc -= dual * dec.column_coefficient(col)
    return rc

"""Pre-enumeration of non-dominated first-echelon routes.

One route per nonempty satellite subset: the cheapest closed tour over the
subset, minimized over all suppliers (Held-Karp per supplier, ties broken by
the lower supplier id).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from teirp.model import Instance


@dataclass(frozen=True)
class FirstEchelonRoute:
    supplier: int
    seq: tuple[int, ...]   # satellite visit order
    cost: float

    @property
    def satellites(self) -> frozenset:
        return frozenset(self.seq)


def _tsp(inst: Instance, u: int, sats: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
    """Min-cost closed tour u -> sats -> u by subset DP."""
    n = len(sats)
    if n == 1:
        return 2.0 * inst.edge_cost(u, sats[0]), sats
    # dp[(mask, i)] = (cost, order) of best path u -> ... -> sats[i] over mask
    dp: dict[tuple[int, int], tuple[float, tuple[int, ...]]] = {}
    for i in range(n):
        dp[(1 << i, i)] = (inst.edge_cost(u, sats[i]), (sats[i],))
    for mask in range(1, 1 << n):
        for i in range(n):
            if not mask & (1 << i) or (mask, i) not in dp:
                continue
            base_cost, order = dp[(mask, i)]
            for j in range(n):
                if mask & (1 << j):
                    continue
                nm = mask | (1 << j)
                cand = (base_cost + inst.edge_cost(sats[i], sats[j]), order + (sats[j],))
                if (nm, j) not in dp or cand < dp[(nm, j)]:
                    dp[(nm, j)] = cand
    full = (1 << n) - 1
    best = min(
        (dp[(full, i)][0] + inst.edge_cost(sats[i], u), dp[(full, i)][1])
        for i in range(n)
    )
    return best


def enumerate_routes(inst: Instance) -> list[FirstEchelonRoute]:
    """One route per nonempty satellite subset, cheapest over all suppliers."""
    routes = []
    sats = inst.satellites
    for r in range(1, len(sats) + 1):
        for subset in itertools.combinations(sats, r):
            best = None
            for u in sorted(inst.suppliers):
                cost, order = _tsp(inst, u, subset)
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, u, order)
            routes.append(FirstEchelonRoute(supplier=best[1], seq=best[2], cost=best[0]))
    return routes

"""Heuristic column generators for one (satellite, period) subproblem.

Three pricers, all sound (columns are only emitted with negative arc-based
reduced cost; the master re-verifies) but not complete:

  * tabu_pricer: local search over customer sequences with insert / remove /
    position-swap moves; every route is evaluated with a greedy best CDP
    assignment.
  * heuristic_labeler_1: exact labeling restricted to the k customers with
    the cheapest single-customer round trips.
  * heuristic_labeler_2: beam of width one -- each label keeps only its
    single best extension, scored ignoring partial deliveries.
"""

from __future__ import annotations

import copy

from teirp.columns import Column, make_column
from teirp.pricing import CDP, PricingConfig, PricingGraph, solve_pricing


def _route_arc_cost(graph: PricingGraph, seq) -> float:
    if seq[0] not in graph.src_cost or seq[-1] not in graph.snk_cost:
        return float("inf")
    cost = graph.src_cost[seq[0]] + graph.snk_cost[seq[-1]]
    for i, j in zip(seq, seq[1:]):
        arc = graph.arc_cost.get((i, j))
        if arc is None:
            return float("inf")
        cost += arc
    return cost


def evaluate_route(graph: PricingGraph, cdps: dict[int, list[CDP]], seq):
    """(reduced cost, q-vector) for a fixed sequence with greedy CDPs.

    Each customer gets its cheapest no-partial CDP; then the single partial
    upgrade with the largest saving (if any fits) replaces one of them.
    """
    q2 = graph.inst.q2
    arc = _route_arc_cost(graph, seq)
    if arc == float("inf"):
        return float("inf"), {}
    chosen: dict[int, CDP] = {}
    for c in seq:
        full = [g for g in cdps.get(c, ()) if g.part == 0]
        if not full:
            return float("inf"), {}
        chosen[c] = min(full, key=lambda g: (g.cost, g.load))
    load = sum(g.load for g in chosen.values())
    if load > q2:
        return float("inf"), {}
    base = arc + sum(g.cost for g in chosen.values())
    best_gain, best_sub = 0.0, None
    for c in seq:
        for g in cdps.get(c, ()):
            if g.part == 0:
                continue
            new_load = load - chosen[c].load + g.load
            if new_load > q2:
                continue
            pq = min(g.maxp, q2 - new_load)
            gain = (g.cost + g.rate * pq) - chosen[c].cost
            if gain < best_gain - 1e-12:
                best_gain, best_sub = gain, (c, g, pq)
    q: dict[tuple[int, int], int] = {}
    if best_sub is not None:
        c, g, pq = best_sub
        chosen[c] = g
        if pq > 0:
            q[(c, g.part_h)] = pq
    for c, g in chosen.items():
        for h in g.full_hs:
            q[(c, h)] = q.get((c, h), 0) + graph.inst.subdelivery_ub(c, graph.t, h)
    return base + best_gain, q


def _emit(graph: PricingGraph, seq, q) -> Column:
    return make_column(graph.inst, graph.s, graph.t, tuple(seq), q)


def tabu_pricer(graph: PricingGraph, cdps: dict[int, list[CDP]],
                config: PricingConfig, tenure: int = 7,
                iterations: int = 100) -> list[Column]:
    """Tabu search over customer sequences; deterministic greedy move choice."""
    customers = [c for c in graph.customers if c in graph.src_cost]
    if not customers:
        return []
    start = min(customers,
                key=lambda c: (evaluate_route(graph, cdps, (c,))[0], c))
    route = [start]
    best_rc = evaluate_route(graph, cdps, tuple(route))[0]
    tabu: dict[int, int] = {}  # customer -> expiry iteration
    found: dict = {}

    def record(seq, rc, q):
        if rc < -config.rc_tol:
            col = _emit(graph, seq, q)
            prev = found.get(col.key())
            if prev is None or rc < prev[0]:
                found[col.key()] = (rc, col)

    rc0, q0 = evaluate_route(graph, cdps, tuple(route))
    record(route, rc0, q0)
    for it in range(1, iterations + 1):
        moves = []  # (rc, order, new_route, moved customer, q)
        order = 0
        for c in customers:
            if c in route:
                continue
            for pos in range(len(route) + 1):
                cand = route[:pos] + [c] + route[pos:]
                rc, q = evaluate_route(graph, cdps, tuple(cand))
                moves.append((rc, order, cand, c, q))
                order += 1
        if len(route) > 1:
            for i, c in enumerate(route):
                cand = route[:i] + route[i + 1:]
                rc, q = evaluate_route(graph, cdps, tuple(cand))
                moves.append((rc, order, cand, c, q))
                order += 1
            for i in range(len(route)):
                for j in range(i + 1, len(route)):
                    cand = list(route)
                    cand[i], cand[j] = cand[j], cand[i]
                    rc, q = evaluate_route(graph, cdps, tuple(cand))
                    moves.append((rc, order, cand, cand[i], q))
                    order += 1
        moves.sort(key=lambda m: (m[0], m[1]))
        picked = None
        for rc, _, cand, c, q in moves:
            if rc == float("inf"):
                continue
            if tabu.get(c, 0) >= it and rc >= best_rc - 1e-12:
                continue  # tabu and no aspiration
            picked = (rc, cand, c, q)
            break
        if picked is None:
            break
        rc, route, moved, q = picked
        tabu[moved] = it + tenure
        best_rc = min(best_rc, rc)
        record(route, rc, q)
    ranked = sorted(found.values(), key=lambda rec: (rec[0], rec[1].seq))
    return [col for _, col in ranked[:config.max_columns]]


def _restrict(graph: PricingGraph, subset) -> PricingGraph:
    sub = copy.copy(graph)
    keep = set(subset)
    sub.customers = tuple(c for c in graph.customers if c in keep)
    sub.src_cost = {c: v for c, v in graph.src_cost.items() if c in keep}
    sub.snk_cost = {c: v for c, v in graph.snk_cost.items() if c in keep}
    sub.arc_cost = {(i, j): v for (i, j), v in graph.arc_cost.items()
                    if i in keep and j in keep}
    return sub


def heuristic_labeler_1(graph: PricingGraph, cdps: dict[int, list[CDP]],
                        config: PricingConfig, k: int = 5) -> list[Column]:
    """Exact labeling on the k customers with cheapest round-trip columns."""
    scores = []
    for c in graph.customers:
        rc, _ = evaluate_route(graph, cdps, (c,))
        scores.append((rc, c))
    scores.sort()
    subset = [c for rc, c in scores[:k] if rc < float("inf")]
    if not subset:
        return []
    sub = _restrict(graph, subset)
    cols, _ = solve_pricing(sub, cdps, config)
    return cols


def heuristic_labeler_2(graph: PricingGraph, cdps: dict[int, list[CDP]],
                        config: PricingConfig) -> list[Column]:
    """Width-1 beam: one greedy chain per starting customer."""
    q2 = graph.inst.q2
    found: dict = {}
    for start in graph.customers:
        if start not in graph.src_cost:
            continue
        seq = [start]
        load = min((g.load for g in cdps.get(start, ()) if g.part == 0),
                   default=0)
        best = None  # (rc, seq, q) best completion along this chain
        while True:
            rc, q = evaluate_route(graph, cdps, tuple(seq))
            if rc < -config.rc_tol and (best is None or rc < best[0]):
                best = (rc, list(seq), q)
            if len(seq) >= len(graph.customers):
                break
            # single best extension, CDPs scored ignoring partial deliveries
            cand = None
            for j in graph.customers:
                if j in seq:
                    continue
                arc = graph.arc_cost.get((seq[-1], j))
                if arc is None or j not in graph.snk_cost:
                    continue
                for g in cdps.get(j, ()):
                    if g.part or load + g.load > q2:
                        continue
                    score = arc + g.cost
                    if cand is None or score < cand[0] - 1e-12:
                        cand = (score, j, g.load)
            if cand is None:
                break
            seq.append(cand[1])
            load += cand[2]
        if best is not None:
            col = _emit(graph, best[1], best[2])
            prev = found.get(col.key())
            if prev is None or best[0] < prev[0]:
                found[col.key()] = (best[0], col)
    ranked = sorted(found.values(), key=lambda rec: (rec[0], rec[1].seq))
    return [col for _, col in ranked[:config.max_columns]]

"""Exact pricing: bidirectional labeling over one (satellite, period) subproblem.

The subproblem is an elementary shortest path with a load resource where the
delivered quantities are themselves decisions; per-customer delivery choices
are pre-enumerated as CDPs (combinations of zero/full/partial sub-deliveries,
at most one partial). Labels carry a line-segment cost (base cost plus a
negative per-unit rate over the partial range) and are compared with a
six-condition dominance rule.

Elementarity is enforced within ng-neighborhood memories; with kappa >= |N|
this is plain elementary labeling. Visit counts are additionally capped at
|N| so that zero-load cycles cannot loop (the cap never cuts an elementary
route, so the relaxation stays valid).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from teirp.columns import Column, DualPrices, RC_TOL, make_column, rho
from teirp.model import Instance


@dataclass
class PricingConfig:
    kappa: int = 5
    half_point: float = 0.5
    max_columns: int = 50
    rc_tol: float = RC_TOL
    label_cap: int = 2_000_000
    dominance: bool = True
    symmetry_break: bool = True


@dataclass
class GraphMods:
    """Branching-induced adjustments for one (satellite, period) graph."""
    source_delta: float = 0.0                                  # decisions 5-6
    enter_delta: dict[int, float] = field(default_factory=dict)  # decisions 7-9
    edge_delta: dict[frozenset, float] = field(default_factory=dict)  # decision 10
    removed_edges: set[frozenset] = field(default_factory=set)


@dataclass(frozen=True)
class CDP:
    """Customer delivery pattern: aggregate effect of one visit's deliveries."""
    cost: float
    load: int
    part: int
    rate: float
    maxp: int
    full_hs: tuple[int, ...]
    part_h: int | None


class PricingGraph:
    def __init__(self, inst: Instance, s: int, t: int, duals: DualPrices,
                 mods: GraphMods | None = None, kappa: int = 5):
        self.inst = inst
        self.s = s
        self.t = t
        mods = mods or GraphMods()
        self.mods = mods
        cust = inst.customers
        self.customers = cust
        self.index = {c: i for i, c in enumerate(cust)}
        n = len(cust)

        def edge_key(i, j):
            return frozenset((i, j))

        pi8 = duals.pi8
        pi10t = duals.pi10.get(t, 0.0)
        self.src_cost = {}
        self.snk_cost = {}
        for c in cust:
            if edge_key(s, c) in mods.removed_edges:
                continue
            base = inst.edge_cost(s, c)
            delta = mods.edge_delta.get(edge_key(s, c), 0.0)
            self.src_cost[c] = (base - pi10t - mods.source_delta
                                - mods.enter_delta.get(c, 0.0) - delta)
            self.snk_cost[c] = base - pi8.get((c, t), 0.0) - delta
        self.arc_cost = {}
        for i in cust:
            for j in cust:
                if i == j or edge_key(i, j) in mods.removed_edges:
                    continue
                self.arc_cost[(i, j)] = (inst.edge_cost(i, j)
                                         - pi8.get((i, t), 0.0)
                                         - mods.enter_delta.get(j, 0.0)
                                         - mods.edge_delta.get(edge_key(i, j), 0.0))
        # ng neighborhoods: kappa closest customers including self, as bitmasks
        self.ng_mask = {}
        for c in cust:
            ranked = sorted(cust, key=lambda k: (inst.edge_cost(c, k), k))
            mask = 0
            for k in ranked[:max(1, kappa)]:
                mask |= 1 << self.index[k]
            mask |= 1 << self.index[c]
            self.ng_mask[c] = mask


def enumerate_cdps(inst: Instance, s: int, t: int, c: int,
                   duals: DualPrices) -> list[CDP]:
    """All non-dominated CDPs for customer c in subproblem (s, t)."""
    hs = inst.delivery_periods(c, t)
    rhos = {h: rho(inst, duals, s, t, c, h) for h in hs}
    ubs = {h: inst.subdelivery_ub(c, t, h) for h in hs}
    raw: list[CDP] = []
    for mask in range(1 << len(hs)):
        full = tuple(h for b, h in enumerate(hs) if mask & (1 << b))
        if any(ubs[h] < 1 for h in full):
            continue
        cost = sum(ubs[h] * rhos[h] for h in full)
        load = sum(ubs[h] for h in full)
        raw.append(CDP(cost=cost, load=load, part=0, rate=0.0, maxp=0,
                       full_hs=full, part_h=None))
        for ph in hs:
            if ph in full or ubs[ph] < 2:
                continue
            if rhos[ph] >= 0:
                continue  # a partial with nonnegative rate is never useful
            raw.append(CDP(cost=cost, load=load, part=1, rate=rhos[ph],
                           maxp=ubs[ph] - 1, full_hs=full, part_h=ph))
    return _prune_cdps(raw)


def _cdp_dominates(a: CDP, b: CDP) -> bool:
    return (a.load <= b.load and a.part <= b.part
            and a.cost + a.maxp * a.rate <= b.cost + b.maxp * b.rate + 1e-12
            and a.cost <= b.cost + 1e-12
            and a.cost + b.maxp * a.rate <= b.cost + b.maxp * b.rate + 1e-12)


def _prune_cdps(raw: list[CDP]) -> list[CDP]:
    kept: list[CDP] = []
    for cand in raw:
        dominated = False
        for k in kept:
            if _cdp_dominates(k, cand):
                dominated = True
                break
        if dominated:
            continue
        kept = [k for k in kept if not _cdp_dominates(cand, k)]
        kept.append(cand)
    return kept


class Label:
    __slots__ = ("cost", "load", "visited", "mem", "part", "rate", "maxp",
                 "vertex", "pred", "applied", "length", "order")

    def __init__(self, cost, load, visited, mem, part, rate, maxp,
                 vertex, pred, applied, length, order):
        self.cost = cost
        self.load = load
        self.visited = visited
        self.mem = mem
        self.part = part
        self.rate = rate
        self.maxp = maxp
        self.vertex = vertex
        self.pred = pred
        self.applied = applied  # (vertex, CDP) accounted for at creation
        self.length = length
        self.order = order

    def best_cost(self):
        return self.cost + self.maxp * self.rate


def dominates(e1: Label, e2: Label) -> bool:
    """Appendix-style dominance; memory-subset comparison under ng relaxation."""
    if e1.vertex != e2.vertex:
        raise ValueError("labels at different vertices are incomparable")
    return (e1.load <= e2.load
            and (e1.mem & ~e2.mem) == 0
            and e1.part <= e2.part
            and e1.length <= e2.length
            and e1.cost + e1.maxp * e1.rate <= e2.cost + e2.maxp * e2.rate + 1e-12
            and e1.cost <= e2.cost + 1e-12
            and e1.cost + e2.maxp * e1.rate <= e2.cost + e2.maxp * e2.rate + 1e-12)


class _LabelPool:
    """Per-vertex buckets with pairwise dominance filtering."""

    def __init__(self, use_dominance: bool):
        self.buckets: dict[int, list[Label]] = {}
        self.use_dominance = use_dominance
        self.created = 0

    def insert(self, lab: Label) -> bool:
        bucket = self.buckets.setdefault(lab.vertex, [])
        if self.use_dominance:
            for k in bucket:
                if dominates(k, lab):
                    return False
            bucket[:] = [k for k in bucket if not dominates(lab, k)]
        bucket.append(lab)
        self.created += 1
        return True

    def alive(self, lab: Label) -> bool:
        return lab in self.buckets.get(lab.vertex, ())


def extend(graph: PricingGraph, label: Label, j: int, cdp: CDP,
           arc_cost: float, q2: int, order: int) -> Label | None:
    """Forward extension of label to vertex j with delivery pattern cdp."""
    bit = 1 << graph.index[j]
    if label.mem & bit:
        return None
    if label.part + cdp.part > 1:
        return None
    load = label.load + cdp.load
    if load > q2:
        return None
    if label.part:
        rate, maxp = label.rate, min(label.maxp, q2 - load)
    elif cdp.part:
        rate, maxp = cdp.rate, min(cdp.maxp, q2 - load)
    else:
        rate, maxp = 0.0, 0
    return Label(
        cost=label.cost + arc_cost + cdp.cost,
        load=load,
        visited=label.visited | bit,
        mem=(label.mem & graph.ng_mask[j]) | bit,
        part=label.part + cdp.part,
        rate=rate,
        maxp=max(maxp, 0),
        vertex=j,
        pred=label,
        applied=(j, cdp),
        length=label.length + 1,
        order=order,
    )


def solve_pricing(graph: PricingGraph, cdps: dict[int, list[CDP]],
                  config: PricingConfig,
                  stats: dict | None = None) -> tuple[list[Column], bool]:
    """Price subproblem (s, t); returns (columns, completed_exactly).

    Bidirectional: forward labels extended while their load is within
    half_point * Q2, backward labels within the complement; forward and
    backward labels are joined at every vertex. half_point = 1.0 gives
    mono-directional forward labeling.
    """
    inst = graph.inst
    q2 = inst.q2
    n = len(graph.customers)
    fwd_bound = config.half_point * q2
    bwd_bound = q2 - fwd_bound
    counter = [0]

    def tick():
        counter[0] += 1
        return counter[0]

    fw = _LabelPool(config.dominance)
    bw = _LabelPool(config.dominance)
    queue: deque[tuple[str, Label]] = deque()

    root = Label(0.0, 0, 0, 0, 0, 0.0, 0, -1, None, None, 0, tick())
    for c in graph.customers:
        if c not in graph.src_cost:
            continue
        for cdp in cdps.get(c, ()):
            lab = extend(graph, root, c, cdp, graph.src_cost[c], q2, tick())
            if lab is not None and fw.insert(lab):
                queue.append(("f", lab))
    for c in graph.customers:
        if c not in graph.snk_cost:
            continue
        seed = Label(graph.snk_cost[c], 0, 0, 1 << graph.index[c], 0, 0.0, 0,
                     c, None, None, 0, tick())
        if bw.insert(seed):
            queue.append(("b", seed))

    overflow = False
    while queue:
        if fw.created + bw.created > config.label_cap:
            overflow = True
            break
        direction, lab = queue.popleft()
        pool = fw if direction == "f" else bw
        if not pool.alive(lab):
            continue
        bound = fwd_bound if direction == "f" else bwd_bound
        if lab.load > bound or lab.length >= n:
            continue
        u = lab.vertex
        for c in graph.customers:
            if direction == "f":
                arc = graph.arc_cost.get((u, c))
            else:
                arc = graph.arc_cost.get((c, u))
            if arc is None:
                continue
            for cdp in (cdps.get(c, ()) if direction == "f" else cdps.get(u, ())):
                if direction == "f":
                    new = extend(graph, lab, c, cdp, arc, q2, tick())
                else:
                    new = _extend_backward(graph, lab, c, cdp, arc, q2, tick())
                if new is not None and pool.insert(new):
                    queue.append((direction, new))

    columns = _join(graph, fw, bw, cdps, config)
    if stats is not None:
        stats["labels"] = fw.created + bw.created
    return columns, not overflow


def _extend_backward(graph: PricingGraph, label: Label, j: int, cdp: CDP,
                     arc_cost: float, q2: int, order: int) -> Label | None:
    """Move the backward resident from label.vertex to j.

    The CDP belongs to the vertex being left behind (label.vertex), which
    becomes interior; the new resident's own delivery is chosen at join time.
    """
    bit = 1 << graph.index[j]
    if label.mem & bit:
        return None
    if label.part + cdp.part > 1:
        return None
    load = label.load + cdp.load
    if load > q2:
        return None
    if label.part:
        rate, maxp = label.rate, min(label.maxp, q2 - load)
    elif cdp.part:
        rate, maxp = cdp.rate, min(cdp.maxp, q2 - load)
    else:
        rate, maxp = 0.0, 0
    old = label.vertex
    return Label(
        cost=label.cost + arc_cost + cdp.cost,
        load=load,
        visited=label.visited | (1 << graph.index[old]),
        mem=(label.mem & graph.ng_mask[j]) | bit,
        part=label.part + cdp.part,
        rate=rate,
        maxp=max(maxp, 0),
        vertex=j,
        pred=label,
        applied=(old, cdp),
        length=label.length + 1,
        order=order,
    )


def _join(graph: PricingGraph, fw: _LabelPool, bw: _LabelPool,
          cdps: dict[int, list[CDP]], config: PricingConfig) -> list[Column]:
    inst = graph.inst
    q2 = inst.q2
    n = len(graph.customers)
    found: dict = {}
    for v in graph.customers:
        vbit = 1 << graph.index[v]
        for f in fw.buckets.get(v, ()):
            for b in bw.buckets.get(v, ()):
                if (f.mem & b.mem) & ~vbit:
                    continue
                if f.part + b.part > 1:
                    continue
                load = f.load + b.load
                if load > q2 or f.length + b.length > n:
                    continue
                cost = f.cost + b.cost
                if f.part:
                    rate, maxp = f.rate, min(f.maxp, q2 - load)
                elif b.part:
                    rate, maxp = b.rate, min(b.maxp, q2 - load)
                else:
                    rate, maxp = 0.0, 0
                maxp = max(maxp, 0)
                rc = cost + rate * maxp
                if rc >= -config.rc_tol:
                    continue
                seq, applied = _assemble(f, b)
                if config.symmetry_break and len(seq) >= 2 and not seq[0] < seq[-1]:
                    continue
                q: dict[tuple[int, int], int] = {}
                for (c, cdp) in applied:
                    for h in cdp.full_hs:
                        q[(c, h)] = q.get((c, h), 0) + inst.subdelivery_ub(c, graph.t, h)
                    if cdp.part_h is not None and maxp > 0:
                        q[(c, cdp.part_h)] = q.get((c, cdp.part_h), 0) + maxp
                col = make_column(inst, graph.s, graph.t, seq, q)
                key = col.key()
                prev = found.get(key)
                if prev is None or rc < prev[0] - 1e-12:
                    found[key] = (rc, col)
    ranked = sorted(found.values(), key=lambda rec: (rec[0], rec[1].seq))
    return [col for _, col in ranked[:config.max_columns]]


def _assemble(f: Label, b: Label) -> tuple[tuple[int, ...], list]:
    """Route sequence and per-vertex CDPs from a forward/backward label pair."""
    fw_part: list[tuple[int, CDP]] = []
    lab = f
    while lab is not None and lab.applied is not None:
        fw_part.append(lab.applied)
        lab = lab.pred
    fw_part.reverse()
    bw_part: list[tuple[int, CDP]] = []
    lab = b
    while lab is not None and lab.applied is not None:
        bw_part.append(lab.applied)
        lab = lab.pred
    applied = fw_part + bw_part
    seq = tuple(c for c, _ in applied)
    return seq, applied

"""Instance generation.

Two paths:
  * transform a single-depot IRP-style source instance into a two-echelon
    instance (satellites on a ring around the city, suppliers further out);
  * generate fully synthetic micro instances small enough for the
    brute-force oracle.

Both are pure functions of (input, config, seed).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from teirp.model import Instance, InstanceError


# -- smallest enclosing circle ----------------------------------------------

def enclosing_circle(points) -> tuple[tuple[float, float], float]:
    """Smallest circle containing all points, by candidate enumeration.

    Candidates are all circles through 2 points (diameter) and 3 points
    (circumcircle); exact for n up to a few dozen, which is all we need.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise InstanceError("enclosing_circle: empty point set")
    if len(pts) == 1:
        return pts[0], 0.0

    def covers(cx, cy, r):
        rr = r + 1e-9
        return all(math.hypot(x - cx, y - cy) <= rr for x, y in pts)

    best = None
    for (ax, ay), (bx, by) in itertools.combinations(pts, 2):
        cx, cy = (ax + bx) / 2.0, (ay + by) / 2.0
        r = math.hypot(ax - cx, ay - cy)
        if covers(cx, cy, r) and (best is None or r < best[2]):
            best = (cx, cy, r)
    for (ax, ay), (bx, by), (qx, qy) in itertools.combinations(pts, 3):
        d = 2.0 * (ax * (by - qy) + bx * (qy - ay) + qx * (ay - by))
        if abs(d) < 1e-12:
            continue
        ux = ((ax * ax + ay * ay) * (by - qy) + (bx * bx + by * by) * (qy - ay)
              + (qx * qx + qy * qy) * (ay - by)) / d
        uy = ((ax * ax + ay * ay) * (qx - bx) + (bx * bx + by * by) * (ax - qx)
              + (qx * qx + qy * qy) * (bx - ax)) / d
        r = math.hypot(ax - ux, ay - uy)
        if covers(ux, uy, r) and (best is None or r < best[2]):
            best = (ux, uy, r)
    if best is None:
        # All points coincident.
        return pts[0], 0.0
    return (best[0], best[1]), best[2]


def place_facilities(center, radius, count, ring_inner, ring_outer,
                     rng: np.random.Generator):
    """Place `count` facilities on a ring around `center`.

    The ring [ring_inner*R, ring_outer*R] is split into `count` equal angular
    sectors; facility i is uniform-random in sector i (uniform in angle and
    radius). A degenerate city (R = 0) falls back to R = 1.
    """
    if count < 1:
        raise InstanceError("place_facilities: count must be >= 1")
    if not 0 < ring_inner < ring_outer:
        raise InstanceError("place_facilities: need 0 < inner < outer")
    r0 = radius if radius > 0 else 1.0
    cx, cy = center
    out = []
    for i in range(count):
        theta = (i + rng.uniform(0.0, 1.0)) * 2.0 * math.pi / count
        rad = rng.uniform(ring_inner * r0, ring_outer * r0)
        out.append((cx + rad * math.cos(theta), cy + rad * math.sin(theta)))
    return out


# -- source data -------------------------------------------------------------

@dataclass
class SourceInstance:
    """Single-depot IRP data used as raw material for the transformation.

    Text format (whitespace-separated):
      line 1: ``n tau QA``      (customers, horizon, original vehicle capacity)
      line 2: ``0 x y Cu prod h``  (depot: capacity, per-period production,
                                    holding cost)
      then n customer lines: ``i x y I0 C d h``  (constant per-period demand d)
    """
    n: int
    tau: int
    qa: int
    depot_xy: tuple[float, float]
    cu: int          # depot storage capacity C_u
    production: int  # quantity made available per period
    depot_hold: float
    cust_xy: list[tuple[float, float]]
    cust_init: list[int]
    cust_cap: list[int]
    cust_demand: list[int]
    cust_hold: list[float]


def read_source(path: str) -> SourceInstance:
    with open(path, encoding="utf-8") as fh:
        tokens = fh.read().split()
    it = iter(tokens)

    def nxt(cast=float):
        try:
            return cast(next(it))
        except StopIteration:
            raise InstanceError("truncated source file") from None

    n, tau, qa = nxt(int), nxt(int), nxt(int)
    nxt(int)  # depot id
    depot_xy = (nxt(), nxt())
    cu, production, depot_hold = nxt(int), nxt(int), nxt()
    xy, init, cap, dem, hold = [], [], [], [], []
    for _ in range(n):
        nxt(int)
        xy.append((nxt(), nxt()))
        init.append(nxt(int))
        cap.append(nxt(int))
        dem.append(nxt(int))
        hold.append(nxt())
    if list(it):
        raise InstanceError("unexpected trailing tokens in source file")
    return SourceInstance(n, tau, qa, depot_xy, cu, production, depot_hold,
                          xy, init, cap, dem, hold)


@dataclass
class GenConfig:
    n_suppliers: int = 1      # standard combinations: 1s2 and 2s3
    n_satellites: int = 2
    k2: int = 2
    seed: int = 0


def derive_capacities(source: SourceInstance, n_satellites: int, k2: int,
                      rng: np.random.Generator):
    """Capacities, inventories and fleets for the two-echelon instance."""
    if k2 < 1:
        raise InstanceError("k2 must be >= 1")
    cap_s = source.cu + source.production
    total_res = _total_residual_demand(source)
    init_s = [int(rng.uniform(0.4, 0.6) * total_res / n_satellites)
              for _ in range(n_satellites)]
    init_s = [min(v, cap_s) for v in init_s]
    return {
        "cap_s": cap_s,
        "init_s": init_s,
        "k1": None,  # set by caller to the supplier count
        "q1": 2 * source.production,
        "k2": k2,
        "q2": source.qa // k2,
    }


def _total_residual_demand(source: SourceInstance) -> int:
    total = 0
    for i in range(source.n):
        inv = source.cust_init[i]
        for _ in range(source.tau):
            use = min(inv, source.cust_demand[i])
            total += source.cust_demand[i] - use
            inv -= use
    return total


def transform(source: SourceInstance, config: GenConfig) -> Instance:
    """Build a two-echelon instance from a single-depot source."""
    rng = np.random.default_rng(config.seed)
    center, radius = enclosing_circle(source.cust_xy)
    sat_xy = place_facilities(center, radius, config.n_satellites, 0.90, 0.99, rng)
    sup_xy = place_facilities(center, radius, config.n_suppliers, 2.50, 3.00, rng)
    caps = derive_capacities(source, config.n_satellites, config.k2, rng)

    suppliers = tuple(range(config.n_suppliers))
    satellites = tuple(range(config.n_suppliers,
                             config.n_suppliers + config.n_satellites))
    base_c = config.n_suppliers + config.n_satellites
    customers = tuple(range(base_c, base_c + source.n))

    coords = {}
    init_inv, cap, hold, demand = {}, {}, {}, {}
    for u, xy in zip(suppliers, sup_xy):
        coords[u] = xy
    for s, xy, inv in zip(satellites, sat_xy, caps["init_s"]):
        coords[s] = xy
        cap[s] = caps["cap_s"]
        init_inv[s] = inv
        hold[s] = source.depot_hold
    for k, c in enumerate(customers):
        coords[c] = source.cust_xy[k]
        cap[c] = source.cust_cap[k]
        init_inv[c] = source.cust_init[k]
        hold[c] = source.cust_hold[k]
        demand[c] = tuple([source.cust_demand[k]] * source.tau)

    q1 = caps["q1"]
    q2 = min(caps["q2"], q1)
    if q2 < 1:
        raise InstanceError("derived Q2 is not positive; lower k2")
    return Instance(
        suppliers=suppliers, satellites=satellites, customers=customers,
        tau=source.tau, coords=coords, demand=demand, init_inv=init_inv,
        cap=cap, hold=hold, k1=config.n_suppliers, q1=q1,
        k2=config.k2, q2=q2,
    )


# -- synthetic micro instances ------------------------------------------------

def generate_micro(n: int, tau: int, seed: int, k2: int = 2,
                   n_suppliers: int = 1, n_satellites: int = 2) -> Instance:
    """Small random instance with a guaranteed feasible solution.

    Draws are resampled (up to 100 times) until a simple constructive
    check succeeds: delivering each period's residual demand with at most
    K2 single-echelon routes while respecting every capacity.
    """
    if not (1 <= n <= 6):
        raise InstanceError("micro instances support 1..6 customers")
    if tau not in (2, 3):
        raise InstanceError("micro instances support tau in {2, 3}")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        inst = _draw_micro(n, tau, rng, k2, n_suppliers, n_satellites)
        if micro_feasible(inst):
            return inst
    raise InstanceError("failed to draw a feasible micro instance")


def _draw_micro(n, tau, rng, k2, n_suppliers, n_satellites) -> Instance:
    suppliers = tuple(range(n_suppliers))
    satellites = tuple(range(n_suppliers, n_suppliers + n_satellites))
    base_c = n_suppliers + n_satellites
    customers = tuple(range(base_c, base_c + n))

    coords = {}
    for u in suppliers:
        coords[u] = (float(rng.integers(-60, -39)), float(rng.integers(0, 101)))
    for s in satellites:
        coords[s] = (float(rng.integers(-10, 11)), float(rng.integers(0, 101)))
    for c in customers:
        coords[c] = (float(rng.integers(20, 101)), float(rng.integers(0, 101)))

    demand, init_inv, cap, hold = {}, {}, {}, {}
    total_dem = 0
    for c in customers:
        d = tuple(int(rng.integers(1, 9)) for _ in range(tau))
        demand[c] = d
        total_dem += sum(d)
        init_inv[c] = int(rng.integers(0, max(d) + 1))
        cap[c] = init_inv[c] + max(d) + int(rng.integers(0, 6))
        hold[c] = round(float(rng.uniform(0.1, 0.6)), 2)

    per_period = max(sum(demand[c][t] for c in customers) for t in range(tau))
    q2 = max(per_period // k2 + 1, max(max(demand[c]) for c in customers))
    q1 = 2 * q2 + int(rng.integers(0, q2 + 1))
    for s in satellites:
        init_inv[s] = int(rng.integers(0, total_dem // n_satellites + 1))
        cap[s] = init_inv[s] + q1 + int(rng.integers(0, 11))
        hold[s] = round(float(rng.uniform(0.02, 0.2)), 2)

    return Instance(
        suppliers=suppliers, satellites=satellites, customers=customers,
        tau=tau, coords=coords, demand=demand, init_inv=init_inv,
        cap=cap, hold=hold, k1=n_suppliers, q1=q1, k2=k2, q2=q2,
    )


def micro_feasible(inst: Instance) -> bool:
    """Constructive feasibility check: serve residual demand just in time.

    Plan: in each period deliver d-bar_c^t to each customer (bin-packed into
    at most K2 routes of capacity Q2, all from one satellite), refilling that
    satellite from a supplier first. Sufficient, not necessary.
    """
    s = inst.satellites[0]
    sat_inv = inst.init_inv[s]
    for t in inst.periods:
        needs = []
        for c in inst.customers:
            db = inst.residual_demand(c)[t - 1]
            if db == 0:
                continue
            if db > inst.q2:
                return False
            # ML policy: inventory right after the delivery fits the capacity
            prior = inst.residual_inventory(c)[t - 2] if t > 1 else inst.init_inv[c]
            if prior + db > inst.cap[c]:
                return False
            needs.append(db)
        total = sum(needs)
        refill = max(0, total - sat_inv)
        if refill > inst.k1 * inst.q1:
            return False
        if sat_inv + refill > inst.cap[s]:
            return False
        if _bins_needed(needs, inst.q2) > inst.k2:
            return False
        sat_inv = sat_inv + refill - total
    return True


def _bins_needed(items, capacity) -> int:
    bins: list[int] = []
    for it in sorted(items, reverse=True):
        for i, load in enumerate(bins):
            if load + it <= capacity:
                bins[i] += it
                break
        else:
            bins.append(it)
    return len(bins)

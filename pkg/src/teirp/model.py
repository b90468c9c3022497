"""Instance data model and the FIFO-derived quantities used by the solver.

Periods are 1-based. Period ``tau + 1`` is an artificial period collecting
all end-of-horizon inventory. All derived quantities are cached on first use;
an Instance is immutable after construction and safe to share across pricing
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class InstanceError(ValueError):
    """Raised on malformed instance data or bad arguments."""


@dataclass
class Instance:
    suppliers: tuple[int, ...]
    satellites: tuple[int, ...]
    customers: tuple[int, ...]
    tau: int
    coords: dict[int, tuple[float, float]]
    demand: dict[int, tuple[int, ...]]        # customer -> per-period demand
    init_inv: dict[int, int]                  # satellites and customers
    cap: dict[int, int]                       # satellites and customers
    hold: dict[int, float]                    # satellites and customers
    k1: int
    q1: int
    k2: int
    q2: int
    edge_cost_overrides: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        self.suppliers = tuple(self.suppliers)
        self.satellites = tuple(self.satellites)
        self.customers = tuple(self.customers)
        self._validate()
        self._cost_cache: dict[tuple[int, int], float] = {}
        self._derived_cache: dict[int, _CustomerDerived] = {}

    # -- validation -------------------------------------------------------

    def _validate(self):
        ids = list(self.suppliers) + list(self.satellites) + list(self.customers)
        if len(set(ids)) != len(ids):
            raise InstanceError("node ids must be unique across all node sets")
        if self.tau < 1:
            raise InstanceError("horizon must contain at least one period")
        if self.q2 > self.q1:
            raise InstanceError("second-echelon capacity Q2 must not exceed Q1")
        if min(self.k1, self.k2, self.q1, self.q2) <= 0:
            raise InstanceError("fleet sizes and capacities must be positive")
        for n in ids:
            if n not in self.coords:
                raise InstanceError(f"missing coordinates for node {n}")
        for c in self.customers:
            d = self.demand.get(c)
            if d is None or len(d) != self.tau:
                raise InstanceError(f"customer {c}: demand vector must have {self.tau} entries")
            if any(x < 0 for x in d):
                raise InstanceError(f"customer {c}: negative demand")
        for n in list(self.satellites) + list(self.customers):
            if self.cap[n] < 0 or self.init_inv[n] < 0 or self.hold[n] < 0:
                raise InstanceError(f"node {n}: capacities, inventories and costs must be >= 0")
            if self.init_inv[n] > self.cap[n]:
                raise InstanceError(f"node {n}: initial inventory exceeds capacity")

    # -- geometry / costs --------------------------------------------------

    def edge_cost(self, i: int, j: int) -> float:
        """Cost of edge <i, j>; Euclidean unless explicitly overridden."""
        key = (i, j) if i <= j else (j, i)
        c = self._cost_cache.get(key)
        if c is None:
            if key in self.edge_cost_overrides:
                c = float(self.edge_cost_overrides[key])
            elif (key[1], key[0]) in self.edge_cost_overrides:
                c = float(self.edge_cost_overrides[(key[1], key[0])])
            else:
                xi, yi = self.coords[i]
                xj, yj = self.coords[j]
                c = math.hypot(xi - xj, yi - yj)
            self._cost_cache[key] = c
        return c

    @property
    def periods(self) -> range:
        return range(1, self.tau + 1)

    def is_customer(self, n: int) -> bool:
        return n in self._customer_set

    @property
    def _customer_set(self):
        s = getattr(self, "_cust_set", None)
        if s is None:
            s = frozenset(self.customers)
            self._cust_set = s
        return s

    # -- FIFO-derived quantities ------------------------------------------

    def _derived(self, c: int) -> "_CustomerDerived":
        if not self.is_customer(c):
            raise InstanceError(f"{c} is not a customer id")
        d = self._derived_cache.get(c)
        if d is None:
            d = _CustomerDerived(self, c)
            self._derived_cache[c] = d
        return d

    def residual_inventory(self, c: int) -> tuple[int, ...]:
        """I_c^{0,h} for h = 1..tau: initial inventory left after h periods."""
        return self._derived(c).res_inv

    def residual_demand(self, c: int) -> tuple[int, ...]:
        """Demand per period not covered by the initial inventory."""
        return self._derived(c).res_dem

    def delivery_periods(self, c: int, t: int) -> tuple[int, ...]:
        """Periods h a delivery made at t can be dedicated to (incl. tau+1)."""
        if not 1 <= t <= self.tau:
            raise InstanceError(f"period {t} out of range 1..{self.tau}")
        return self._derived(c).tplus[t]

    def subdelivery_ub(self, c: int, t: int, h: int) -> int:
        """Upper bound on the sub-delivery made at t and dedicated to h."""
        der = self._derived(c)
        if h not in der.tplus[t]:
            raise InstanceError(f"period {h} not deliverable from {t} for customer {c}")
        return der.ub[(t, h)]

    def t_minus(self, c: int, h: int) -> tuple[int, ...]:
        """Periods at which a sub-delivery can cover the demand of period h."""
        return self._derived(c).tminus[h]

    def gamma_minus(self, c: int, h: int) -> tuple[int, ...]:
        """Periods t <= h from which some period >= h is deliverable."""
        return self._derived(c).gminus[h]

    def gamma_plus(self, c: int, t: int) -> tuple[int, ...]:
        """Periods h (in 1..tau) such that t lies in gamma_minus(c, h)."""
        return self._derived(c).gplus[t]


class _CustomerDerived:
    """All per-customer derived period sets, computed once."""

    def __init__(self, inst: Instance, c: int):
        tau = inst.tau
        d = inst.demand[c]
        i0 = inst.init_inv[c]
        cc = inst.cap[c]

        # I_c^{0,h} = max(0, I0 - sum_{l<=h} d_l); index h-1
        acc = 0
        res_inv = []
        for h in range(1, tau + 1):
            acc += d[h - 1]
            res_inv.append(max(0, i0 - acc))
        self.res_inv = tuple(res_inv)

        def inv0(h):  # I_c^{0,h} with I_c^{0,0} = I_c^0
            return i0 if h == 0 else res_inv[h - 1]

        self.res_dem = tuple(
            max(0, d[h - 1] - inv0(h - 1)) for h in range(1, tau + 1)
        )

        # T_ct^+ and UB per (t, h)
        tplus: dict[int, tuple[int, ...]] = {}
        ub: dict[tuple[int, int], int] = {}
        for t in range(1, tau + 1):
            hs = []
            for h in range(t, tau + 2):
                cum = sum(d[t - 1:h - 1])  # sum_{l=t}^{h-1} d_l
                if h <= tau:
                    if self.res_dem[h - 1] > 0 and (h == t or cum < cc):
                        hs.append(h)
                        if h == t:
                            ub[(t, h)] = min(self.res_dem[h - 1], cc - inv0(h - 1))
                        else:
                            ub[(t, h)] = min(self.res_dem[h - 1], cc - cum - inv0(h - 1))
                else:
                    if cum < cc:
                        hs.append(h)
                        ub[(t, h)] = cc - cum - inv0(tau)
            tplus[t] = tuple(hs)
        self.tplus = tplus
        self.ub = ub

        self.tminus = {
            h: tuple(t for t in range(1, tau + 1) if h in tplus[t])
            for h in range(1, tau + 2)
        }
        gminus = {}
        for h in range(1, tau + 2):
            gminus[h] = tuple(
                t for t in range(1, min(h, tau) + 1)
                if any(k in tplus[t] for k in range(h, tau + 2))
            )
        self.gminus = gminus
        self.gplus = {
            t: tuple(h for h in range(1, tau + 1) if t in gminus[h])
            for t in range(1, tau + 1)
        }


# -- canonical instance file format ---------------------------------------

def read_instance(path: str) -> Instance:
    """Parse the canonical whitespace-separated instance format.

    Line 1: ``nU nS nN tau K1 Q1 K2 Q2``; then per supplier ``id x y``;
    per satellite ``id x y cap initInv hold``; per customer
    ``id x y cap initInv hold d_1 .. d_tau``.
    """
    with open(path, encoding="utf-8") as fh:
        tokens = fh.read().split()
    return _parse_tokens(tokens)


def _parse_tokens(tokens: list[str]) -> Instance:
    it = iter(tokens)

    def nxt(cast=float):
        try:
            return cast(next(it))
        except StopIteration:
            raise InstanceError("truncated instance file") from None

    nu, ns, nn, tau, k1, q1, k2, q2 = (nxt(int) for _ in range(8))
    coords, demand, init_inv, cap, hold = {}, {}, {}, {}, {}
    suppliers, satellites, customers = [], [], []
    for _ in range(nu):
        i = nxt(int)
        coords[i] = (nxt(), nxt())
        suppliers.append(i)
    for _ in range(ns):
        i = nxt(int)
        coords[i] = (nxt(), nxt())
        cap[i] = nxt(int)
        init_inv[i] = nxt(int)
        hold[i] = nxt()
        satellites.append(i)
    for _ in range(nn):
        i = nxt(int)
        coords[i] = (nxt(), nxt())
        cap[i] = nxt(int)
        init_inv[i] = nxt(int)
        hold[i] = nxt()
        demand[i] = tuple(nxt(int) for _ in range(tau))
        customers.append(i)
    leftover = list(it)
    if leftover:
        raise InstanceError(f"{len(leftover)} unexpected trailing tokens")
    return Instance(
        suppliers=tuple(suppliers), satellites=tuple(satellites),
        customers=tuple(customers), tau=tau, coords=coords, demand=demand,
        init_inv=init_inv, cap=cap, hold=hold, k1=k1, q1=q1, k2=k2, q2=q2,
    )


def write_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(inst.suppliers)} {len(inst.satellites)} {len(inst.customers)} "
                 f"{inst.tau} {inst.k1} {inst.q1} {inst.k2} {inst.q2}\n")
        for u in inst.suppliers:
            x, y = inst.coords[u]
            fh.write(f"{u} {x!r} {y!r}\n")
        for s in inst.satellites:
            x, y = inst.coords[s]
            fh.write(f"{s} {x!r} {y!r} {inst.cap[s]} {inst.init_inv[s]} {inst.hold[s]!r}\n")
        for c in inst.customers:
            x, y = inst.coords[c]
            ds = " ".join(str(d) for d in inst.demand[c])
            fh.write(f"{c} {x!r} {y!r} {inst.cap[c]} {inst.init_inv[c]} {inst.hold[c]!r} {ds}\n")

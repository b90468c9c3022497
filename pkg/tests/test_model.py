import math

import pytest
from hypothesis import given, settings, strategies as st

from teirp.model import Instance, InstanceError, read_instance, write_instance

from conftest import single_customer_instance


C = 2  # customer id in single_customer_instance


# -- residual inventory / demand ------------------------------------------------

def test_residual_inventory_basic():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4))
    assert inst.residual_inventory(C) == (6, 2, 0)


def test_residual_inventory_zero_start():
    inst = single_customer_instance(init_inv=0, demand=(4, 4, 4))
    assert inst.residual_inventory(C) == (0, 0, 0)


def test_residual_inventory_never_exhausted():
    inst = single_customer_instance(init_inv=100, demand=(4, 4, 4), cap=120)
    assert inst.residual_inventory(C) == (96, 92, 88)


def test_residual_inventory_unknown_customer():
    inst = single_customer_instance()
    with pytest.raises(InstanceError):
        inst.residual_inventory(99)


def test_residual_demand_basic():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4))
    assert inst.residual_demand(C) == (0, 0, 2)


def test_residual_demand_zero_start():
    inst = single_customer_instance(init_inv=0, demand=(4, 4, 4))
    assert inst.residual_demand(C) == (4, 4, 4)


def test_residual_demand_covered_horizon():
    inst = single_customer_instance(init_inv=12, demand=(4, 4, 4))
    assert inst.residual_demand(C) == (0, 0, 0)


# -- delivery periods -------------------------------------------------------------

def test_delivery_periods_midhorizon():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert set(inst.delivery_periods(C, 1)) == {3, 4}


def test_delivery_periods_last_period():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert set(inst.delivery_periods(C, 3)) == {3, 4}


def test_delivery_periods_blocked_by_capacity():
    inst = single_customer_instance(init_inv=0, demand=(4, 4, 4), cap=4, q2=4,
                                    q1=8)
    assert set(inst.delivery_periods(C, 1)) == {1}


def test_delivery_periods_bad_period():
    inst = single_customer_instance()
    with pytest.raises(InstanceError):
        inst.delivery_periods(C, 0)
    with pytest.raises(InstanceError):
        inst.delivery_periods(C, 4)


# -- sub-delivery upper bounds ----------------------------------------------------

def test_subdelivery_ub_values():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert inst.subdelivery_ub(C, 1, 3) == 2
    assert inst.subdelivery_ub(C, 1, 4) == 8
    assert inst.subdelivery_ub(C, 3, 4) == 16


def test_subdelivery_ub_outside_delivery_periods():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    with pytest.raises(InstanceError):
        inst.subdelivery_ub(C, 1, 2)   # d-bar is 0 in period 2


# -- gamma sets --------------------------------------------------------------------

def test_t_minus():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert set(inst.t_minus(C, 3)) == {1, 2, 3}


def test_gamma_minus():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert set(inst.gamma_minus(C, 2)) == {1, 2}


def test_gamma_plus():
    inst = single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20)
    assert set(inst.gamma_plus(C, 1)) == {1, 2, 3}


def test_gamma_duality():
    inst = single_customer_instance(init_inv=3, demand=(4, 0, 7), cap=9)
    tau = inst.tau
    for h in range(1, tau + 1):
        for t in range(1, tau + 1):
            assert (h in inst.delivery_periods(C, t)) == (t in inst.t_minus(C, h))


# -- validation ---------------------------------------------------------------------

def test_rejects_duplicate_ids():
    with pytest.raises(InstanceError):
        Instance(suppliers=(0,), satellites=(0,), customers=(1,), tau=1,
                 coords={0: (0, 0), 1: (1, 0)}, demand={1: (1,)},
                 init_inv={0: 0, 1: 0}, cap={0: 10, 1: 10},
                 hold={0: 0.1, 1: 0.1}, k1=1, q1=5, k2=1, q2=5)


def test_rejects_q2_above_q1():
    with pytest.raises(InstanceError):
        single_customer_instance(q2=30, q1=20)


def test_rejects_initial_inventory_above_capacity():
    with pytest.raises(InstanceError):
        single_customer_instance(init_inv=30, cap=20)


# -- geometry ------------------------------------------------------------------------

def test_edge_cost_euclidean_and_symmetric(inst3c):
    assert inst3c.edge_cost(1, 3) == pytest.approx(25.0)
    assert inst3c.edge_cost(3, 4) == pytest.approx(math.hypot(10, 5))
    assert inst3c.edge_cost(4, 3) == inst3c.edge_cost(3, 4)


def test_edge_cost_override():
    inst = single_customer_instance()
    inst.edge_cost_overrides[(1, 2)] = 99.0
    inst._cost_cache.clear()
    assert inst.edge_cost(1, 2) == 99.0
    assert inst.edge_cost(2, 1) == 99.0


# -- file round trip -----------------------------------------------------------------

def test_read_write_roundtrip(tmp_path, inst3c):
    path = tmp_path / "inst.txt"
    write_instance(inst3c, str(path))
    back = read_instance(str(path))
    assert back.customers == inst3c.customers
    assert back.demand == inst3c.demand
    assert back.cap == inst3c.cap
    assert back.k1 == inst3c.k1 and back.q2 == inst3c.q2
    for i in (0, 1, 3):
        for j in (2, 4, 5):
            assert back.edge_cost(i, j) == pytest.approx(inst3c.edge_cost(i, j))


# -- property suite: derived sets vs a direct inventory simulator ------------------


def simulate_inventory(i0, demand, deliveries):
    """End-of-period inventories under FIFO consumption.

    deliveries: dict h -> qty arriving at the start of period h.
    Returns None if a stockout occurs or capacity is exceeded after arrival.
    """
    inv = i0
    out = []
    for h in range(1, len(demand) + 1):
        inv += deliveries.get(h, 0)
        if inv < demand[h - 1]:
            return None
        out.append(inv - demand[h - 1])
        inv = out[-1]
    return out


triple = st.tuples(
    st.integers(min_value=0, max_value=15),                      # I0
    st.lists(st.integers(min_value=0, max_value=8), min_size=1, max_size=4),
    st.integers(min_value=1, max_value=25),                      # C
)


@settings(max_examples=300, deadline=None)
@given(triple)
def test_derived_sets_match_simulator(data):
    i0, demand, cap = data
    i0 = min(i0, cap)
    inst = single_customer_instance(init_inv=i0, demand=tuple(demand),
                                    cap=cap, q2=cap + 1, q1=2 * cap + 2)
    tau = inst.tau
    # residual inventory is the no-delivery simulation clipped at 0
    inv = i0
    for h in range(1, tau + 1):
        inv = max(0, inv - demand[h - 1])
        assert inst.residual_inventory(C)[h - 1] == inv
    # residual demand sums to uncovered demand
    rd = inst.residual_demand(C)
    assert all(x >= 0 for x in rd)
    assert sum(rd) == max(0, sum(demand) - i0)
    # UB deliveries never break capacity when consumed FIFO
    for t in range(1, tau + 1):
        for h in inst.delivery_periods(C, t):
            if h > tau:
                continue
            ub = inst.subdelivery_ub(C, t, h)
            assert 0 <= ub <= cap
            traj = simulate_inventory(i0, demand, {t: ub})
            if ub > 0 and traj is not None:
                assert max(traj) <= cap
    # gamma set duality (gamma_plus covers real periods only)
    for t in range(1, tau + 1):
        for h in range(1, tau + 1):
            assert ((h in inst.gamma_plus(C, t))
                    == (t in inst.gamma_minus(C, h)))

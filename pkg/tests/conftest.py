import math

import pytest

from teirp.model import Instance


def single_customer_instance(init_inv=10, demand=(4, 4, 4), cap=20, hold=0.5,
                             q2=10, k2=2, q1=20, k1=1):
    """One supplier (0), one satellite (1), one customer (2)."""
    tau = len(demand)
    return Instance(
        suppliers=(0,), satellites=(1,), customers=(2,), tau=tau,
        coords={0: (0.0, 0.0), 1: (10.0, 0.0), 2: (10.0, 5.0)},
        demand={2: tuple(demand)},
        init_inv={1: min(3 * sum(demand), 60), 2: init_inv},
        cap={1: 200, 2: cap},
        hold={1: 0.1, 2: hold},
        k1=k1, q1=q1, k2=k2, q2=q2)


def small_instance(tau=2):
    """One supplier, two satellites, three customers on a line."""
    return Instance(
        suppliers=(0,), satellites=(1, 2), customers=(3, 4, 5), tau=tau,
        coords={0: (-50.0, 0.0), 1: (-5.0, 0.0), 2: (5.0, 0.0),
                3: (20.0, 0.0), 4: (30.0, 5.0), 5: (40.0, -5.0)},
        demand={3: (3,) * tau, 4: (4,) * tau, 5: (2,) * tau},
        init_inv={1: 10, 2: 8, 3: 1, 4: 0, 5: 2},
        cap={1: 60, 2: 60, 3: 12, 4: 12, 5: 12},
        hold={1: 0.05, 2: 0.05, 3: 0.3, 4: 0.2, 5: 0.4},
        k1=1, q1=40, k2=2, q2=12)


@pytest.fixture
def inst1c():
    return single_customer_instance()


@pytest.fixture
def inst3c():
    return small_instance()


def euclid(a, b):
    return math.dist(a, b)

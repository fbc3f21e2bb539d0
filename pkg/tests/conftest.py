import numpy as np
import pytest

from dbar.forms import ProductDomain
from dbar.geometry import area_rule, boundary_rule, make_disk, make_ellipse
from dbar.operator_t import QuadratureSuite
from dbar.wirtinger_expr import (
    add,
    call,
    conj,
    const,
    div,
    mul,
    neg,
    pow_,
    sub,
    var,
)


@pytest.fixture(scope="session")
def unit_disk():
    return make_disk(0, 1.0)


@pytest.fixture(scope="session")
def ellipse_2_1():
    return make_ellipse(0, 2.0, 1.0)


@pytest.fixture(scope="session")
def disk_rules(unit_disk):
    return area_rule(unit_disk, 64, 64), boundary_rule(unit_disk, 256)


@pytest.fixture(scope="session")
def bidisk():
    d = make_disk(0, 1.0)
    return ProductDomain((d, d))


@pytest.fixture(scope="session")
def bidisk_suite(bidisk):
    return QuadratureSuite.build(bidisk, 32, 32)


@pytest.fixture(scope="session")
def tridisk():
    d = make_disk(0, 1.0)
    return ProductDomain((d, d, d))


def random_expr(rng, arity, depth):
    """Random expression tree over z1..z<arity>, safe for FD checks.

    Division only by constants bounded away from zero, so values and
    derivatives stay well conditioned at interior points.
    """
    if depth == 0:
        kind = rng.integers(0, 3)
        if kind == 0:
            return const(complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
        j = int(rng.integers(1, arity + 1))
        return var(j) if kind == 1 else conj(var(j))
    op = rng.integers(0, 7)
    if op == 0:
        return add(random_expr(rng, arity, depth - 1), random_expr(rng, arity, depth - 1))
    if op == 1:
        return sub(random_expr(rng, arity, depth - 1), random_expr(rng, arity, depth - 1))
    if op == 2:
        return mul(random_expr(rng, arity, depth - 1), random_expr(rng, arity, depth - 1))
    if op == 3:
        denom = complex(rng.uniform(0.5, 2.0) * (1 if rng.random() < 0.5 else -1),
                        rng.uniform(0.5, 2.0))
        return div(random_expr(rng, arity, depth - 1), const(denom))
    if op == 4:
        return neg(random_expr(rng, arity, depth - 1))
    if op == 5:
        return pow_(random_expr(rng, arity, depth - 1), int(rng.integers(2, 4)))
    fn = ("exp", "sin", "cos")[rng.integers(0, 3)]
    # scale the argument down so entire functions stay tame
    return call(fn, mul(const(0.4), random_expr(rng, arity, depth - 1)))


def random_interior_point(rng, arity, radius=0.8):
    pts = []
    for _ in range(arity):
        while True:
            z = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
            if abs(z) <= radius:
                pts.append(z)
                break
    return tuple(pts)

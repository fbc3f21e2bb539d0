import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_expr, random_interior_point
from dbar.errors import ExprSyntaxError, NumericsError, ValidationError
from dbar.wirtinger_expr import (
    Conj,
    Const,
    Mul,
    Var,
    conj,
    const,
    d_bar,
    d_z,
    eval_expr,
    evaluate,
    mul,
    parse,
    pow_,
    var,
)


def wirtinger_fd(fn, z, h=1e-5, bar=True):
    fx = (fn(z + h) - fn(z - h)) / (2 * h)
    fy = (fn(z + 1j * h) - fn(z - 1j * h)) / (2 * h)
    return 0.5 * (fx + 1j * fy) if bar else 0.5 * (fx - 1j * fy)


# --- parsing ---------------------------------------------------------------


def test_parse_product_of_conjugates():
    e = parse("conj(z1)*conj(z2)", 2)
    assert isinstance(e, Mul)
    assert isinstance(e.lhs, Conj) and isinstance(e.rhs, Conj)


def test_parse_arity_error():
    with pytest.raises(ValidationError):
        parse("z3", 2)


def test_parse_eval_example():
    e = parse("exp(conj(z1)) + 0.5*z2", 2)
    assert abs(evaluate(e, (0, 2)) - 2.0) < 1e-15


def test_parse_complex_literals():
    assert evaluate(parse("2+3i", 1), (0,)) == 2 + 3j
    assert evaluate(parse("i", 1), (0,)) == 1j
    assert evaluate(parse("1.5e2", 1), (0,)) == 150.0


def test_parse_syntax_error_carries_position():
    with pytest.raises(ExprSyntaxError) as err:
        parse("conj(z1", 1)
    assert err.value.position == 7
    with pytest.raises(ExprSyntaxError) as err:
        parse("z1 + $", 1)
    assert err.value.position == 5


def test_parse_power_and_pow_call():
    assert abs(evaluate(parse("z1^3", 1), (1j,)) + 1j) < 1e-15
    assert abs(evaluate(parse("pow(z1, -2)", 1), (2,)) - 0.25) < 1e-15


def test_parse_unary_minus_binds_tighter_than_power():
    # precedence: unary minus above power, so -2^2 = (-2)^2
    assert evaluate(parse("-2^2", 1), (0,)) == 4.0


def test_parse_whitespace_insensitive():
    a = parse(" conj( z1 ) * z2 ", 2)
    b = parse("conj(z1)*z2", 2)
    assert evaluate(a, (1 + 1j, 2)) == evaluate(b, (1 + 1j, 2))


# --- evaluation ------------------------------------------------------------


def test_eval_conj():
    assert evaluate(conj(var(1)), (2 + 1j,)) == 2 - 1j


def test_eval_power():
    assert abs(evaluate(pow_(var(1), 3), (1j,)) + 1j) < 1e-15


def test_eval_division_by_zero():
    e = parse("z1/z2", 2)
    with pytest.raises(NumericsError):
        evaluate(e, (1, 0))


def test_eval_broadcasts_arrays():
    e = parse("conj(z1)*z2", 2)
    z1 = np.array([1j, 2j])
    out = eval_expr(e, (z1, 3.0))
    assert np.allclose(out, [-3j, -6j])


# --- differentiation -------------------------------------------------------


def test_dbar_defining_rule():
    assert d_bar(conj(var(1)), 1) == Const(1 + 0j)


def test_dbar_product_rule():
    e = mul(var(1), conj(var(2)))
    assert d_bar(e, 2) == Var(1)


def test_dbar_holomorphic_variable():
    assert d_bar(var(1), 1) == Const(0j)


def test_dbar_exp_chain_rule_fd():
    e = parse("exp(conj(z1))", 1)
    de = d_bar(e, 1)
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = random_interior_point(rng, 1)[0]
        sym = evaluate(de, (z,))
        fd = wirtinger_fd(lambda w: evaluate(e, (w,)), z)
        assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym))


def test_fd_consistency_100_random_exprs():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 100:
        arity = int(rng.integers(1, 4))
        e = random_expr(rng, arity, int(rng.integers(1, 6)))
        j = int(rng.integers(1, arity + 1))
        de = d_bar(e, j)
        p = random_interior_point(rng, arity)
        try:
            sym = evaluate(de, p)
            vals = {}
            def along(w):
                q = list(p)
                q[j - 1] = w
                return evaluate(e, tuple(q))
            fd = wirtinger_fd(along, p[j - 1])
        except NumericsError:
            continue
        if abs(sym) > 1e3:  # skip ill-scaled draws; relative FD needs headroom
            continue
        assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym))
        checked += 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_commutation_of_mixed_derivatives(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, 2, 3)
    a = d_bar(d_bar(e, 1), 2)
    b = d_bar(d_bar(e, 2), 1)
    p = random_interior_point(rng, 2)
    try:
        va, vb = evaluate(a, p), evaluate(b, p)
    except NumericsError:
        return
    assert abs(va - vb) <= 1e-12 * max(1.0, abs(va))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_conjugation_duality(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, 2, 3)
    p = random_interior_point(rng, 2)
    for j in (1, 2):
        try:
            lhs = evaluate(d_bar(conj(e), j), p)
            rhs = np.conjugate(evaluate(d_z(e, j), p))
        except NumericsError:
            return
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def _strip_conj(e, rng):
    """Random expression guaranteed conj-free (holomorphic)."""
    while True:
        expr = random_expr(rng, 2, 4)
        if "Conj" not in repr(expr):
            return expr


def test_holomorphy_detector():
    rng = np.random.default_rng(7)
    for _ in range(25):
        e = _strip_conj(rng, rng)
        p = random_interior_point(rng, 2)
        for j in (1, 2):
            try:
                v = evaluate(d_bar(e, j), p)
            except NumericsError:
                break
            assert abs(v) <= 1e-14 * max(1.0, abs(evaluate(e, p)))


def test_constant_folding_keeps_trees_small():
    e = parse("2*3 + 0*z1 + 1*conj(z1)", 1)
    # folded: 6 + conj(z1)
    assert evaluate(e, (1j,)) == 6 - 1j
    assert repr(e).count("Var") == 1

"""Expression language: grammar, evaluation, differentiation, zero oracle.

The derivative tests check symbolic results against central finite differences
before trusting any simplified form; the quoted tolerances (rel 1e-5 at step
1e-4, rel 1e-6 at random interior points) are part of the module contract.
"""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from supersmooth.expr import (
    Add, Call, Const, DomainError, Div, Mul, Neg, ParseError, Pow, Sub, Var,
    compose, evaluate, is_zero, parse, partial, pretty, simplify,
)


def x(i, p):
    return Var(p, i)


def c(v, p):
    return Const(p, v)


# ---------------------------------------------------------------------------
# parsing


def test_parse_product():
    e = parse("sin(x1)*x2", 2)
    assert e == Mul(2, Call(2, "sin", (Var(2, 1),)), Var(2, 2))


def test_parse_flat_node():
    e = parse("flat(x1)", 1)
    assert e == Call(1, "flat", (Var(1, 1),))


def test_parse_variable_out_of_range():
    with pytest.raises(ParseError):
        parse("x3", 2)


def test_parse_unknown_identifier():
    with pytest.raises(ParseError):
        parse("frob(x1)", 1)


def test_parse_error_carries_position():
    try:
        parse("x1 + ", 1)
    except ParseError as err:
        assert err.pos == 5
    else:
        pytest.fail("no error")


def test_parse_leading_minus():
    e = parse("-x1", 1)
    assert evaluate(e, (3.0,)) == -3.0


def test_parse_power_binds_tighter_than_mul():
    e = parse("2*x1^3", 1)
    assert evaluate(e, (2.0,)) == 16.0


def test_parse_bump_shorthand_inserts_x1():
    assert parse("bump(0, 1)", 1) == parse("bump(x1, 0, 1)", 1)


def test_bump_bounds_must_be_constant():
    with pytest.raises(ParseError):
        parse("bump(x1, x1, 1)", 1)


def test_pretty_parse_roundtrip_golden():
    for text, p in [
        ("sin(x1)*x2", 2),
        ("x1^2 + 2*x1 + 1", 1),
        ("flat(x1)/x2", 2),
        ("1/2", 1),
        ("-x1 - 3", 1),
        ("bump(x1, 0, 1)", 1),
    ]:
        e = parse(text, p)
        assert parse(pretty(e), p) == e


# ---------------------------------------------------------------------------
# evaluation


def test_eval_square():
    assert evaluate(parse("x1^2", 1), (3.0,)) == 9.0


def test_eval_flat_at_zero_is_exactly_zero():
    assert evaluate(parse("flat(x1)", 1), (0.0,)) == 0.0


def test_eval_sin_times_x2():
    assert evaluate(parse("sin(x1)*x2", 2), (0.0, 5.0)) == 0.0


def test_eval_flat_positive_away_from_zero():
    assert evaluate(parse("flat(x1)", 1), (1.0,)) == pytest.approx(math.exp(-1.0))


def test_eval_division_by_zero_raises():
    with pytest.raises(DomainError):
        evaluate(parse("1/x1", 1), (0.0,))


def test_eval_log_domain():
    with pytest.raises(DomainError):
        evaluate(parse("log(x1)", 1), (-1.0,))


def test_eval_bump_support():
    e = parse("bump(x1, 0, 1)", 1)
    assert evaluate(e, (0.5,)) > 0
    assert evaluate(e, (0.0,)) == 0.0
    assert evaluate(e, (1.0,)) == 0.0
    assert evaluate(e, (-0.3,)) == 0.0
    assert evaluate(e, (1.7,)) == 0.0


def test_flat_factor_kills_singular_cofactor():
    # (2/x1^3)*flat(x1) has a removable singularity at 0
    e = parse("(2/x1^3)*flat(x1)", 1)
    assert evaluate(e, (0.0,)) == 0.0


# ---------------------------------------------------------------------------
# differentiation, finite-difference oracle first


def fd(e, pt, i, h=1e-4):
    up = list(pt)
    dn = list(pt)
    up[i - 1] += h
    dn[i - 1] -= h
    return (evaluate(e, up) - evaluate(e, dn)) / (2 * h)


def check_derivative(text, p, boxes, rel=1e-5, n=50, seed=7):
    e = parse(text, p)
    rng = random.Random(seed)
    for i in range(1, p + 1):
        de = partial(e, i)
        checked = 0
        for _ in range(n):
            pt = tuple(rng.uniform(lo, hi) for lo, hi in boxes)
            try:
                sym = evaluate(de, pt)
                num = fd(e, pt, i)
            except DomainError:
                continue
            checked += 1
            assert abs(sym - num) <= rel * max(1.0, abs(sym), abs(num)), (
                text, i, pt, sym, num)
        assert checked >= n // 2, f"too few usable samples for {text}"


def test_partial_product_rule():
    assert partial(parse("x1*x2", 2), 1) == Var(2, 2)


def test_partial_sin():
    assert partial(parse("sin(x1)", 1), 1) == Call(1, "cos", (Var(1, 1),))


def test_partial_matches_finite_differences():
    check_derivative("sin(x1)*x2 + exp(x1*x2)", 2, [(-1.5, 1.5), (-1.5, 1.5)])
    check_derivative("x1^3 - 2*x1 + 5", 1, [(-2.0, 2.0)])
    check_derivative("log(x1 + 3)", 1, [(-1.0, 2.0)])
    check_derivative("sqrt(x1 + 5)", 1, [(-2.0, 2.0)])
    check_derivative("tan(x1)", 1, [(-1.0, 1.0)])
    check_derivative("cos(x1)/x2", 2, [(-2.0, 2.0), (1.0, 3.0)])
    check_derivative("bump(x1, -1, 1)", 1, [(-2.0, 2.0)], rel=1e-4)


def test_partial_flat_at_and_near_zero():
    e = parse("flat(x1)", 1)
    de = partial(e, 1)
    # finite differences at the quoted probe points
    for pt in [(0.0,), (0.5,), (-0.5,)]:
        num = fd(e, pt, 1)
        sym = evaluate(de, pt)
        assert abs(sym - num) <= 1e-6 * max(1.0, abs(sym), abs(num))
    assert evaluate(de, (0.0,)) == 0.0


def test_flat_derivative_shape():
    # (2/u^3) * flat(u) up to canonical ordering
    de = partial(parse("flat(x1)", 1), 1)
    ref = simplify(parse("(2/x1^3)*flat(x1)", 1))
    assert de == ref


def test_flat_vanishes_to_order_six():
    e = parse("flat(x1)", 1)
    for _ in range(6):
        assert abs(evaluate(e, (0.0,))) < 1e-12
        e = partial(e, 1)
    assert abs(evaluate(e, (0.0,))) < 1e-12


# ---------------------------------------------------------------------------
# simplification


def test_simplify_annihilates_zero_times_sin():
    e = parse("0*sin(x1) + x1", 1)
    assert simplify(e) == Var(1, 1)


def test_simplify_cancels_identical_terms():
    assert simplify(parse("x1 - x1", 1)) == Const(1, 0)


def test_simplify_keeps_domain_restrictions():
    e = parse("exp(log(x1))", 1)
    assert simplify(e) == e
    kept = simplify(parse("0*log(x1)", 1))
    assert kept != Const(1, 0)


def test_simplify_folds_constants():
    assert simplify(parse("2*3 + 1", 1)) == Const(1, 7)
    assert simplify(parse("(1/2)*x1*2", 1)) == Var(1, 1)


def test_simplify_merges_powers():
    assert simplify(parse("x1*x1", 1)) == Pow(1, Var(1, 1), 2)
    assert simplify(parse("x1*x1^2", 1)) == Pow(1, Var(1, 1), 3)


def test_simplify_preserves_value():
    rng = random.Random(3)
    texts = [
        ("x1*x2 + x2*x1", 2),
        ("(x1 + 1)*(x1 - 1)", 1),
        ("sin(x1)^2 + cos(x1)^2", 1),
        ("exp(x1)*exp(x2)/exp(x1)", 2),
        ("2*x1/4", 1),
    ]
    for text, p in texts:
        e = parse(text, p)
        s = simplify(e)
        for _ in range(100):
            pt = tuple(rng.uniform(-2, 2) for _ in range(p))
            try:
                ve, vs = evaluate(e, pt), evaluate(s, pt)
            except DomainError:
                continue
            assert abs(ve - vs) <= 1e-9 * max(1.0, abs(ve), abs(vs))


# hypothesis strategies for total expressions

def exprs(p, depth=3):
    leaf = st.one_of(
        st.integers(-3, 3).map(lambda v: Const(p, v)),
        st.integers(1, p).map(lambda i: Var(p, i)),
    )

    def extend(children):
        unary = children.flatmap(lambda a: st.sampled_from([
            Neg(p, a),
            Call(p, "sin", (a,)),
            Call(p, "cos", (a,)),
            Call(p, "exp", (a,)),
            Call(p, "flat", (a,)),
            Pow(p, a, 2),
        ]))
        binary = st.tuples(children, children).flatmap(lambda ab: st.sampled_from([
            Add(p, *ab), Sub(p, *ab), Mul(p, *ab),
        ]))
        return st.one_of(unary, binary)

    return st.recursive(leaf, extend, max_leaves=2 ** depth)


@settings(max_examples=60, deadline=None)
@given(exprs(2))
def test_simplify_idempotent(e):
    s = simplify(e)
    assert simplify(s) == s


@settings(max_examples=60, deadline=None)
@given(exprs(2))
def test_pretty_parse_roundtrip(e):
    # identity on canonical trees; raw trees may differ by canonicalization
    s = simplify(e)
    assert parse(pretty(s), 2) == s


@settings(max_examples=40, deadline=None)
@given(exprs(2), st.integers(0, 10))
def test_simplify_agrees_numerically(e, k):
    rng = random.Random(k)
    s = simplify(e)
    for _ in range(10):
        pt = (rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        ve, vs = evaluate(e, pt), evaluate(s, pt)
        assert abs(ve - vs) <= 1e-9 * max(1.0, abs(ve), abs(vs))


@settings(max_examples=30, deadline=None)
@given(exprs(2))
def test_partial_of_total_matches_fd(e):
    rng = random.Random(11)
    de = partial(e, 1)
    for _ in range(5):
        pt = (rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2))
        try:
            sym = evaluate(de, pt)
            num = fd(e, pt, 1)
        except (DomainError, OverflowError):
            continue
        if max(abs(sym), abs(num)) > 1e6:
            continue  # finite differences lose accuracy on huge slopes
        assert abs(sym - num) <= 1e-3 * max(1.0, abs(sym), abs(num))


# ---------------------------------------------------------------------------
# substitution


def test_compose_chain():
    h = parse("x1^2 + x2", 2)
    a = parse("sin(x1)", 1)
    b = parse("x1 + 1", 1)
    e = compose(h, [a, b], 1)
    for t in (-1.0, 0.0, 0.7):
        assert evaluate(e, (t,)) == pytest.approx(math.sin(t) ** 2 + t + 1)


# ---------------------------------------------------------------------------
# zero oracle


def test_is_zero_literal_zero_exact():
    v = is_zero(parse("0", 1))
    assert v.kind == "Zero" and v.provenance == "exact"


def test_is_zero_pythagorean_sampled():
    v = is_zero(parse("sin(x1)^2 + cos(x1)^2 - 1", 1), box=(-2, 2), samples=100)
    assert v.kind == "Zero" and v.provenance == "sampled"


def test_is_zero_flat_nonzero_witness():
    v = is_zero(parse("flat(x1)", 1), box=(-2, 2), samples=200, seed=1)
    assert v.kind == "NonZero"
    assert abs(v.witness[0]) > 0.1


def test_is_zero_deterministic_for_seed():
    a = is_zero(parse("flat(x1)", 1), seed=5)
    b = is_zero(parse("flat(x1)", 1), seed=5)
    assert a == b

"""Smooth application on even elements: Taylor sums, axioms, odd algebras."""

import math
import random
from fractions import Fraction

import pytest

from supersmooth import expr as ex
from supersmooth.grassmann import SuperElement, parse_super
from supersmooth.rings import (
    SplitSuperRing,
    WeilSuperAlgebra,
    apply_smooth,
    apply_smooth_first_order,
    check_composition_axiom,
    check_projection_axiom,
    random_even_element,
    weil_apply,
)


def exp_series(n: SuperElement) -> SuperElement:
    """Independent oracle: sum n^k / k! until the power dies."""
    total = SuperElement.scalar(1, n.p, n.q)
    power = SuperElement.scalar(1, n.p, n.q)
    k = 0
    while True:
        k += 1
        power = power * n
        if power.is_zero_element():
            return total
        total = total + power.scale(Fraction(1, math.factorial(k)))


U = ex.Var(1, 1)


def test_single_even_variable_first_order_shape():
    # body f with a single soul block: h(f) + h'(f) g t1t2
    a = parse_super("x1 + sin(x1)*t1t2", 1, 2)
    got = apply_smooth(ex.Call(1, "exp", (U,)), [a])
    want = parse_super("exp(x1) + exp(x1)*sin(x1)*t1t2", 1, 2)
    assert got == want


def test_square_needs_second_order_term():
    arg = parse_super("t1t2 + t3t4", 0, 4)
    got = apply_smooth(ex.Pow(1, U, 2), [arg])
    assert got == arg * arg
    assert got == parse_super("2*t1t2t3t4", 0, 4)
    # the printed formula with only linear soul terms misses the product
    assert apply_smooth_first_order(ex.Pow(1, U, 2), [arg]) != arg * arg


def test_exp_of_soul_matches_series_oracle():
    arg = parse_super("t1t2 + t3t4", 0, 4)
    got = apply_smooth(ex.Call(1, "exp", (U,)), [arg])
    assert got == exp_series(arg)
    assert got == parse_super("1 + t1t2 + t3t4 + t1t2t3t4", 0, 4)


def test_projection_returns_argument():
    rng = random.Random(3)
    ring = SplitSuperRing(2, 4)
    args = [random_even_element(ring, rng) for _ in range(3)]
    for i in range(1, 4):
        assert apply_smooth(ex.Var(3, i), args) == args[i - 1]


def test_parity_and_arity_validation():
    ring = SplitSuperRing(1, 2)
    odd = ring.theta(1)
    with pytest.raises(ValueError, match="parity"):
        apply_smooth(U, [odd])
    with pytest.raises(ValueError, match="arity"):
        apply_smooth(ex.Var(2, 1), [ring.var(1)])
    with pytest.raises(ValueError, match="argument"):
        apply_smooth(ex.Const(0, Fraction(1)), [])


def test_mul_expression_agrees_with_ring_product():
    h = ex.Mul(2, ex.Var(2, 1), ex.Var(2, 2))
    for q in (2, 4, 6):
        ring = SplitSuperRing(1, q)
        rng = random.Random(q)
        for _ in range(5):
            a = random_even_element(ring, rng)
            b = random_even_element(ring, rng)
            assert apply_smooth(h, [a, b]) == a * b


def test_body_only_application_is_composition():
    from supersmooth.rings import random_smooth

    rng = random.Random(11)
    for _ in range(10):
        h = random_smooth(rng, 1, depth=2)
        body = ex.simplify(random_smooth(rng, 2, depth=2))
        a = SuperElement.from_expr(body, 4)
        got = apply_smooth(h, [a])
        assert got == SuperElement.from_expr(ex.simplify(ex.compose(h, [body], 2)), 4)


def test_superreduction_commutes_with_application():
    ring = SplitSuperRing(2, 4)
    rng = random.Random(5)
    h = ex.Call(1, "exp", (ex.Var(1, 1),))
    for _ in range(8):
        a = random_even_element(ring, rng)
        lhs = apply_smooth(h, [a]).superreduce()
        rhs = ex.simplify(ex.compose(h, [a.superreduce()], 2))
        assert lhs == rhs


def test_first_order_suffices_for_small_odd_rank():
    # with q <= 3 every soul product vanishes
    ring = SplitSuperRing(1, 3)
    rng = random.Random(9)
    h = ex.Call(1, "sin", (ex.Mul(1, ex.Const(1, Fraction(2)), U),))
    for _ in range(6):
        a = random_even_element(ring, rng)
        assert apply_smooth(h, [a]) == apply_smooth_first_order(h, [a])


def test_projection_axiom_report():
    report = check_projection_axiom(SplitSuperRing(1, 2), trials=50, seed=0)
    assert report["failures"] == []
    assert report["verdict"].kind == "Yes"


def test_composition_axiom_report_q2():
    report = check_composition_axiom(SplitSuperRing(1, 2), trials=50, seed=0)
    assert report["failures"] == []
    assert report["verdict"].kind == "Yes"


def test_composition_axiom_full_taylor_q4():
    report = check_composition_axiom(SplitSuperRing(1, 4), trials=100, seed=0)
    assert report["failures"] == []
    assert report["verdict"].kind == "Yes"


def test_composition_axiom_fails_first_order_q4():
    # same ring, same trials: only the truncation changed
    report = check_composition_axiom(SplitSuperRing(1, 4), trials=100, seed=0,
                                     apply_fn=apply_smooth_first_order)
    assert report["verdict"].kind == "No"
    assert report["failures"]
    w = report["failures"][0]
    assert "composite" in w and "index" in w


def test_weil_cube_on_one_plus_soul():
    w = WeilSuperAlgebra(2)
    arg = w.element("1 + t1t2")
    got = weil_apply(w, ex.Pow(1, U, 3), [arg])
    # binomial oracle: the ring power itself
    assert got == arg * arg * arg
    assert got == w.element("1 + 3*t1t2")


def test_weil_exp_first_order_case():
    w = WeilSuperAlgebra(2)
    m = w.element("t1t2")
    assert weil_apply(w, ex.Call(1, "exp", (U,)), [m]) == w.element("1 + t1t2")


def test_weil_free_dimension_and_nilpotency():
    w = WeilSuperAlgebra(3)
    assert w.dimension() == 8
    gens = w.maximal_ideal_generators()
    rng = random.Random(2)
    for _ in range(5):
        prod = w.ring.one()
        for _ in range(w.q + 1):
            g = gens[rng.randrange(len(gens))]
            c = rng.choice([1, 2, -1])
            prod = prod * g.scale(c)
        assert prod.is_zero_element()


def test_weil_rejects_unit_relation():
    with pytest.raises(ValueError, match="unit body"):
        WeilSuperAlgebra(2, ["1 + t1t2"])

"""Real points, jets, the section kernel test and Zariski predicates."""

import math
import random
from fractions import Fraction

import pytest

import supersmooth.expr as ex
from supersmooth.grassmann import SuperElement, parse_super
from supersmooth.quotients import SuperIdeal, QuotientSuperRing, superreduce_presentation
from supersmooth.rings import SplitSuperRing, random_smooth
from supersmooth.spectrum import (
    LocalElement,
    RPoint,
    Z_of,
    fairfication,
    find_rpoints,
    germ_zero_certificate,
    global_section,
    in_D,
    localize,
    psi_kernel_test,
    taylor_jet,
)


def quotient(p, q, gens):
    ring = SplitSuperRing(p, q)
    return QuotientSuperRing(ring, SuperIdeal(ring, gens))


# Oracle: one-dimensional Taylor coefficients from finite differences of
# successively differentiated closed forms is circular; instead use series
# definitions directly.

def sin_series_coeff(n):
    if n % 2 == 0:
        return Fraction(0)
    return Fraction((-1) ** (n // 2), math.factorial(n))


def jet_product_oracle(a, b, order):
    out = {}
    for al, va in a.items():
        for be, vb in b.items():
            g = tuple(x + y for x, y in zip(al, be))
            if sum(g) <= order:
                out[g] = out.get(g, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


# taylor_jet


def test_taylor_jet_sin_matches_series_oracle():
    jet, exact = taylor_jet(ex.parse("sin(x1)", 1), (0.0,), 5)
    assert not exact
    for n in range(6):
        want = float(sin_series_coeff(n))
        got = float(jet.get((n,), 0.0))
        assert got == pytest.approx(want, abs=1e-12)


def test_taylor_jet_polynomial_is_exact_fractions():
    jet, exact = taylor_jet(ex.parse("x1^2 + 2", 1), (1.0,), 6)
    assert exact
    assert jet == {(0,): Fraction(3), (1,): Fraction(2), (2,): Fraction(1)}


def test_taylor_jet_two_variables():
    jet, exact = taylor_jet(ex.parse("x1*x2^2", 2), (1.0, 2.0), 6)
    assert exact
    # (1+s)(2+t)^2 = 4 + 4s + 4t + 4st + t^2 + s t^2
    assert jet == {(0, 0): Fraction(4), (1, 0): Fraction(4), (0, 1): Fraction(4),
                   (1, 1): Fraction(4), (0, 2): Fraction(1), (1, 2): Fraction(1)}


def test_flat_function_has_zero_jet_at_origin():
    jet, exact = taylor_jet(ex.parse("flat(x1)", 1), (0.0,), 6)
    assert jet == {}
    assert not exact


# R-points


def test_circle_points_lie_on_circle():
    Q = quotient(2, 1, ["x1^2 + x2^2 - 1"])
    pts = find_rpoints(Q, box=(-2.0, 2.0), grid_n=40)
    assert len(pts) >= 100
    g = ex.parse("x1^2 + x2^2 - 1", 2)
    for x in pts:
        assert abs(ex.evaluate(g, x.coords)) < 1e-9


def test_circle_points_deduplicated():
    Q = quotient(2, 1, ["x1^2 + x2^2 - 1"])
    pts = find_rpoints(Q, grid_n=15)
    coords = [x.coords for x in pts]
    for i, a in enumerate(coords):
        for b in coords[i + 1:]:
            assert max(abs(u - v) for u, v in zip(a, b)) > 1e-6


def test_free_ring_points_are_the_grid():
    R = SplitSuperRing(1, 2)
    pts = find_rpoints(R, box=(-2.0, 2.0), grid_n=5)
    assert [x.coords for x in pts] == [(-2.0,), (-1.0,), (0.0,), (1.0,), (2.0,)]


def test_unit_ideal_has_no_points():
    Q = quotient(1, 0, ["1"])
    assert find_rpoints(Q) == []


def test_zero_even_arity_has_single_empty_point():
    R = SplitSuperRing(0, 2)
    pts = find_rpoints(R)
    assert len(pts) == 1 and pts[0].coords == ()


def test_rpoint_rejects_off_variety_coordinates():
    Q = quotient(2, 1, ["x1^2 + x2^2 - 1"])
    with pytest.raises(ValueError):
        RPoint(Q, (0.5, 0.5))
    RPoint(Q, (1.0, 0.0))


def test_rpoint_residue_evaluation():
    R = SplitSuperRing(1, 2)
    x = RPoint(R, (2.0,))
    a = R.parse("x1^2 + sin(x1)*t1*t2")
    assert x.ev(a) == pytest.approx(4.0)


# localization


def test_localize_sin_theta_order_three():
    R = SplitSuperRing(1, 1)
    r = R.parse("sin(x1)*t1")
    jet = localize(r, (0.0,), order=3)
    assert set(jet.coeffs) == {(1,)}
    js = jet.coeffs[(1,)]
    assert js[(1,)] == pytest.approx(1.0)
    assert js[(3,)] == pytest.approx(-1.0 / 6.0)
    assert (2,) not in js and (0,) not in js
    assert not jet.exact


def test_localize_polynomial_exact():
    R = SplitSuperRing(1, 2)
    r = R.parse("(x1^2 + 2) * t1 + x1")
    jet = localize(r, (1.0,), order=6)
    assert jet.exact
    assert jet.coeffs[(1,)] == {(0,): Fraction(3), (1,): Fraction(2),
                                (2,): Fraction(1)}
    assert jet.coeffs[()] == {(0,): Fraction(1), (1,): Fraction(1)}


def test_localize_flat_is_zero_jet():
    R = SplitSuperRing(1, 1)
    jet = localize(R.parse("flat(x1)"), (0.0,), order=6)
    assert jet.is_zero_jet()


def test_localize_bump_outside_support_zero_jet_and_zero_germ():
    R = SplitSuperRing(1, 2)
    r = R.parse("bump(x1, 1, 2) * t1 * t2")
    jet = localize(r, (0.0,), order=6)
    assert jet.is_zero_jet()
    cert = germ_zero_certificate(r, (0.0,))
    assert cert is not None
    assert "bump" in cert["factor"]
    assert cert["separation"] == pytest.approx(1.0)


def test_germ_certificate_absent_inside_support():
    R = SplitSuperRing(1, 2)
    r = R.parse("bump(x1, 0, 1) * t1 * t2")
    assert germ_zero_certificate(r, (0.5,)) is None
    # flat has no bump factor at all, so no certificate even with zero jet
    assert germ_zero_certificate(R.parse("flat(x1)"), (0.0,)) is None


def test_jet_multiplication_matches_convolution_oracle():
    rng = random.Random(7)
    for _ in range(20):
        a = {(i,): rng.randint(-3, 3) for i in range(4)}
        b = {(i,): rng.randint(-3, 3) for i in range(4)}
        a = {k: v for k, v in a.items() if v}
        b = {k: v for k, v in b.items() if v}
        ja = LocalElement(1, 0, (0.0,), 4, {(): a}, True)
        jb = LocalElement(1, 0, (0.0,), 4, {(): b}, True)
        want = jet_product_oracle(a, b, 4)
        got = (ja * jb).coeffs.get((), {})
        assert got == want


def test_jet_odd_multiplication_signs():
    one = {(): 1}
    t1 = LocalElement(0, 2, (), 4, {(1,): one}, True)
    t2 = LocalElement(0, 2, (), 4, {(2,): one}, True)
    assert (t1 * t2).coeffs == {(1, 2): {(): 1}}
    assert (t2 * t1).coeffs == {(1, 2): {(): -1}}
    assert (t1 * t1).is_zero_jet()


def test_localize_is_ring_morphism_exact_on_polynomials():
    R = SplitSuperRing(2, 2)
    rng = random.Random(3)
    pts = [(0.0, 0.0), (1.0, -1.0), (0.5, 2.0)]
    for _ in range(15):
        a = R.parse("x1^2 - x2") * SuperElement.theta(1, 2, 2) + R.scalar(rng.randint(-2, 2))
        b = R.parse("x2^3 + x1") * SuperElement.theta(2, 2, 2) + R.var(1)
        for pt in pts:
            la, lb = localize(a, pt), localize(b, pt)
            assert localize(a + b, pt) == la + lb
            assert localize(a * b, pt) == la * lb


def test_localize_is_ring_morphism_sampled_on_transcendentals():
    R = SplitSuperRing(1, 2)
    rng = random.Random(11)
    for _ in range(10):
        h1 = random_smooth(rng, 1)
        h2 = random_smooth(rng, 1)
        a = SuperElement.from_expr(h1, 2) + R.parse("t1*t2").scale(rng.randint(-2, 2))
        b = SuperElement.from_expr(h2, 2) * SuperElement.theta(1, 1, 2)
        for pt in [(0.0,), (0.7,)]:
            la, lb = localize(a, pt, order=4), localize(b, pt, order=4)
            assert localize(a * b, pt, order=4).close_to(la * lb, tol=1e-6)
            assert localize(a + b, pt, order=4).close_to(la + lb, tol=1e-9)


def test_jet_parity_preserved():
    R = SplitSuperRing(1, 2)
    jet = localize(R.parse("x1*t1 + t2"), (0.0,))
    assert all(len(I) % 2 == 1 for I in jet.coeffs)


# kernel of the section map


def test_psi_zero_exact_via_normal_form():
    Q = quotient(1, 2, ["x1^2 + t1*t2"])
    v = psi_kernel_test(Q.ring.parse("x1^4"), Q)
    assert v.kind == "Zero" and v.provenance == "exact"


def test_psi_theta_coefficient_killed_by_body_relation():
    Q = quotient(1, 1, ["x1"])
    v = psi_kernel_test(Q.ring.parse("x1*t1"), Q)
    assert v.kind == "Zero" and v.provenance == "exact"


def test_psi_nonzero_with_witness_point():
    R = SplitSuperRing(1, 0)
    v = psi_kernel_test(R.parse("x1"), R, grid_n=9)
    assert v.kind == "NonZero" and v.provenance == "sampled"
    assert "point" in v.witness and abs(v.witness["value"]) > 1e-9


def test_psi_zero_sampled_with_germ_certificates():
    R = SplitSuperRing(1, 2)
    v = psi_kernel_test(R.parse("bump(x1, 4, 5)*t1*t2"), R, grid_n=9)
    assert v.kind == "Zero" and v.provenance == "sampled"
    assert "germ-zero certificates" in v.note


def test_psi_flat_blindness_is_flagged():
    Q = quotient(1, 1, ["x1"])
    v = psi_kernel_test(Q.ring.parse("flat(x1)*t1"), Q)
    assert v.kind == "Zero" and v.provenance == "sampled"
    assert "flat" in v.note


def test_psi_unknown_when_no_points():
    Q = quotient(1, 0, ["x1^2 + 1"])
    v = psi_kernel_test(Q.ring.parse("x1"), Q)
    assert v.kind == "Unknown"


# sections


def test_global_section_records_jets_at_all_points():
    Q = quotient(2, 1, ["x1^2 + x2^2 - 1"])
    pts = find_rpoints(Q, grid_n=12)
    sec = global_section(Q.ring.parse("x1"), Q, points=pts, order=2)
    assert set(sec.jets) == {x.coords for x in pts}
    for x in pts:
        jet = sec.jet_at(x)
        assert float(jet.coeffs[()][(0, 0)]) == pytest.approx(x.coords[0], abs=1e-9)
    recs = sec.to_json()
    assert len(recs) == len(pts)
    assert all("point" in r and "jets" in r for r in recs)


# fairness


def test_fairfication_free_ring_kills_nothing():
    R = SplitSuperRing(1, 2)
    rep = fairfication(R, ["1", "x1", "sin(x1)", "x1*t1", "t1*t2"], grid_n=9)
    assert rep["killed"] == []
    assert rep["unknown"] == []
    assert len(rep["kept"]) == 5


def test_fairfication_flags_unsampled_bump_section():
    R = SplitSuperRing(1, 2)
    rep = fairfication(R, ["bump(x1, 4, 5)*t1*t2", "1"], grid_n=9)
    assert rep["killed"] == ["bump(x1, 4, 5)*t1t2"]
    assert "1" in rep["kept"]


def test_fairfication_unit_probe_never_killed():
    Q = quotient(1, 2, ["x1^2 + t1*t2"])
    rep = fairfication(Q, ["1", "x1^4", "x1"], grid_n=9)
    assert "1" in rep["kept"]
    assert "x1^4" not in rep["killed"]  # already zero in the quotient
    assert rep["killed"] == []


# Zariski predicates


def circle_points(grid_n=15):
    Q = quotient(2, 1, ["x1^2 + x2^2 - 1"])
    return Q, find_rpoints(Q, grid_n=grid_n)


def test_in_D_principal_open_membership():
    Q, pts = circle_points()
    a = Q.ring.parse("x1")
    inside = [x for x in pts if in_D(a, x)]
    outside = [x for x in pts if not in_D(a, x)]
    assert inside and outside
    for x in outside:
        assert abs(x.coords[0]) <= 1e-9


def test_zero_set_of_product_is_union():
    Q, pts = circle_points()
    ring = Q.ring
    a, b = "x1", "x2 - 1"
    za = {x.coords for x in Z_of(SuperIdeal(ring, [a]), pts)}
    zb = {x.coords for x in Z_of(SuperIdeal(ring, [b]), pts)}
    zab = {x.coords for x in Z_of(SuperIdeal(ring, [f"({a})*({b})"]), pts)}
    assert zab == za | zb


def test_zero_set_lattice_extremes():
    Q, pts = circle_points()
    assert Z_of(SuperIdeal(Q.ring, ["1"]), pts) == []
    assert Z_of(SuperIdeal(Q.ring, ["0"]), pts) == pts


def test_points_separated_by_coordinate_functions():
    Q, pts = circle_points()
    sample = pts[:8]
    for i, x in enumerate(sample):
        for y in sample[i + 1:]:
            j = max(range(2), key=lambda k: abs(x.coords[k] - y.coords[k]))
            c = Q.ring.parse(f"x{j + 1} - ({y.coords[j]!r})")
            assert in_D(c, x) and not in_D(c, y)


def test_point_set_matches_superreduction():
    Q = quotient(1, 2, ["x1^2 + t1*t2"])
    red_ring, red_ideal = superreduce_presentation(Q)
    Qred = QuotientSuperRing(red_ring, red_ideal)
    a = [x.coords for x in find_rpoints(Q, grid_n=11)]
    b = [x.coords for x in find_rpoints(Qred, grid_n=11)]
    assert a == b


def test_point_set_ignores_odd_generators():
    Q1 = quotient(2, 2, ["x1^2 + x2^2 - 1", "t1"])
    Q2 = quotient(2, 2, ["x1^2 + x2^2 - 1"])
    a = [x.coords for x in find_rpoints(Q1, grid_n=11)]
    b = [x.coords for x in find_rpoints(Q2, grid_n=11)]
    assert a == b

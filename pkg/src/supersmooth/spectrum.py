"""Real points, localization at points via jets, sections and fairness.

A real point of a presented quotient is a tuple where every generator body
vanishes; localization at such a point truncates every coefficient to its
Taylor jet there.  Jets are exact for polynomial coefficients and a
documented approximation otherwise: a flat function has zero jet at the
origin even though its germ is nonzero, so verdicts that pass through jets
carry the sampled tag unless a vanishing certificate upgrades them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _cartesian

from . import expr as ex
from .grassmann import SuperElement, merge_indices, pretty_super
from .quotients import QuotientSuperRing, SuperIdeal, solve_zero_set
from .rings import SplitSuperRing
from .verdict import Verdict

DEFAULT_JET_ORDER = 6


def _ring_of(Q):
    return Q if isinstance(Q, SplitSuperRing) else Q.ring


def _bodies_of(Q):
    if isinstance(Q, SplitSuperRing):
        return []
    return Q.ideal.bodies()


@dataclass(frozen=True)
class RPoint:
    """A tuple of reals killing every generator body."""

    quotient: object
    coords: tuple

    def __init__(self, quotient, coords, tol: float = 1e-6):
        ring = _ring_of(quotient)
        coords = tuple(float(c) for c in coords)
        if len(coords) != ring.p:
            raise ValueError(f"expected {ring.p} coordinates, got {len(coords)}")
        for b in _bodies_of(quotient):
            if abs(ex.evaluate(b, coords)) > tol:
                raise ValueError(
                    f"generator body {ex.pretty(b)} does not vanish at {coords}")
        object.__setattr__(self, "quotient", quotient)
        object.__setattr__(self, "coords", coords)

    def ev(self, a: SuperElement) -> float:
        """Residue evaluation: the body at the point."""
        return ex.evaluate(ex.simplify(a.body()), self.coords)

    def __str__(self):
        return "(" + ", ".join(f"{c:.6g}" for c in self.coords) + ")"


def find_rpoints(Q, box=(-2.0, 2.0), grid_n: int = 40, newton_iters: int = 30,
                 seed: int = 0) -> list:
    """Box-bounded sampled real points, lexicographically sorted.

    Completeness is never claimed; every returned point has raw generator
    residual below 1e-9 and the list is deduplicated within 1e-6.
    """
    ring = _ring_of(Q)
    bodies = _bodies_of(Q)
    if not bodies:
        if ring.p == 0:
            return [RPoint(Q, ())]
        lo_hi = ex.normalize_box(box, ring.p)
        axes = [[lo + (hi - lo) * i / (grid_n - 1) for i in range(grid_n)]
                if grid_n > 1 else [(lo + hi) / 2.0] for lo, hi in lo_hi]
        return [RPoint(Q, pt) for pt in sorted(_cartesian(*axes))]
    pts = solve_zero_set(bodies, ring.p, box=box, grid=grid_n, seed=seed,
                         max_steps=newton_iters)
    return [RPoint(Q, pt) for pt in pts]


# ---------------------------------------------------------------------------
# jets


def _multi_indices(p: int, order: int):
    if p == 0:
        yield ()
        return
    for alpha in _cartesian(*(range(order + 1) for _ in range(p))):
        if sum(alpha) <= order:
            yield alpha


def _eval_fraction(e: ex.SmoothExpr, pt):
    if isinstance(e, ex.Const):
        return e.value
    if isinstance(e, ex.Var):
        return pt[e.index - 1]
    if isinstance(e, ex.Add):
        return _eval_fraction(e.a, pt) + _eval_fraction(e.b, pt)
    if isinstance(e, ex.Sub):
        return _eval_fraction(e.a, pt) - _eval_fraction(e.b, pt)
    if isinstance(e, ex.Neg):
        return -_eval_fraction(e.a, pt)
    if isinstance(e, ex.Mul):
        return _eval_fraction(e.a, pt) * _eval_fraction(e.b, pt)
    if isinstance(e, ex.Pow) and e.exponent >= 0:
        return _eval_fraction(e.base, pt) ** e.exponent
    raise TypeError(f"not a polynomial node: {ex.pretty(e)}")


def taylor_jet(e: ex.SmoothExpr, point, order: int):
    """Taylor coefficients {alpha: value} of e at the point, total order
    bounded.  Returns (jet, exact) with exact Fractions when e is polynomial."""
    e = ex.simplify(e)
    p = e.arity
    exact = ex.is_polynomial(e)
    pt = tuple(Fraction(c) for c in point) if exact else tuple(float(c) for c in point)
    derivs = {(0,) * p: e}

    # Polynomials shrink under simplified differentiation; everything else
    # derives raw, since renormalizing each step blows up on bump factors.
    step = ex.partial if exact else ex.partial_raw

    def deriv(alpha):
        if alpha not in derivs:
            i = next(j for j, a in enumerate(alpha) if a > 0)
            parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            derivs[alpha] = step(deriv(parent), i + 1)
        return derivs[alpha]

    jet = {}
    for alpha in _multi_indices(p, order):
        d = deriv(alpha)
        if exact:
            v = _eval_fraction(d, pt)
        else:
            v = ex.evaluate(d, pt)
        fact = math.prod(math.factorial(a) for a in alpha)
        c = v / fact if exact else v / float(fact)
        if c != 0:
            jet[alpha] = c
    return jet, exact


@dataclass(frozen=True)
class LocalElement:
    """Jet representative of an element at a real point.

    coeffs maps odd multi-indices to {alpha: Taylor coefficient}; exact is
    set when every coefficient was polynomial, in which case the entries are
    Fractions.
    """

    p: int
    q: int
    point: tuple
    order: int
    coeffs: dict
    exact: bool

    def __post_init__(self):
        clean = {}
        for I, jet in self.coeffs.items():
            slim = {a: v for a, v in jet.items() if v != 0}
            if slim:
                clean[tuple(I)] = slim
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "point", tuple(float(c) for c in self.point))

    def is_zero_jet(self) -> bool:
        return not self.coeffs

    def max_abs(self) -> float:
        return max((abs(float(v)) for jet in self.coeffs.values()
                    for v in jet.values()), default=0.0)

    def _compat(self, other: "LocalElement"):
        if (self.p, self.q, self.point, self.order) != \
                (other.p, other.q, other.point, other.order):
            raise ValueError("jets live at different points or orders")

    def __add__(self, other):
        self._compat(other)
        out = {I: dict(jet) for I, jet in self.coeffs.items()}
        for I, jet in other.coeffs.items():
            tgt = out.setdefault(I, {})
            for a, v in jet.items():
                tgt[a] = tgt.get(a, 0) + v
        return LocalElement(self.p, self.q, self.point, self.order, out,
                            self.exact and other.exact)

    def __neg__(self):
        out = {I: {a: -v for a, v in jet.items()} for I, jet in self.coeffs.items()}
        return LocalElement(self.p, self.q, self.point, self.order, out, self.exact)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._compat(other)
        out = {}
        for I, ja in self.coeffs.items():
            for J, jb in other.coeffs.items():
                sign, union = merge_indices(I, J)
                if sign == 0:
                    continue
                tgt = out.setdefault(union, {})
                for a, va in ja.items():
                    for b, vb in jb.items():
                        g = tuple(x + y for x, y in zip(a, b)) if a else ()
                        if sum(g) > self.order:
                            continue
                        tgt[g] = tgt.get(g, 0) + sign * va * vb
        return LocalElement(self.p, self.q, self.point, self.order, out,
                            self.exact and other.exact)

    def scale(self, c):
        out = {I: {a: v * c for a, v in jet.items()} for I, jet in self.coeffs.items()}
        exact = self.exact and isinstance(c, (int, Fraction))
        return LocalElement(self.p, self.q, self.point, self.order, out, exact)

    def close_to(self, other: "LocalElement", tol: float = 1e-9) -> bool:
        self._compat(other)
        return (self - other).max_abs() <= tol

    def _monomial_str(self, alpha) -> str:
        pieces = []
        for i, a in enumerate(alpha):
            if a == 0:
                continue
            c = self.point[i]
            base = f"x{i + 1}" if c == 0 else f"(x{i + 1} - {c:g})"
            pieces.append(base if a == 1 else f"{base}^{a}")
        return "*".join(pieces)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for I in sorted(self.coeffs, key=lambda I: (len(I), I)):
            terms = []
            for alpha in sorted(self.coeffs[I]):
                v = self.coeffs[I][alpha]
                coeff = str(v) if isinstance(v, Fraction) else f"{float(v):g}"
                mono = self._monomial_str(alpha)
                if not mono:
                    terms.append(coeff)
                elif coeff == "1":
                    terms.append(mono)
                elif coeff == "-1":
                    terms.append(f"-{mono}")
                else:
                    terms.append(f"{coeff}*{mono}")
            poly = " + ".join(terms).replace("+ -", "- ")
            theta = "".join(f"t{i}" for i in I)
            if not theta:
                parts.append(poly)
            elif len(terms) == 1 and "+" not in poly and " - " not in poly:
                parts.append(f"{poly}*{theta}" if poly != "1" else theta)
            else:
                parts.append(f"({poly})*{theta}")
        return " + ".join(parts)


def localize(r: SuperElement, x, order: int = DEFAULT_JET_ORDER) -> LocalElement:
    """Componentwise Taylor jet of a representative at a real point."""
    point = x.coords if isinstance(x, RPoint) else tuple(float(c) for c in x)
    coeffs = {}
    exact = True
    for I, c in r.coeffs.items():
        jet, ok = taylor_jet(c, point, order)
        exact = exact and ok
        if jet:
            coeffs[I] = jet
    return LocalElement(r.p, r.q, point, order, coeffs, exact)


def germ_zero_certificate(r: SuperElement, point):
    """A bump factor proving the germ vanishes: every term of every
    coefficient carries a bump whose support closure misses the point."""
    point = point.coords if isinstance(point, RPoint) else tuple(point)
    witnesses = []
    for I, c in r.coeffs.items():
        for coeff, vars_t, opaque_t in ex.term_structure(c):
            found = None
            for atom, pos, _neg in opaque_t:
                if pos and isinstance(atom, ex.Call) and atom.func == "bump":
                    u = ex.evaluate(atom.args[0], point)
                    a = float(atom.args[1].value)
                    b = float(atom.args[2].value)
                    if u < a or u > b:
                        found = (atom, min(abs(u - a), abs(u - b)))
                        break
            if found is None:
                return None
            witnesses.append({"factor": ex.pretty(found[0]),
                              "separation": found[1]})
    if not witnesses:
        return None
    return min(witnesses, key=lambda w: w["separation"])


# ---------------------------------------------------------------------------
# jet-level morphisms


def _scalar_jet(value, p: int, q: int, point, order: int) -> LocalElement:
    exact = isinstance(value, (int, Fraction))
    return LocalElement(p, q, point, order, {(): {(0,) * p: value}}, exact)


@dataclass
class LocalizedMorphism:
    """Jet-level map induced by a ring morphism at a target real point."""

    morphism: object
    target_point: RPoint
    source_point: RPoint
    order: int
    verdict: Verdict

    def push(self, r: SuperElement) -> LocalElement:
        """Jet of the image at the target point."""
        return localize(self.morphism.apply(r), self.target_point, self.order)

    def pull_jet(self, r: SuperElement) -> LocalElement:
        """Source jet pushed through the coordinate image jets.

        Substitutes the shifted image jets into the Taylor expansion of each
        coefficient around the source point, all in jet arithmetic.  The
        source expansion runs q_target // 2 orders past the jet order: soul
        parts of the images do not raise polynomial degree, so those extra
        strata still land below the truncation.
        """
        phi = self.morphism
        src_ring = _ring_of(phi.source)
        tgt_ring = _ring_of(phi.target)
        k = self.order
        pt, p, q = self.target_point.coords, tgt_ring.p, tgt_ring.q
        ext = k + tgt_ring.q // 2
        shifted = []
        for j in range(src_ring.p):
            u = localize(phi.images[j], self.target_point, k)
            yj = self.source_point.coords[j]
            shifted.append(u - _scalar_jet(yj, p, q, pt, k))
        out = LocalElement(p, q, pt, k, {}, True)
        for I, c in r.coeffs.items():
            jet, _ = taylor_jet(c, self.source_point.coords, ext)
            odd = localize(phi.apply(SuperElement.monomial(
                I, 1, src_ring.p, src_ring.q)), self.target_point, k)
            for alpha, v in jet.items():
                term = _scalar_jet(v, p, q, pt, k)
                for j, a in enumerate(alpha):
                    for _ in range(a):
                        term = term * shifted[j]
                out = out + term * odd
        return out


def localize_morphism(phi, x: RPoint, order: int = DEFAULT_JET_ORDER,
                      probes: int = 20, seed: int = 0,
                      tol: float = 1e-9) -> LocalizedMorphism:
    """Induce the jet-level morphism at a target point and verify the
    commuting square on random probes."""
    import random as _random

    from .rings import random_even_element

    base = _ring_of(phi.source)
    y_coords = tuple(x.ev(img) for img in phi.images[:base.p])
    y = RPoint(phi.source, y_coords)
    lm = LocalizedMorphism(phi, x, y, order, Verdict("Yes", "sampled"))
    rng = _random.Random(seed)
    failures = []
    for t in range(probes):
        r = random_even_element(base, rng)
        if rng.random() < 0.4 and base.q:
            r = r * SuperElement.theta(rng.randint(1, base.q),
                                       base.p, base.q)
        direct = lm.push(r)
        staged = lm.pull_jet(r)
        if not direct.close_to(staged, tol):
            failures.append({"probe": pretty_super(r), "trial": t})
    if failures:
        lm.verdict = Verdict("No", "sampled", witness=failures[0])
    return lm


# ---------------------------------------------------------------------------
# sections, the kernel of Psi, fairness


@dataclass
class GlobalSection:
    """An element regarded as the family of its jets over sampled points."""

    element: SuperElement
    points: list
    order: int

    def __post_init__(self):
        self.jets = {pt.coords: localize(self.element, pt, self.order)
                     for pt in self.points}

    def jet_at(self, pt) -> LocalElement:
        coords = pt.coords if isinstance(pt, RPoint) else tuple(float(c) for c in pt)
        return self.jets[coords]

    def to_json(self):
        recs = []
        for coords, jet in sorted(self.jets.items()):
            entry = {"point": list(coords), "jets": {}}
            for I, js in sorted(jet.coeffs.items()):
                name = "".join(f"t{i}" for i in I) or "1"
                entry["jets"][name] = {
                    ",".join(map(str, a)): float(v) for a, v in sorted(js.items())}
            recs.append(entry)
        return recs


def global_section(r: SuperElement, Q, points=None, box=(-2.0, 2.0),
                   grid_n: int = 20, order: int = DEFAULT_JET_ORDER) -> GlobalSection:
    if points is None:
        points = find_rpoints(Q, box=box, grid_n=grid_n)
    rep = Q.normal_form(r) if isinstance(Q, QuotientSuperRing) else r
    return GlobalSection(rep, list(points), order)


def psi_kernel_test(r: SuperElement, Q, box=(-2.0, 2.0), grid_n: int = 20,
                    order: int = DEFAULT_JET_ORDER, seed: int = 0,
                    tol: float = 1e-9, points=None) -> Verdict:
    """Does the section of r vanish: L_x(r) = 0 at every sampled point?

    Normal-forms through the quotient first, so rewriting alone can settle
    it exactly.  Jet verdicts are sampled; a disjoint-support bump factor
    upgrades the note since it certifies a vanishing germ.
    """
    rep = Q.normal_form(r) if isinstance(Q, QuotientSuperRing) else \
        r.map_coefficients(ex.simplify)
    if rep.is_zero_element():
        return Verdict("Zero", "exact", note="normal form vanishes")
    if points is None:
        points = find_rpoints(Q, box=box, grid_n=grid_n, seed=seed)
    if not points:
        return Verdict("Unknown", "sampled", note="no sampled real points in the box")
    flat_model = any(not ex.is_polynomial(ex.simplify(c))
                     for c in rep.coeffs.values())
    for x in points:
        jet = localize(rep, x, order)
        if jet.max_abs() > tol:
            worst = max(((I, a, v) for I, js in jet.coeffs.items()
                         for a, v in js.items()), key=lambda t: abs(float(t[2])))
            return Verdict("NonZero", "sampled",
                           witness={"point": list(x.coords),
                                    "index": list(worst[0]),
                                    "alpha": list(worst[1]),
                                    "value": float(worst[2])})
    note = f"zero jet at all {len(points)} sampled points (order {order})"
    certs = [germ_zero_certificate(rep, x) for x in points]
    if all(c is not None for c in certs):
        note += "; germ-zero certificates at every point"
    elif flat_model:
        note += "; jet model blind to flat directions"
    return Verdict("Zero", "sampled", note=note)


def fairfication(Q, probes, box=(-2.0, 2.0), grid_n: int = 20,
                 order: int = DEFAULT_JET_ORDER, seed: int = 0) -> dict:
    """Partition probes by the kernel test: the killed ones are what the
    fairness completion must quotient away."""
    ring = _ring_of(Q)
    points = find_rpoints(Q, box=box, grid_n=grid_n, seed=seed)
    kept, killed, unknown = [], [], []
    details = []
    for probe in probes:
        el = ring.parse(probe) if isinstance(probe, str) else probe
        v = psi_kernel_test(el, Q, box=box, grid_n=grid_n, order=order, seed=seed,
                            points=points)
        name = pretty_super(el)
        details.append({"probe": name, "verdict": v})
        if isinstance(Q, QuotientSuperRing):
            already = Q.is_zero_class(el)
        else:
            already = el.map_coefficients(ex.simplify).is_zero_element()
        if v.is_("Zero") and not already:
            killed.append(name)
        elif v.is_("Zero"):
            # already zero in the quotient: nothing to kill
            kept.append(name)
        elif v.is_("NonZero"):
            kept.append(name)
        else:
            unknown.append(name)
    return {"ring": str(Q), "kept": kept, "killed": killed,
            "unknown": unknown, "details": details}


# ---------------------------------------------------------------------------
# smooth Zariski predicates


def in_D(a: SuperElement, x: RPoint, tol: float = 1e-9) -> bool:
    """Is the point inside the principal open where a is invertible?"""
    try:
        return abs(x.ev(a)) > tol
    except ex.DomainError:
        return False


def Z_of(ideal: SuperIdeal, points, tol: float = 1e-9) -> list:
    """Points of the sample where every generator body vanishes."""
    out = []
    bodies = ideal.bodies()
    for x in points:
        try:
            if all(abs(ex.evaluate(b, x.coords)) <= tol for b in bodies):
                out.append(x)
        except ex.DomainError:
            continue
    return out

"""Finitely generated superideals and rewrite-based quotient superrings.

Quotients are presented by oriented rewrite rules.  A rule replaces one
leading term by minus the rest of its generator; orientation only accepts
generators whose leading term is a polynomial monomial times an odd
monomial, except that a single-term generator may keep literal smooth
factors.  Rewriting a term either strictly raises its minimal Grassmann
degree, kills it, or strictly lowers its body monomial in graded reverse
lexicographic order, so exhaustive rewriting terminates on this class.

The same module hosts the zero-set oracle used for smooth radicals: zero
sets are sampled on a grid, polished by least squares on a surrogate system
with the same zeros but detectable slopes, and then checked against the raw
generators.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expr as ex
from .grassmann import (
    Parity,
    SuperElement,
    merge_indices,
    parse_super,
    pretty_super,
)
from .rings import SplitSuperRing
from .verdict import Verdict


class UnorientableGenerator(ValueError):
    """Raised when some generators admit no oriented leading term."""

    def __init__(self, generators):
        self.generators = list(generators)
        names = ", ".join(pretty_super(g) for g in self.generators)
        super().__init__(f"no orientable leading term: {names}")


@dataclass(frozen=True)
class SuperIdeal:
    """Finitely generated superideal given by homogeneous generators."""

    ring: SplitSuperRing
    generators: tuple

    def __init__(self, ring: SplitSuperRing, generators):
        gens = []
        for g in generators:
            if isinstance(g, str):
                g = parse_super(g, ring.p, ring.q)
            if (g.p, g.q) != (ring.p, ring.q):
                raise ValueError("generator lives in a different ring")
            if g.is_zero_element():
                continue
            if g.parity() is Parity.MIXED:
                raise ValueError(f"generator {pretty_super(g)} is not homogeneous")
            gens.append(g)
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "generators", tuple(gens))

    def even_generators(self):
        return tuple(g for g in self.generators if g.parity() is Parity.EVEN)

    def odd_generators(self):
        return tuple(g for g in self.generators if g.parity() is Parity.ODD)

    def bodies(self):
        """Nonzero bodies of the generators: the even-part ideal downstairs."""
        out = []
        for g in self.generators:
            b = ex.simplify(g.body())
            if not (isinstance(b, ex.Const) and b.value == 0):
                out.append(b)
        return out

    def __str__(self):
        return "(" + ", ".join(pretty_super(g) for g in self.generators) + ")"


def ideal_product(I: SuperIdeal, H: SuperIdeal) -> SuperIdeal:
    if I.ring != H.ring:
        raise ValueError("ideals live in different rings")
    gens = [a * b for a in I.generators for b in H.generators]
    return SuperIdeal(I.ring, gens)


# ---------------------------------------------------------------------------
# orientation and rewriting


@dataclass(frozen=True)
class RewriteRule:
    """lhs_coeff * (vars * opaque * theta) -> rhs, oriented so that applying
    the rule raises the minimal Grassmann degree, kills the term, or lowers
    the body monomial."""

    coeff: Fraction
    vars: tuple
    opaque: tuple
    theta: tuple
    rhs: SuperElement

    def pretty(self) -> str:
        p = self.rhs.p
        lhs = ex.pretty(ex.render_term(p, self.coeff, self.vars, self.opaque))
        if self.theta:
            lhs += "*" + "".join(f"t{i}" for i in self.theta)
        return f"{lhs} -> {pretty_super(self.rhs)}"


def _degrevlex_key(vars_t, p: int):
    vec = [0] * p
    for i, n in vars_t:
        vec[i - 1] = n
    return (sum(vec), tuple(-v for v in reversed(vec)))


def _is_monomial(vars_t, opaque_t, literal_ok: bool) -> bool:
    if any(n < 0 for _, n in vars_t):
        return False
    if not literal_ok:
        return not opaque_t
    return all(neg == 0 for _, _, neg in opaque_t)


def _terms_of(g: SuperElement):
    """All terms of g as (theta index, coeff, vars, opaque)."""
    out = []
    for K, c in g.coeffs.items():
        for coeff, vars_t, opaque_t in ex.term_structure(c):
            out.append((K, coeff, vars_t, opaque_t))
    return out


def orient(ideal: SuperIdeal) -> "RewriteSystem":
    """Choose a rewrite rule for each generator; collect the hopeless ones."""
    rules = []
    bad = []
    p = ideal.ring.p
    for g in ideal.generators:
        terms = _terms_of(g)
        if len(terms) == 1:
            # single term: any literal smooth factors may stay on the left
            K, coeff, vars_t, opaque_t = terms[0]
            if not _is_monomial(vars_t, opaque_t, literal_ok=True):
                bad.append(g)
                continue
            rules.append(RewriteRule(coeff, vars_t, opaque_t, K,
                                     SuperElement.zero(g.p, g.q)))
            continue
        d = g.min_grassmann_degree()
        leads = [(K, coeff, vars_t, opaque_t) for K, coeff, vars_t, opaque_t in terms
                 if len(K) == d]
        leads = [t for t in leads if _is_monomial(t[2], t[3], literal_ok=False)]
        if not leads:
            bad.append(g)
            continue
        leads.sort(key=lambda t: (_degrevlex_key(t[2], p), t[0]), reverse=True)
        K, coeff, vars_t, opaque_t = leads[0]
        lead_el = SuperElement.monomial(
            K, ex.render_term(p, coeff, vars_t, opaque_t), g.p, g.q)
        rest = g - lead_el
        if rest.min_grassmann_degree() > d:
            rules.append(RewriteRule(coeff, vars_t, opaque_t, K, -rest))
            continue
        # pure body generators fall back to polynomial division order
        body_only = all(len(t[0]) == 0 for t in terms)
        if body_only and all(_is_monomial(t[2], t[3], literal_ok=False) for t in terms):
            lead_key = _degrevlex_key(vars_t, p)
            if all(_degrevlex_key(t[2], p) < lead_key
                   for t in terms if t[2] != vars_t):
                rules.append(RewriteRule(coeff, vars_t, opaque_t, K, -rest))
                continue
        bad.append(g)
    if bad:
        raise UnorientableGenerator(bad)
    return RewriteSystem(tuple(rules))


@dataclass(frozen=True)
class RewriteSystem:
    rules: tuple

    def reduce(self, a: SuperElement, max_passes: int = 100) -> SuperElement:
        current = a
        for _ in range(max_passes):
            nxt, changed = self._pass(current)
            if not changed:
                return nxt
            current = nxt
        raise RuntimeError("rewriting did not stabilize")

    def _pass(self, a: SuperElement):
        p, q = a.p, a.q
        changed = False
        out = SuperElement.zero(p, q)
        for K, c in a.coeffs.items():
            kept = []
            for coeff, vars_t, opaque_t in ex.term_structure(c):
                rule = self._match(vars_t, opaque_t, K)
                if rule is None:
                    kept.append((coeff, vars_t, opaque_t))
                else:
                    changed = True
                    out = out + self._apply(rule, coeff, vars_t, opaque_t, K, p, q)
            if kept:
                out = out + SuperElement.monomial(K, ex.render_terms(p, kept), p, q)
        return out, changed

    def _match(self, vars_t, opaque_t, K):
        vars_d = dict(vars_t)
        opq = {atom: (pos, neg) for atom, pos, neg in opaque_t}
        for rule in self.rules:
            if not set(rule.theta) <= set(K):
                continue
            if any(vars_d.get(i, 0) < n for i, n in rule.vars):
                continue
            if any(opq.get(atom, (0, 0))[0] < pos for atom, pos, _ in rule.opaque):
                continue
            return rule
        return None

    def _apply(self, rule: RewriteRule, coeff, vars_t, opaque_t, K, p, q):
        rest = tuple(i for i in K if i not in rule.theta)
        sign, merged = merge_indices(rule.theta, rest)
        assert merged == K
        cof_vars = dict(vars_t)
        for i, n in rule.vars:
            m = cof_vars[i] - n
            if m == 0:
                del cof_vars[i]
            else:
                cof_vars[i] = m
        cof_opq = {atom: [pos, neg] for atom, pos, neg in opaque_t}
        for atom, pos, _ in rule.opaque:
            cof_opq[atom][0] -= pos
        cof = ex.render_term(
            p, coeff * sign / rule.coeff,
            tuple(sorted(cof_vars.items())),
            tuple((a, pn[0], pn[1]) for a, pn in cof_opq.items()
                  if pn[0] or pn[1]))
        out = SuperElement.from_expr(cof, q) * rule.rhs
        if rest:
            out = out * SuperElement.monomial(rest, 1, p, q)
        return out


class QuotientSuperRing:
    """Split ring modulo an oriented superideal, with rewrite normal forms."""

    def __init__(self, ring: SplitSuperRing, ideal: SuperIdeal):
        if ideal.ring != ring:
            raise ValueError("ideal belongs to a different ring")
        self.ring = ring
        self.ideal = ideal
        self.rewrites = orient(ideal)
        for g in ideal.generators:
            if not self.normal_form(g).is_zero_element():
                raise RuntimeError(
                    f"generator {pretty_super(g)} does not reduce to zero")

    def normal_form(self, a: SuperElement) -> SuperElement:
        if (a.p, a.q) != (self.ring.p, self.ring.q):
            raise ValueError("element lives in a different ring")
        return self.rewrites.reduce(a)

    def parse(self, text: str) -> SuperElement:
        return self.normal_form(self.ring.parse(text))

    def is_zero_class(self, a: SuperElement) -> bool:
        return self.normal_form(a).is_zero_element()

    def __eq__(self, other):
        return (isinstance(other, QuotientSuperRing)
                and self.ring == other.ring and self.ideal == other.ideal)

    def __str__(self):
        return f"{self.ring}/{self.ideal}"


def ideal_membership(a: SuperElement, ideal: SuperIdeal) -> Verdict:
    """Membership through the rewrite normal form.  Faithful on the curated
    generator class; Unknown when no orientation exists."""
    try:
        rs = orient(ideal)
    except UnorientableGenerator as err:
        return Verdict("Unknown", "exact",
                       note=f"unorientable generators: {err}")
    nf = rs.reduce(a)
    if nf.is_zero_element():
        return Verdict("In", "exact")
    return Verdict("Out", "exact", witness=pretty_super(nf),
                   note="nonzero rewrite normal form (curated generator class)")


# ---------------------------------------------------------------------------
# zero sets


def sharpen(e: ex.SmoothExpr) -> ex.SmoothExpr:
    """Surrogate with the same zero set but numerically visible zeros.

    Replaces factors that vanish nowhere by 1, strips flat envelopes (the
    zeros of exp(-1/u^2) are the zeros of u, but the float underflows long
    before u reaches 0), and maps log(u) to u - 1.  Sums are left alone.
    """
    p = e.arity
    if isinstance(e, ex.Neg):
        return sharpen(e.a)
    if isinstance(e, ex.Mul):
        return ex.Mul(p, sharpen(e.a), sharpen(e.b))
    if isinstance(e, ex.Div):
        return ex.Div(p, sharpen(e.a), e.b)
    if isinstance(e, ex.Pow):
        if e.exponent >= 1:
            return sharpen(e.base)
        return ex.Const(p, Fraction(1))
    if isinstance(e, ex.Call):
        if e.func == "flat":
            return sharpen(e.args[0])
        if e.func == "exp":
            return ex.Const(p, Fraction(1))
        if e.func == "sqrt":
            return sharpen(e.args[0])
        if e.func == "log":
            return ex.Sub(p, e.args[0], ex.Const(p, Fraction(1)))
        return e
    return e


def _candidate_points(arity: int, box, grid: int, seed: int):
    lo_hi = ex.normalize_box(box, arity)
    if arity == 0:
        return [()]
    if grid ** arity <= 4096:
        axes = [np.linspace(lo, hi, grid) for lo, hi in lo_hi]
        return [tuple(float(v) for v in pt) for pt in itertools.product(*axes)]
    rng = random.Random(seed)
    return [tuple(rng.uniform(lo, hi) for lo, hi in lo_hi)
            for _ in range(4096)]


_ZERO_CACHE: dict = {}


def solve_zero_set(exprs, arity: int, box=(-2.0, 2.0), grid: int = 40,
                   seed: int = 0, tol_root: float = 1e-9,
                   raw_tol: float = 1e-9, dedup: float = 1e-6,
                   max_steps: int = 80):
    """Sampled common zero set of smooth expressions inside a box.

    Grid candidates are polished by damped least-squares steps on the
    sharpened system, deduplicated, and kept only where every raw generator
    evaluates below raw_tol.  Points come back lexicographically sorted.
    The radical oracle resolves the same ideal once per probe, so results
    are memoized on the printed system and every numeric knob.
    """
    key = (tuple(ex.pretty(ex.simplify(e)) for e in exprs), arity,
           tuple(map(tuple, ex.normalize_box(box, arity))), grid, seed,
           tol_root, raw_tol, dedup, max_steps)
    if key in _ZERO_CACHE:
        return list(_ZERO_CACHE[key])
    out = _solve_zero_set(exprs, arity, box, grid, seed, tol_root,
                          raw_tol, dedup, max_steps)
    if len(_ZERO_CACHE) >= 256:
        _ZERO_CACHE.pop(next(iter(_ZERO_CACHE)))
    _ZERO_CACHE[key] = tuple(out)
    return out


def _solve_zero_set(exprs, arity, box, grid, seed, tol_root,
                    raw_tol, dedup, max_steps):
    exprs = [ex.simplify(e) for e in exprs]
    if not exprs:
        return []
    sharp = [ex.simplify(sharpen(e)) for e in exprs]
    grads = [[ex.partial(s, i) for i in range(1, arity + 1)] for s in sharp]
    lo_hi = ex.normalize_box(box, arity)
    pad = 1e-9

    def residual(pt):
        return np.array([ex.evaluate(s, pt) for s in sharp], dtype=float)

    found = []
    for start in _candidate_points(arity, box, grid, seed):
        pt = np.array(start, dtype=float)
        try:
            r = residual(tuple(pt))
        except ex.DomainError:
            continue
        # keep stepping past the residual tolerance: at a root of
        # multiplicity m the residual dips below tol while the point is
        # still tol**(1/m) away, and only the linear tail of the
        # iteration pulls the coordinates themselves to dedup scale
        for _ in range(max_steps):
            try:
                J = np.array([[ex.evaluate(g, tuple(pt)) for g in row]
                              for row in grads], dtype=float)
                step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            except (ex.DomainError, np.linalg.LinAlgError):
                break
            if not np.all(np.isfinite(step)):
                break
            nxt = pt + step
            try:
                rn = residual(tuple(nxt))
            except ex.DomainError:
                # halve into the domain
                good = None
                for _ in range(20):
                    step = step / 2.0
                    try:
                        cand = pt + step
                        rn = residual(tuple(cand))
                        good = cand
                        break
                    except ex.DomainError:
                        continue
                if good is None:
                    break
                nxt = good
            if np.linalg.norm(rn) > np.linalg.norm(r):
                # damp
                damped = False
                for _ in range(12):
                    step = step / 2.0
                    cand = pt + step
                    try:
                        rc = residual(tuple(cand))
                    except ex.DomainError:
                        continue
                    if np.linalg.norm(rc) < np.linalg.norm(r):
                        nxt, rn, damped = cand, rc, True
                        break
                if not damped:
                    break
            pt, r = nxt, rn
            if np.linalg.norm(step) <= 1e-12 * (1.0 + np.linalg.norm(pt)):
                break
        if np.max(np.abs(r)) > tol_root:
            continue
        if any(v < lo - pad or v > hi + pad for v, (lo, hi) in zip(pt, lo_hi)):
            continue
        try:
            raw = [abs(ex.evaluate(e, tuple(pt))) for e in exprs]
        except ex.DomainError:
            continue
        if max(raw) > raw_tol:
            continue
        found.append(tuple(float(v) for v in pt))

    found.sort()
    out = []
    for pt in found:
        if not any(max(abs(a - b) for a, b in zip(pt, prev)) <= dedup if pt else prev == pt
                   for prev in out):
            out.append(pt)
    return out


# ---------------------------------------------------------------------------
# the smooth radical oracle


def radical_membership(a: SuperElement, ideal: SuperIdeal, box=(-2.0, 2.0),
                       samples: int = 40, seed: int = 0,
                       tol_abs: float = 1e-6) -> Verdict:
    """Does a lie in the smooth radical of the ideal?

    Odd and soul parts always do.  An even body does iff it vanishes on the
    zero set of the generator bodies; that zero set is sampled, so In/Out
    answers away from the structural cases carry the sampled tag.
    """
    body = ex.simplify(a.body())
    if isinstance(body, ex.Const) and body.value == 0:
        return Verdict("In", "exact",
                       note="odd generators and souls lie in every smooth radical")
    try:
        member = ideal_membership(a, ideal)
    except UnorientableGenerator:
        member = Verdict("Unknown", "exact")
    if member.is_("In"):
        return Verdict("In", "exact", note="already in the ideal")
    bodies = ideal.bodies()
    p = ideal.ring.p
    if not bodies:
        vz = ex.is_zero(body, box=box, samples=max(samples, 100), seed=seed,
                        tol_abs=1e-12)
        if vz.is_("Zero"):
            return Verdict("In", vz.provenance, note="zero set is the whole box")
        if vz.is_("NonZero"):
            return Verdict("Out", vz.provenance, witness=vz.witness)
        return Verdict("Unknown", "sampled", note="no admissible sample points")
    zeros = solve_zero_set(bodies, p, box=box, grid=samples, seed=seed)
    if not zeros:
        return Verdict("Unknown", "sampled",
                       note="zero set sampler found no points in the box")
    for z in zeros:
        try:
            v = ex.evaluate(body, z)
        except ex.DomainError:
            return Verdict("Unknown", "sampled",
                           note=f"body undefined at zero point {z}")
        if abs(v) > tol_abs:
            return Verdict("Out", "sampled", witness={"point": list(z), "value": v})
    return Verdict("In", "sampled",
                   note=f"body vanishes at all {len(zeros)} sampled zero points")


def superreduce_presentation(Q: QuotientSuperRing):
    """Bodies of the generators as an ideal of the purely even ring."""
    base = SplitSuperRing(Q.ring.p, 0)
    gens = [SuperElement.from_expr(b, 0) for b in Q.ideal.bodies()]
    return base, SuperIdeal(base, gens)


def _nilpotency_order(power_zero, max_power: int):
    for n in range(1, max_power + 1):
        if power_zero(n):
            return n
    return None


def is_cinfty_superreduced(obj, box=(-2.0, 2.0), samples: int = 40,
                           seed: int = 0) -> Verdict:
    """Is every smooth-nilpotent even as tame as the odd part?

    Checks coordinate classes: each must either stay out of the radical of
    zero or already lie in the ideal generated by the odd part.  Free split
    rings pass outright.
    """
    if isinstance(obj, SplitSuperRing):
        return Verdict("Yes", "exact", note="free split rings have no even smooth nilpotents")
    if not isinstance(obj, QuotientSuperRing):
        raise TypeError(f"expected a ring or quotient, got {type(obj).__name__}")
    from .rings import canonical_superideal

    ring = obj.ring
    J = canonical_superideal(obj)
    sampled = False
    for i in range(1, ring.p + 1):
        probe = ring.var(i)
        # exact nilpotency through normal forms
        order = _nilpotency_order(
            lambda n: obj.normal_form(probe ** n).is_zero_element(),
            max_power=2 * (ring.q // 2 + 1) + 2)
        if order is not None:
            nilpotent = True
            provenance = "exact"
        else:
            rad = radical_membership(probe, obj.ideal, box=box,
                                     samples=samples, seed=seed)
            nilpotent = rad.is_("In")
            provenance = rad.provenance
            sampled = sampled or rad.provenance == "sampled"
        if not nilpotent:
            continue
        in_j = ideal_membership(probe, J)
        if not in_j.is_("In"):
            return Verdict("No", provenance,
                           witness={"class": ex.pretty(ex.Var(ring.p, i)),
                                    "reason": "smooth nilpotent outside the odd-generated ideal"})
    return Verdict("Yes", "sampled" if sampled else "exact")


def is_split(obj, max_power: int = 12) -> Verdict:
    """Split / NotSplit / Unknown on the curated presentation class."""
    if isinstance(obj, SplitSuperRing):
        return Verdict("Split", "exact", witness={"section": "identity"})
    if not isinstance(obj, QuotientSuperRing):
        raise TypeError(f"expected a ring or quotient, got {type(obj).__name__}")
    ring = obj.ring
    gens = obj.ideal.generators
    if all(g.min_grassmann_degree() >= 1 for g in gens):
        section = {f"x{i}": f"x{i}" for i in range(1, ring.p + 1)}
        return Verdict("Split", "exact",
                       witness={"section": section,
                                "note": "ideal inside the odd-generated ideal"})
    if all(max(g.grassmann_degrees(), default=0) == 0 for g in gens):
        return Verdict("Split", "exact",
                       witness={"note": "pure body relations; odd part is free"})
    # mixed generators: compare nilpotency orders downstairs and in the even part
    try:
        base, body_ideal = superreduce_presentation(obj)
        body_q = QuotientSuperRing(base, body_ideal)
    except (UnorientableGenerator, RuntimeError):
        return Verdict("Unknown", "exact",
                       note="reduced presentation is not orientable")
    for i in range(1, ring.p + 1):
        probe_red = base.var(i)
        probe = ring.var(i)
        ord_red = _nilpotency_order(
            lambda n: body_q.normal_form(probe_red ** n).is_zero_element(), max_power)
        ord_even = _nilpotency_order(
            lambda n: obj.normal_form(probe ** n).is_zero_element(), max_power)
        if ord_red is not None and ord_red != ord_even:
            return Verdict(
                "NotSplit", "exact",
                witness={"class": f"x{i}",
                         "reduced_order": ord_red,
                         "even_order": ord_even},
                note="no section: nilpotency orders disagree")
    return Verdict("Unknown", "exact",
                   note="no obstruction found on coordinate classes")

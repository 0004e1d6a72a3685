"""Closed-form smooth expressions on R^p.

Expression trees over variables x1..xp, rational constants, field operations,
integer powers and the function set {exp, log, sin, cos, tan, sqrt, flat, bump}.
flat(u) denotes exp(-1/u^2) extended by 0 at u = 0; bump(u, a, b) is smooth and
positive exactly on the interval (a, b). Values are immutable; every operation
here is a pure function.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .verdict import Verdict

FUNCTIONS = ("exp", "log", "sin", "cos", "tan", "sqrt", "flat", "bump")


class DomainError(ValueError):
    """Evaluation left the domain of a subexpression."""

    def __init__(self, subexpr: "SmoothExpr", point, reason: str):
        self.subexpr = subexpr
        self.point = tuple(point)
        self.reason = reason
        super().__init__(f"{reason} in {pretty(subexpr)} at {self.point}")


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} (column {pos + 1})")


@dataclass(frozen=True)
class SmoothExpr:
    arity: int

    def __add__(self, other):
        return Add(self.arity, self, _coerce(other, self.arity))

    def __radd__(self, other):
        return Add(self.arity, _coerce(other, self.arity), self)

    def __sub__(self, other):
        return Sub(self.arity, self, _coerce(other, self.arity))

    def __rsub__(self, other):
        return Sub(self.arity, _coerce(other, self.arity), self)

    def __mul__(self, other):
        return Mul(self.arity, self, _coerce(other, self.arity))

    def __rmul__(self, other):
        return Mul(self.arity, _coerce(other, self.arity), self)

    def __truediv__(self, other):
        return Div(self.arity, self, _coerce(other, self.arity))

    def __rtruediv__(self, other):
        return Div(self.arity, _coerce(other, self.arity), self)

    def __neg__(self):
        return Neg(self.arity, self)

    def __pow__(self, n: int):
        return Pow(self.arity, self, int(n))

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Const(SmoothExpr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(SmoothExpr):
    index: int  # 1-based

    def __post_init__(self):
        if not 1 <= self.index <= self.arity:
            raise ValueError(f"variable index x{self.index} out of range 1..{self.arity}")


@dataclass(frozen=True)
class Add(SmoothExpr):
    a: SmoothExpr
    b: SmoothExpr


@dataclass(frozen=True)
class Sub(SmoothExpr):
    a: SmoothExpr
    b: SmoothExpr


@dataclass(frozen=True)
class Neg(SmoothExpr):
    a: SmoothExpr


@dataclass(frozen=True)
class Mul(SmoothExpr):
    a: SmoothExpr
    b: SmoothExpr


@dataclass(frozen=True)
class Div(SmoothExpr):
    a: SmoothExpr
    b: SmoothExpr


@dataclass(frozen=True)
class Pow(SmoothExpr):
    base: SmoothExpr
    exponent: int


@dataclass(frozen=True)
class Call(SmoothExpr):
    func: str
    args: tuple

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func}")
        if self.func == "bump":
            if len(self.args) != 3:
                raise ValueError("bump takes (u, a, b)")
            a, b = self.args[1], self.args[2]
            if not (isinstance(a, Const) and isinstance(b, Const)):
                raise ValueError("bump bounds must be constant")
            if not a.value < b.value:
                raise ValueError("bump needs a < b")
        elif len(self.args) != 1:
            raise ValueError(f"{self.func} takes one argument")


def const(value, arity: int) -> Const:
    return Const(arity, Fraction(value))


def var(index: int, arity: int) -> Var:
    return Var(arity, index)


def _coerce(value, arity: int) -> SmoothExpr:
    if isinstance(value, SmoothExpr):
        if value.arity != arity:
            raise ValueError(f"arity mismatch: {value.arity} vs {arity}")
        return value
    return Const(arity, Fraction(value))


# ---------------------------------------------------------------------------
# evaluation


def _dominant_factors(e: SmoothExpr):
    """Multiplicative atoms of e that can force a product to zero.

    Walks through Mul, Neg, positive Pow and the numerator of Div. A flat or
    bump factor that evaluates to exactly 0 annihilates the whole product even
    where a sibling factor is singular (flat decay beats any pole produced by
    differentiating it).
    """
    if isinstance(e, Mul):
        yield from _dominant_factors(e.a)
        yield from _dominant_factors(e.b)
    elif isinstance(e, Neg):
        yield from _dominant_factors(e.a)
    elif isinstance(e, Div):
        yield from _dominant_factors(e.a)
    elif isinstance(e, Pow) and e.exponent >= 1:
        yield from _dominant_factors(e.base)
    else:
        yield e


def _flat_kills(e: SmoothExpr, pt) -> bool:
    """True when every additive term of e carries a flat/bump factor that is
    exactly 0 at pt, so the whole expression is 0 there by flat dominance."""
    if isinstance(e, (Add, Sub)):
        return _flat_kills(e.a, pt) and _flat_kills(e.b, pt)
    if isinstance(e, Neg):
        return _flat_kills(e.a, pt)
    for f in _dominant_factors(e):
        if isinstance(f, Call) and f.func in ("flat", "bump"):
            try:
                if _eval(f, pt) == 0.0:
                    return True
            except (DomainError, OverflowError):
                continue
        elif isinstance(f, (Add, Sub, Neg)) and _flat_kills(f, pt):
            return True
    return False


def evaluate(e: SmoothExpr, pt) -> float:
    """IEEE double evaluation of e at pt. Raises DomainError off-domain."""
    pt = tuple(float(c) for c in pt)
    if len(pt) != e.arity:
        raise ValueError(f"point has {len(pt)} coordinates, expression arity is {e.arity}")
    return _eval(e, pt)


def _eval(e: SmoothExpr, pt) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        return pt[e.index - 1]
    if isinstance(e, Add):
        return _eval(e.a, pt) + _eval(e.b, pt)
    if isinstance(e, Sub):
        return _eval(e.a, pt) - _eval(e.b, pt)
    if isinstance(e, Neg):
        return -_eval(e.a, pt)
    if isinstance(e, Mul):
        if _flat_kills(e, pt):
            return 0.0
        return _eval(e.a, pt) * _eval(e.b, pt)
    if isinstance(e, Div):
        if _flat_kills(e.a, pt):
            return 0.0
        den = _eval(e.b, pt)
        if den == 0.0:
            raise DomainError(e, pt, "division by zero")
        return _eval(e.a, pt) / den
    if isinstance(e, Pow):
        base = _eval(e.base, pt)
        if e.exponent < 0 and base == 0.0:
            raise DomainError(e, pt, "zero base with negative exponent")
        try:
            return base ** e.exponent
        except OverflowError:
            raise DomainError(e, pt, "overflow") from None
    if isinstance(e, Call):
        return _eval_call(e, pt)
    raise TypeError(f"not a SmoothExpr node: {e!r}")


def _eval_call(e: Call, pt) -> float:
    if e.func == "flat":
        u = _eval(e.args[0], pt)
        if u == 0.0:
            return 0.0
        try:
            return math.exp(-1.0 / (u * u))
        except OverflowError:  # 1/u^2 overflowed for tiny u; limit is 0
            return 0.0
    if e.func == "bump":
        u = _eval(e.args[0], pt)
        a = float(e.args[1].value)
        b = float(e.args[2].value)
        w = (u - a) * (b - u)
        if w <= 0.0:
            return 0.0
        try:
            return math.exp(-1.0 / w)
        except OverflowError:
            return 0.0
    u = _eval(e.args[0], pt)
    if e.func == "exp":
        try:
            return math.exp(u)
        except OverflowError:
            raise DomainError(e, pt, "overflow in exp") from None
    if e.func == "log":
        if u <= 0.0:
            raise DomainError(e, pt, "log of non-positive value")
        return math.log(u)
    if e.func == "sin":
        return math.sin(u)
    if e.func == "cos":
        return math.cos(u)
    if e.func == "tan":
        c = math.cos(u)
        if c == 0.0:
            raise DomainError(e, pt, "tan at a pole")
        return math.tan(u)
    if e.func == "sqrt":
        if u < 0.0:
            raise DomainError(e, pt, "sqrt of negative value")
        return math.sqrt(u)
    raise TypeError(e.func)


# ---------------------------------------------------------------------------
# differentiation


def partial(e: SmoothExpr, i: int) -> SmoothExpr:
    """Symbolic partial derivative with respect to x_i, simplified."""
    if not 1 <= i <= e.arity:
        raise ValueError(f"index {i} out of range 1..{e.arity}")
    return simplify(_diff(e, i))


def partial_raw(e: SmoothExpr, i: int) -> SmoothExpr:
    """Derivative without renormalizing.

    Iterated derivatives of bump quotients square their denominators at
    every step; expanding those in canonical form grows doubly fast, while
    the raw tree only picks up a constant factor per order.  Use this for
    jet towers and evaluate the raw tree directly.
    """
    if not 1 <= i <= e.arity:
        raise ValueError(f"index {i} out of range 1..{e.arity}")
    return _diff(e, i)


def _diff(e: SmoothExpr, i: int) -> SmoothExpr:
    p = e.arity
    zero = Const(p, Fraction(0))
    if isinstance(e, Const):
        return zero
    if isinstance(e, Var):
        return Const(p, Fraction(1 if e.index == i else 0))
    if isinstance(e, Add):
        return Add(p, _diff(e.a, i), _diff(e.b, i))
    if isinstance(e, Sub):
        return Sub(p, _diff(e.a, i), _diff(e.b, i))
    if isinstance(e, Neg):
        return Neg(p, _diff(e.a, i))
    if isinstance(e, Mul):
        return Add(p, Mul(p, _diff(e.a, i), e.b), Mul(p, e.a, _diff(e.b, i)))
    if isinstance(e, Div):
        num = Sub(p, Mul(p, _diff(e.a, i), e.b), Mul(p, e.a, _diff(e.b, i)))
        return Div(p, num, Pow(p, e.b, 2))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return zero
        scaled = Mul(p, Const(p, Fraction(e.exponent)), Pow(p, e.base, e.exponent - 1))
        return Mul(p, scaled, _diff(e.base, i))
    if isinstance(e, Call):
        u = e.args[0]
        du = _diff(u, i)
        if e.func == "exp":
            outer = e
        elif e.func == "log":
            return Div(p, du, u)
        elif e.func == "sin":
            outer = Call(p, "cos", (u,))
        elif e.func == "cos":
            outer = Neg(p, Call(p, "sin", (u,)))
        elif e.func == "tan":
            outer = Add(p, Const(p, Fraction(1)), Pow(p, e, 2))
        elif e.func == "sqrt":
            return Div(p, du, Mul(p, Const(p, Fraction(2)), e))
        elif e.func == "flat":
            # d/du exp(-1/u^2) = (2/u^3) exp(-1/u^2); the flat factor absorbs
            # the pole at u = 0 (see _flat_kills).
            outer = Mul(p, Div(p, Const(p, Fraction(2)), Pow(p, u, 3)), e)
        elif e.func == "bump":
            a, b = e.args[1], e.args[2]
            w = Mul(p, Sub(p, u, a), Sub(p, b, u))
            pref = Div(p, Sub(p, Add(p, a, b), Mul(p, Const(p, Fraction(2)), u)), Pow(p, w, 2))
            outer = Mul(p, pref, e)
        else:
            raise TypeError(e.func)
        return Mul(p, outer, du)
    raise TypeError(f"not a SmoothExpr node: {e!r}")


def gradient(e: SmoothExpr) -> list:
    return [partial(e, i) for i in range(1, e.arity + 1)]


# ---------------------------------------------------------------------------
# substitution


def compose(e: SmoothExpr, args: list, arity: int) -> SmoothExpr:
    """Substitute args[i-1] (expressions of the given arity) for x_i in e."""
    if len(args) != e.arity:
        raise ValueError(f"expected {e.arity} substitutions, got {len(args)}")
    for a in args:
        if a.arity != arity:
            raise ValueError("substitution arity mismatch")
    return simplify(_subst(e, args, arity))


def _subst(e: SmoothExpr, args, arity: int) -> SmoothExpr:
    if isinstance(e, Const):
        return Const(arity, e.value)
    if isinstance(e, Var):
        return args[e.index - 1]
    if isinstance(e, Add):
        return Add(arity, _subst(e.a, args, arity), _subst(e.b, args, arity))
    if isinstance(e, Sub):
        return Sub(arity, _subst(e.a, args, arity), _subst(e.b, args, arity))
    if isinstance(e, Neg):
        return Neg(arity, _subst(e.a, args, arity))
    if isinstance(e, Mul):
        return Mul(arity, _subst(e.a, args, arity), _subst(e.b, args, arity))
    if isinstance(e, Div):
        return Div(arity, _subst(e.a, args, arity), _subst(e.b, args, arity))
    if isinstance(e, Pow):
        return Pow(arity, _subst(e.base, args, arity), e.exponent)
    if isinstance(e, Call):
        return Call(arity, e.func, tuple(_subst(a, args, arity) for a in e.args))
    raise TypeError(f"not a SmoothExpr node: {e!r}")


# ---------------------------------------------------------------------------
# totality and polynomial structure


def is_total(e: SmoothExpr) -> bool:
    """True when e is defined on all of R^p (so dropping it cannot shrink a domain)."""
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, (Add, Sub, Mul)):
        return is_total(e.a) and is_total(e.b)
    if isinstance(e, Neg):
        return is_total(e.a)
    if isinstance(e, Div):
        return is_total(e.a) and isinstance(e.b, Const) and e.b.value != 0
    if isinstance(e, Pow):
        return e.exponent >= 0 and is_total(e.base)
    if isinstance(e, Call):
        if e.func in ("log", "sqrt", "tan"):
            return False
        return all(is_total(a) for a in e.args)
    return False


def is_polynomial(e: SmoothExpr) -> bool:
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, (Add, Sub, Mul)):
        return is_polynomial(e.a) and is_polynomial(e.b)
    if isinstance(e, Neg):
        return is_polynomial(e.a)
    if isinstance(e, Pow):
        return e.exponent >= 0 and is_polynomial(e.base)
    if isinstance(e, Div):
        return isinstance(e.b, Const) and e.b.value != 0 and is_polynomial(e.a)
    return False


def poly_degree(e: SmoothExpr) -> int:
    """Total degree of a polynomial expression (0 for constants)."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return 1
    if isinstance(e, (Add, Sub)):
        return max(poly_degree(e.a), poly_degree(e.b))
    if isinstance(e, Neg):
        return poly_degree(e.a)
    if isinstance(e, Mul):
        return poly_degree(e.a) + poly_degree(e.b)
    if isinstance(e, Div):
        return poly_degree(e.a)
    if isinstance(e, Pow):
        return poly_degree(e.base) * e.exponent
    raise ValueError(f"not polynomial: {pretty(e)}")


# ---------------------------------------------------------------------------
# canonical simplification

# Canonical form is a fully distributed sum of terms.  A term is a rational
# coefficient times variable powers times opaque factors (calls and sums that
# sit under a division bar), and terms with equal factor parts combine.
# Products over sums always expand; that makes structural equality of
# simplified trees a congruence for +, *, and substitution, which the graded
# layers rely on.  Opaque factors never cancel across a division bar
# (sin(x1)/sin(x1) keeps its domain restriction), while plain variable and
# constant powers do merge.

_KIND_RANK = {Const: 0, Var: 1, Pow: 2, Call: 3, Mul: 4, Div: 5, Neg: 6, Add: 7, Sub: 7}


def _key(e: SmoothExpr):
    return (_KIND_RANK.get(type(e), 9), pretty(e))


# A term key is (vars, opaque) with vars a sorted tuple of (index, exponent)
# and opaque a sorted tuple of (atom, numerator_exp, denominator_exp).
# A polynomial is a dict mapping term keys to Fraction coefficients.

_UNIT_KEY = ((), ())


def _term_total(key) -> bool:
    vars_t, opaque_t = key
    if any(n < 0 for _, n in vars_t):
        return False
    return all(neg == 0 and is_total(atom) for atom, _, neg in opaque_t)


def _poly_scale(poly: dict, c: Fraction) -> dict:
    if c == 1:
        return poly
    return {k: v * c for k, v in poly.items()}


def _poly_add_into(acc: dict, poly: dict, sign: int = 1):
    for k, v in poly.items():
        s = acc.get(k, Fraction(0)) + sign * v
        if s == 0 and _term_total(k):
            acc.pop(k, None)
        else:
            acc[k] = s


def _merge_keys(k1, k2):
    vars_: dict = dict(k1[0])
    for idx, n in k2[0]:
        m = vars_.get(idx, 0) + n
        if m == 0:
            vars_.pop(idx, None)
        else:
            vars_[idx] = m
    opaque: dict = {atom: (pos, neg) for atom, pos, neg in k1[1]}
    for atom, pos, neg in k2[1]:
        p0, n0 = opaque.get(atom, (0, 0))
        opaque[atom] = (p0 + pos, n0 + neg)
    return (
        tuple(sorted(vars_.items())),
        tuple(sorted(((a, pn[0], pn[1]) for a, pn in opaque.items()),
                     key=lambda t: _key(t[0]))),
    )


def _poly_mul(p1: dict, p2: dict) -> dict:
    out: dict = {}
    for k1, c1 in p1.items():
        for k2, c2 in p2.items():
            k = _merge_keys(k1, k2)
            c = c1 * c2
            s = out.get(k, Fraction(0)) + c
            if s == 0 and _term_total(k):
                out.pop(k, None)
            else:
                out[k] = s
    return out


def _poly_pow(poly: dict, n: int) -> dict:
    out = {_UNIT_KEY: Fraction(1)}
    for _ in range(n):
        out = _poly_mul(out, poly)
    return out


def _atom_key(atom: SmoothExpr, n: int):
    """Single-factor polynomial for an opaque atom raised to the power n."""
    if n > 0:
        return ((), ((atom, n, 0),))
    return ((), ((atom, 0, -n),))


def _poly_of(node: SmoothExpr) -> dict:
    """Distributed form of a node whose children are already simplified."""
    if isinstance(node, Add):
        acc: dict = {}
        _poly_add_into(acc, _poly_of(node.a))
        _poly_add_into(acc, _poly_of(node.b))
        return acc
    if isinstance(node, Sub):
        acc = {}
        _poly_add_into(acc, _poly_of(node.a))
        _poly_add_into(acc, _poly_of(node.b), -1)
        return acc
    if isinstance(node, Neg):
        return _poly_scale(_poly_of(node.a), Fraction(-1))
    return _poly_factor(node, 1)


def _poly_factor(node: SmoothExpr, n: int) -> dict:
    if isinstance(node, Mul):
        return _poly_mul(_poly_factor(node.a, n), _poly_factor(node.b, n))
    if isinstance(node, Div):
        return _poly_mul(_poly_factor(node.a, n), _poly_factor(node.b, -n))
    if isinstance(node, Neg):
        return _poly_scale(_poly_factor(node.a, n), Fraction((-1) ** abs(n)))
    if isinstance(node, Pow) and node.exponent != 0:
        return _poly_factor(node.base, node.exponent * n)
    if isinstance(node, (Add, Sub)):
        if n >= 1:
            return _poly_pow(_poly_of(node), n)
        return {_atom_key(node, n): Fraction(1)}
    if isinstance(node, Const):
        if node.value == 0 and n < 0:
            return {_atom_key(node, n): Fraction(1)}  # keep 1/0 visible
        return {_UNIT_KEY: node.value ** n}
    if isinstance(node, Var):
        return {(((node.index, n),), ()): Fraction(1)}
    return {_atom_key(node, n): Fraction(1)}


def _render_term(arity: int, coeff: Fraction, key) -> SmoothExpr:
    vars_t, opaque_t = key
    num: list = []
    den: list = []
    for idx, n in vars_t:
        f = Var(arity, idx)
        (num if n > 0 else den).append(f if abs(n) == 1 else Pow(arity, f, abs(n)))
    for atom, pos, neg in opaque_t:
        if pos:
            num.append(atom if pos == 1 else Pow(arity, atom, pos))
        if neg:
            if neg > 1 and isinstance(atom, (Add, Sub)):
                # powers of sums expand, even under a division bar, so the
                # rendered tree is a fixed point of simplify
                den.append(_rebuild_poly(arity, _poly_pow(_poly_of(atom), neg)))
            else:
                den.append(atom if neg == 1 else Pow(arity, atom, neg))

    if not num and not den:
        return Const(arity, coeff)

    sign = -1 if coeff < 0 else 1
    coeff = abs(coeff)

    def chain(factors):
        out = None
        for f in factors:
            out = f if out is None else Mul(arity, out, f)
        return out

    if coeff != 1 or not num:
        num.insert(0, Const(arity, coeff))
    num_expr = chain(num)
    den_expr = chain(den)
    out = num_expr if den_expr is None else Div(arity, num_expr, den_expr)
    return Neg(arity, out) if sign < 0 else out


def _term_sort_key(arity: int, key):
    if key == _UNIT_KEY:
        return (-1, "")
    return _key(_render_term(arity, Fraction(1), key))


def _rebuild_poly(arity: int, poly: dict) -> SmoothExpr:
    order = sorted(poly, key=lambda k: _term_sort_key(arity, k))
    built = None
    for k in order:
        coeff = poly[k]
        if coeff == 0 and _term_total(k):
            continue
        piece = _render_term(arity, coeff, k)
        if built is None:
            built = piece
        elif isinstance(piece, Neg):
            built = Sub(arity, built, piece.a)
        elif isinstance(piece, Const) and piece.value < 0:
            built = Sub(arity, built, Const(arity, -piece.value))
        else:
            built = Add(arity, built, piece)
    return built if built is not None else Const(arity, Fraction(0))


def term_decomposition(e: SmoothExpr):
    """Terms of the canonical form of e as (coefficient, product expr or None),
    with None standing for the empty product."""
    s = _simp(e)
    poly = _poly_of(s)
    out = []
    for k in sorted(poly, key=lambda key: _term_sort_key(e.arity, key)):
        base = None if k == _UNIT_KEY else _render_term(e.arity, Fraction(1), k)
        out.append((poly[k], base))
    return out


def term_structure(e: SmoothExpr):
    """Structured terms of the canonical form: (coeff, vars, opaque) with
    vars a sorted tuple of (index, exponent) and opaque a sorted tuple of
    (atom, numerator_exp, denominator_exp)."""
    s = _simp(e)
    poly = _poly_of(s)
    keys = sorted(poly, key=lambda key: _term_sort_key(e.arity, key))
    return [(poly[k], k[0], k[1]) for k in keys]


def render_term(arity: int, coeff: Fraction, vars_t, opaque_t) -> SmoothExpr:
    """Inverse of a single term_structure entry."""
    return _render_term(arity, coeff, (tuple(vars_t), tuple(opaque_t)))


def render_terms(arity: int, terms) -> SmoothExpr:
    """Rebuild an expression from term_structure entries."""
    poly: dict = {}
    for coeff, vars_t, opaque_t in terms:
        k = (tuple(vars_t), tuple(opaque_t))
        poly[k] = poly.get(k, Fraction(0)) + coeff
    return _rebuild_poly(arity, poly)


def simplify(e: SmoothExpr) -> SmoothExpr:
    """Canonical form: folded constants, distributed products, sorted and
    combined terms, merged powers. Semantics-preserving; never drops a domain
    restriction (0*log(x) stays put, exp(log(x)) is not rewritten)."""
    return _simp(e)


def _simp(e: SmoothExpr) -> SmoothExpr:
    p = e.arity
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, (Add, Sub, Mul, Div)):
        node = type(e)(p, _simp(e.a), _simp(e.b))
        return _rebuild_poly(p, _poly_of(node))
    if isinstance(e, Neg):
        return _rebuild_poly(p, _poly_of(Neg(p, _simp(e.a))))
    if isinstance(e, Pow):
        base = _simp(e.base)
        n = e.exponent
        if isinstance(base, Const):
            if n >= 0 or base.value != 0:
                return Const(p, base.value ** n)
            return Pow(p, base, n)
        if n == 1:
            return base
        if n == 0:
            return Const(p, Fraction(1)) if is_total(base) else Pow(p, base, n)
        return _rebuild_poly(p, _poly_factor(base, n))
    if isinstance(e, Call):
        args = tuple(_simp(a) for a in e.args)
        if len(args) == 1 and isinstance(args[0], Const):
            v = args[0].value
            folds = {
                ("exp", 0): 1, ("log", 1): 0, ("sin", 0): 0,
                ("cos", 0): 1, ("tan", 0): 0, ("sqrt", 0): 0,
                ("sqrt", 1): 1, ("flat", 0): 0,
            }
            if (e.func, v) in folds:
                return Const(p, Fraction(folds[(e.func, v)]))
        return Call(p, e.func, args)
    raise TypeError(f"not a SmoothExpr node: {e!r}")


# ---------------------------------------------------------------------------
# pretty printing


def pretty(e: SmoothExpr) -> str:
    return _pp(e, 0)


_PREC_ADD, _PREC_MUL, _PREC_POW = 1, 2, 3


def _pp(e: SmoothExpr, prec: int) -> str:
    if isinstance(e, Const):
        v = e.value
        if v.denominator == 1:
            s = str(v.numerator)
        elif v.denominator <= 10**6:
            s = f"{v.numerator}/{v.denominator}"
        else:
            s = repr(float(v))
        if v < 0:
            return f"({s})" if prec > _PREC_ADD else s
        return s
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Add):
        s = f"{_pp(e.a, _PREC_ADD)} + {_pp(e.b, _PREC_ADD + 1)}"
        return f"({s})" if prec > _PREC_ADD else s
    if isinstance(e, Sub):
        s = f"{_pp(e.a, _PREC_ADD)} - {_pp(e.b, _PREC_ADD + 1)}"
        return f"({s})" if prec > _PREC_ADD else s
    if isinstance(e, Neg):
        s = f"-{_pp(e.a, _PREC_MUL)}"
        return f"({s})" if prec > _PREC_ADD else s
    if isinstance(e, Mul):
        s = f"{_pp(e.a, _PREC_MUL)}*{_pp(e.b, _PREC_MUL)}"
        return f"({s})" if prec > _PREC_MUL else s
    if isinstance(e, Div):
        s = f"{_pp(e.a, _PREC_MUL)}/{_pp(e.b, _PREC_MUL + 1)}"
        return f"({s})" if prec > _PREC_MUL else s
    if isinstance(e, Pow):
        base = _pp(e.base, _PREC_POW + 1)
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_pp(a, 0) for a in e.args)})"
    raise TypeError(f"not a SmoothExpr node: {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_SPEC = [
    ("number", r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"),
    ("ident", r"[A-Za-z][A-Za-z0-9]*"),
    ("op", r"[-+*/^(),]"),
    ("ws", r"\s+"),
]

_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


def tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over: expr := ['-'] term (('+'|'-') term)*;
    term := factor (('*'|'/') factor)*; factor := atom ['^' integer];
    atom := number | x<i> | func(expr {, expr}) | (expr).

    atom_hook lets the graded-element parser claim extra identifiers."""

    def __init__(self, text: str, arity: int, atom_hook=None):
        self.text = text
        self.arity = arity
        self.tokens = tokenize(text)
        self.i = 0
        self.atom_hook = atom_hook

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)
        return self.next()

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self):
        kind, val, _ = self.peek()
        negate = kind == "op" and val == "-"
        if negate:
            self.next()
        e = self.term()
        if negate:
            e = self.make_neg(e)
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                e = self.make_add(e, rhs) if val == "+" else self.make_sub(e, rhs)
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.factor()
                e = self.make_mul(e, rhs) if val == "*" else self.make_div(e, rhs)
            else:
                return e

    def factor(self):
        e = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            e = self.make_pow(e, self.integer())
        return e

    def integer(self) -> int:
        sign = 1
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.next()
            sign = -1
        kind, val, pos = self.peek()
        if kind != "number" or not re.fullmatch(r"\d+", val):
            raise ParseError("expected integer exponent", pos)
        self.next()
        return sign * int(val)

    def atom(self):
        kind, val, pos = self.next()
        if kind == "number":
            return self.make_const(Fraction(Decimal(val)))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k, v, _ = self.peek()
                    if k == "op" and v == ",":
                        self.next()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                return self.make_call(val, args, pos)
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.arity:
                    raise ParseError(f"variable x{idx} out of range for arity {self.arity}", pos)
                return self.make_var(idx)
            if self.atom_hook is not None:
                hooked = self.atom_hook(val, pos)
                if hooked is not None:
                    return hooked
            raise ParseError(f"unknown identifier {val!r}", pos)
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", pos)

    # scalar builders; the graded parser overrides these
    def make_const(self, v: Fraction):
        return Const(self.arity, v)

    def make_var(self, idx: int):
        return Var(self.arity, idx)

    def make_neg(self, a):
        if isinstance(a, Const):
            return Const(self.arity, -a.value)
        return Neg(self.arity, a)

    def make_add(self, a, b):
        return Add(self.arity, a, b)

    def make_sub(self, a, b):
        return Sub(self.arity, a, b)

    def make_mul(self, a, b):
        return Mul(self.arity, a, b)

    def make_div(self, a, b):
        return Div(self.arity, a, b)

    def make_pow(self, a, n: int):
        return Pow(self.arity, a, n)

    def make_call(self, func: str, args: list, pos: int):
        if func == "bump" and len(args) == 2:
            # bump(a, b) shorthand: the bump of x1 on (a, b)
            if self.arity < 1:
                raise ParseError("bump(a, b) shorthand needs at least one variable", pos)
            args = [Var(self.arity, 1)] + args
        if func == "bump" and len(args) == 3:
            args = [args[0]] + [_simp(a) if isinstance(a, SmoothExpr) else a for a in args[1:]]
        try:
            return Call(self.arity, func, tuple(args))
        except ValueError as exc:
            raise ParseError(str(exc), pos) from None


def parse(text: str, arity: int) -> SmoothExpr:
    """Parse a smooth expression with variables x1..x<arity>."""
    return _Parser(text, arity).parse()


# ---------------------------------------------------------------------------
# sampling and the zero oracle


def sample_points(box, arity: int, n: int, seed: int) -> list:
    """n deterministic uniform points in box (list of (lo, hi) per coordinate,
    or a single (lo, hi) broadcast to every coordinate)."""
    box = normalize_box(box, arity)
    rng = random.Random(seed)
    return [tuple(rng.uniform(lo, hi) for lo, hi in box) for _ in range(n)]


def normalize_box(box, arity: int) -> list:
    if arity == 0:
        return []
    if isinstance(box, (tuple, list)) and len(box) == 2 and all(
        isinstance(c, (int, float)) for c in box
    ):
        box = [tuple(box)] * arity
    box = [tuple(b) for b in box]
    if len(box) != arity:
        raise ValueError(f"box has {len(box)} intervals, arity is {arity}")
    for lo, hi in box:
        if not lo < hi:
            raise ValueError("empty box")
    return box


def is_zero(e: SmoothExpr, box=(-2.0, 2.0), samples: int = 100, seed: int = 0,
            tol_abs: float = 1e-12) -> Verdict:
    """Three-valued zero test: exact via simplification, else sampled."""
    s = simplify(e)
    if isinstance(s, Const):
        if s.value == 0:
            return Verdict("Zero", "exact")
        return Verdict("NonZero", "exact", witness=float(s.value))
    if e.arity == 0:
        try:
            v = evaluate(s, ())
        except DomainError:
            return Verdict("Unknown", "sampled", note="constant evaluation off-domain")
        if abs(v) > tol_abs:
            return Verdict("NonZero", "sampled", witness=())
        return Verdict("Zero", "sampled")
    checked = 0
    for pt in sample_points(box, e.arity, samples, seed):
        try:
            v = evaluate(s, pt)
        except DomainError:
            continue
        checked += 1
        if abs(v) > tol_abs:
            return Verdict("NonZero", "sampled", witness=pt)
    if checked == 0:
        return Verdict("Unknown", "sampled", note="no sample point was in the domain")
    return Verdict("Zero", "sampled", note=f"{checked} samples below {tol_abs}")


def equal_sampled(a: SmoothExpr, b: SmoothExpr, box=(-2.0, 2.0), samples: int = 100,
                  seed: int = 0, tol_rel: float = 1e-9) -> bool:
    """Relative comparison of two expressions on random points of the box."""
    if a.arity != b.arity:
        return False
    checked = 0
    for pt in sample_points(box, a.arity, samples, seed):
        try:
            va, vb = evaluate(a, pt), evaluate(b, pt)
        except DomainError:
            continue
        checked += 1
        if abs(va - vb) > tol_rel * max(1.0, abs(va), abs(vb)):
            return False
    return checked > 0


def symbolic_equal(a: SmoothExpr, b: SmoothExpr) -> bool:
    return simplify(a) == simplify(b)

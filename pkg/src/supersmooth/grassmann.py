"""Supercommutative Grassmann algebra over smooth coefficients.

Elements of the free graded ring on p even and q odd generators: finitely
supported maps from sorted index subsets of {1..q} to smooth expressions in
x1..xp. Coefficients are simplified after every ring operation, so symbolic
equality of elements is equality of the underlying maps.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import expr as ex
from .expr import Const, ParseError, SmoothExpr, simplify

MultiIndex = tuple  # strictly increasing tuple of ints in 1..q


class Parity(enum.Enum):
    EVEN = "Even"
    ODD = "Odd"
    MIXED = "Mixed"


def merge_indices(I: MultiIndex, J: MultiIndex):
    """Sign and union of two sorted index tuples, or (0, None) on overlap.

    The sign is (-1)^inv with inv = #{(i, j) in I x J : i > j}."""
    if set(I) & set(J):
        return 0, None
    inv = sum(1 for i in I for j in J if i > j)
    merged = tuple(sorted(I + J))
    return (-1) ** inv, merged


def sort_index_word(word) -> tuple:
    """(sign, sorted tuple) for an arbitrary sequence of generator indices;
    sign 0 when an index repeats."""
    word = list(word)
    if len(set(word)) != len(word):
        return 0, None
    sign = 1
    # insertion sort, counting swaps
    for i in range(1, len(word)):
        j = i
        while j > 0 and word[j - 1] > word[j]:
            word[j - 1], word[j] = word[j], word[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(word)


@dataclass(frozen=True)
class SuperElement:
    p: int
    q: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for I, coeff in self.coeffs.items():
            I = tuple(I)
            if any(not 1 <= i <= self.q for i in I):
                raise ValueError(f"odd generator index out of range in {I}")
            if list(I) != sorted(set(I)):
                raise ValueError(f"multi-index {I} not strictly increasing")
            if not isinstance(coeff, SmoothExpr):
                coeff = Const(self.p, Fraction(coeff))
            if coeff.arity != self.p:
                raise ValueError("coefficient arity mismatch")
            coeff = simplify(coeff)
            if coeff == Const(self.p, Fraction(0)):
                continue
            clean[I] = coeff
        object.__setattr__(self, "coeffs", clean)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(p: int, q: int) -> "SuperElement":
        return SuperElement(p, q, {})

    @staticmethod
    def scalar(value, p: int, q: int) -> "SuperElement":
        return SuperElement(p, q, {(): Const(p, Fraction(value))})

    @staticmethod
    def from_expr(e: SmoothExpr, q: int) -> "SuperElement":
        return SuperElement(e.arity, q, {(): e})

    @staticmethod
    def theta(i: int, p: int, q: int) -> "SuperElement":
        return SuperElement(p, q, {(i,): Const(p, Fraction(1))})

    @staticmethod
    def monomial(I, coeff, p: int, q: int) -> "SuperElement":
        return SuperElement(p, q, {tuple(I): coeff})

    # -- basic structure ----------------------------------------------------

    def coefficient(self, I) -> SmoothExpr:
        return self.coeffs.get(tuple(I), Const(self.p, Fraction(0)))

    def support(self):
        return sorted(self.coeffs, key=lambda I: (len(I), I))

    def is_zero_element(self) -> bool:
        return not self.coeffs

    def body(self) -> SmoothExpr:
        return self.coefficient(())

    def soul(self) -> "SuperElement":
        return SuperElement(self.p, self.q,
                            {I: c for I, c in self.coeffs.items() if I != ()})

    def body_soul(self):
        return self.body(), self.soul()

    def superreduce(self) -> SmoothExpr:
        """Image in the superreduced ring: the body coefficient."""
        return self.body()

    def parity(self) -> Parity:
        lengths = {len(I) % 2 for I in self.coeffs}
        if lengths <= {0}:
            return Parity.EVEN
        if lengths == {1}:
            return Parity.ODD
        return Parity.MIXED

    def grassmann_degrees(self):
        return sorted({len(I) for I in self.coeffs})

    def min_grassmann_degree(self) -> int:
        """Smallest theta-monomial length in the support; q+1 for the zero element."""
        if not self.coeffs:
            return self.q + 1
        return min(len(I) for I in self.coeffs)

    # -- ring operations ----------------------------------------------------

    def _check(self, other) -> "SuperElement":
        if isinstance(other, SuperElement):
            if (other.p, other.q) != (self.p, self.q):
                raise ValueError(
                    f"arity mismatch: ({other.p}|{other.q}) vs ({self.p}|{self.q})")
            return other
        if isinstance(other, SmoothExpr):
            return SuperElement.from_expr(other, self.q)
        return SuperElement.scalar(other, self.p, self.q)

    def __add__(self, other):
        other = self._check(other)
        out = dict(self.coeffs)
        for I, c in other.coeffs.items():
            out[I] = out[I] + c if I in out else c
        return SuperElement(self.p, self.q, out)

    __radd__ = __add__

    def __neg__(self):
        return SuperElement(self.p, self.q,
                            {I: ex.Neg(self.p, c) for I, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) + (-self)

    def __mul__(self, other):
        other = self._check(other)
        out: dict = {}
        for I, a in self.coeffs.items():
            for J, b in other.coeffs.items():
                sign, K = merge_indices(I, J)
                if sign == 0:
                    continue
                term = ex.Mul(self.p, a, b)
                if sign < 0:
                    term = ex.Neg(self.p, term)
                out[K] = out[K] + term if K in out else term
        return SuperElement(self.p, self.q, out)

    def __rmul__(self, other):
        return self._check(other) * self

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of graded elements are not defined")
        out = SuperElement.scalar(1, self.p, self.q)
        for _ in range(n):
            out = out * self
        return out

    def scale(self, c) -> "SuperElement":
        if not isinstance(c, SmoothExpr):
            c = Const(self.p, Fraction(c))
        return SuperElement(self.p, self.q,
                            {I: ex.Mul(self.p, c, co) for I, co in self.coeffs.items()})

    def map_coefficients(self, f) -> "SuperElement":
        return SuperElement(self.p, self.q, {I: f(c) for I, c in self.coeffs.items()})

    # -- display -------------------------------------------------------------

    def __str__(self):
        return pretty_super(self)

    def reindex(self, var_offset: int, theta_offset: int, p: int, q: int) -> "SuperElement":
        """Embed into a larger ring, shifting x indices and theta indices."""
        subs = [ex.Var(p, i + var_offset) for i in range(1, self.p + 1)]
        out = {}
        for I, c in self.coeffs.items():
            J = tuple(i + theta_offset for i in I)
            out[J] = ex._subst(c, subs, p)
        return SuperElement(p, q, out)


def mul(a: SuperElement, b: SuperElement) -> SuperElement:
    return a * b


def parity(a: SuperElement) -> Parity:
    return a.parity()


def body_soul(a: SuperElement):
    return a.body_soul()


def superreduce(a: SuperElement) -> SmoothExpr:
    return a.superreduce()


# ---------------------------------------------------------------------------
# display syntax: coefficients in the expression grammar, theta monomials as
# t1t2... so that e.g. "sin(x1)*t1t2" round-trips.


def _pp_coeff_factor(c: SmoothExpr) -> str:
    """Render a coefficient for use as a factor in front of a theta monomial."""
    s = ex.pretty(c)
    if isinstance(c, (ex.Add, ex.Sub)):
        return f"({s})"
    return s


def _split_coeff_sign(c: SmoothExpr):
    if isinstance(c, ex.Neg):
        return -1, c.a
    if isinstance(c, Const) and c.value < 0:
        return -1, Const(c.arity, -c.value)
    return 1, c


def pretty_super(a: SuperElement) -> str:
    if not a.coeffs:
        return "0"
    parts = []
    one = Const(a.p, Fraction(1))
    for I in a.support():
        coeff = a.coeffs[I]
        sign, mag = _split_coeff_sign(coeff)
        mono = "".join(f"t{i}" for i in I)
        if not I:
            text = ex.pretty(mag)
        elif mag == one:
            text = mono
        else:
            text = f"{_pp_coeff_factor(mag)}*{mono}"
        if not parts:
            parts.append(f"-{text}" if sign < 0 else text)
        else:
            parts.append(f"- {text}" if sign < 0 else f"+ {text}")
    return " ".join(parts)


_THETA_RE = re.compile(r"^(?:t[1-9][0-9]*)+$")


class _SuperParser(ex._Parser):
    """Expression parser over graded elements; theta words are extra atoms."""

    def __init__(self, text: str, p: int, q: int):
        self.p = p
        self.q = q
        super().__init__(text, p, atom_hook=self._theta_atom)

    def _theta_atom(self, name: str, pos: int):
        if not _THETA_RE.match(name):
            return None
        word = [int(s) for s in name.split("t")[1:]]
        for i in word:
            if i > self.q:
                raise ParseError(f"odd generator t{i} out of range for q={self.q}", pos)
        sign, I = sort_index_word(word)
        if sign == 0:
            return SuperElement.zero(self.p, self.q)
        mono = SuperElement.monomial(I, Const(self.p, Fraction(sign)), self.p, self.q)
        return mono

    def _lift(self, v):
        if isinstance(v, SuperElement):
            return v
        return SuperElement.from_expr(v, self.q)

    def make_neg(self, a):
        if isinstance(a, SuperElement):
            return -a
        return super().make_neg(a)

    def make_add(self, a, b):
        if isinstance(a, SuperElement) or isinstance(b, SuperElement):
            return self._lift(a) + self._lift(b)
        return super().make_add(a, b)

    def make_sub(self, a, b):
        if isinstance(a, SuperElement) or isinstance(b, SuperElement):
            return self._lift(a) - self._lift(b)
        return super().make_sub(a, b)

    def make_mul(self, a, b):
        if isinstance(a, SuperElement) or isinstance(b, SuperElement):
            return self._lift(a) * self._lift(b)
        return super().make_mul(a, b)

    def make_div(self, a, b):
        if isinstance(b, SuperElement):
            if b.soul().coeffs:
                raise ParseError("cannot divide by an element with odd support", 0)
            b = b.body()
        if isinstance(a, SuperElement):
            return a.map_coefficients(lambda c: ex.Div(self.p, c, b))
        return super().make_div(a, b)

    def make_pow(self, a, n: int):
        if isinstance(a, SuperElement):
            if n < 0:
                raise ParseError("negative powers of graded elements are not defined", 0)
            return a ** n
        return super().make_pow(a, n)


def parse_super(text: str, p: int, q: int) -> SuperElement:
    """Parse the display syntax (e.g. "x1 + sin(x1)*t1t2") into an element."""
    value = _SuperParser(text, p, q).parse()
    if isinstance(value, SuperElement):
        return value
    return SuperElement.from_expr(value, q)

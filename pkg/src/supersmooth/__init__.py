"""Computer-algebra kernel for supercommutative algebra over smooth coefficients."""

from .verdict import Verdict
from .expr import (
    SmoothExpr, Const, Var, Add, Sub, Neg, Mul, Div, Pow, Call,
    DomainError, ParseError, parse, pretty, evaluate, partial, partial_raw,
    simplify, compose, is_zero,
)
from .grassmann import SuperElement, merge_indices, parse_super, pretty_super
from .rings import (
    SplitSuperRing, WeilSuperAlgebra, apply_smooth, apply_smooth_first_order,
    associated_graded, canonical_superideal, check_composition_axiom,
    check_projection_axiom, random_even_element, random_smooth, weil_apply,
)
from .quotients import (
    QuotientSuperRing, SuperIdeal, UnorientableGenerator, ideal_membership,
    ideal_product, is_cinfty_superreduced, is_split, radical_membership,
    solve_zero_set, superreduce_presentation,
)
from .spectrum import (
    GlobalSection, LocalElement, LocalizedMorphism, RPoint, Z_of,
    fairfication, find_rpoints, germ_zero_certificate, global_section,
    in_D, localize, localize_morphism, psi_kernel_test, taylor_jet,
)
from .morphisms import (
    IllFormedMorphism, Morphism, SpecMap, adjunction_roundtrip, coproduct,
    identity, mu, mu_inverse, mu_roundtrip, spec_functor,
    superreduce_element, superreduce_object, superreduction_functor,
    trivial_extension, universal_property_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Internal language of a presheaf topos: terms, typing, forcing and counterfactuals."""
from .terms import Term, Var, free_vars, to_sexpr
from .parser import parse_formula, parse_type
from .semantics import Topos, TypedTerm
from .forcing import ForcingContext, forces, forces_by_clauses
from .lst import desugar_lst
from .lewis import NeighborhoodSystem, intervention_system, lewis_counterfactual

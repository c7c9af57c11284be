"""Types and terms of the internal language.

Types are topos objects: named presheaves, ``1``, ``Omega``, products, power
objects ``P A`` and exponentials ``B^C``. Formulas are terms of type Omega.
"""
from dataclasses import dataclass, fields
from typing import Dict, Iterator, Tuple, Union


@dataclass(frozen=True)
class BaseType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class UnitType:
    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class OmegaType:
    def __str__(self) -> str:
        return "Omega"


@dataclass(frozen=True)
class ProductType:
    items: Tuple["Type", ...]

    def __str__(self) -> str:
        return "(* " + " ".join(str(t) for t in self.items) + ")"


@dataclass(frozen=True)
class PowerType:
    elem: "Type"

    def __str__(self) -> str:
        return f"(P {self.elem})"


@dataclass(frozen=True)
class ExpType:
    """``cod ^ dom``: maps from dom to cod."""

    cod: "Type"
    dom: "Type"

    def __str__(self) -> str:
        return f"(^ {self.cod} {self.dom})"


Type = Union[BaseType, UnitType, OmegaType, ProductType, PowerType, ExpType]

UNIT = UnitType()
OMEGA = OmegaType()


def normalize(t: Type) -> Type:
    """Power objects are exponentials into Omega."""
    if isinstance(t, PowerType):
        return ExpType(OMEGA, normalize(t.elem))
    if isinstance(t, ProductType):
        return ProductType(tuple(normalize(i) for i in t.items))
    if isinstance(t, ExpType):
        return ExpType(normalize(t.cod), normalize(t.dom))
    return t


def same_type(a: Type, b: Type) -> bool:
    return normalize(a) == normalize(b)


class Term:
    """Marker base for AST nodes."""

    def children(self) -> Iterator["Term"]:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Term):
                yield value
            elif isinstance(value, tuple):
                yield from (v for v in value if isinstance(v, Term))


@dataclass(frozen=True)
class Var(Term):
    name: str
    type: Type


@dataclass(frozen=True)
class Star(Term):
    pass


@dataclass(frozen=True)
class Pair(Term):
    items: Tuple[Term, ...]


@dataclass(frozen=True)
class Proj(Term):
    """1-based projection."""

    index: int
    term: Term


@dataclass(frozen=True)
class Eq(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class ApplyArrow(Term):
    arrow: str
    arg: Term


@dataclass(frozen=True)
class EvalExp(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Member(Term):
    elem: Term
    set: Term


@dataclass(frozen=True)
class Lambda(Term):
    var: Var
    body: Term


@dataclass(frozen=True)
class Comprehension(Term):
    var: Var
    body: Term


@dataclass(frozen=True)
class Top(Term):
    pass


@dataclass(frozen=True)
class Bottom(Term):
    pass


@dataclass(frozen=True)
class And(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Implies(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Iff(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Term):
    body: Term


@dataclass(frozen=True)
class Forall(Term):
    var: Var
    body: Term


@dataclass(frozen=True)
class Exists(Term):
    var: Var
    body: Term


@dataclass(frozen=True)
class CausalAtom(Term):
    """``Y = y`` in model M under do(X=x), as a predicate on M's exogenous tuples."""

    model: str
    variable: str
    value: str
    do: Tuple[Tuple[str, str], ...]
    arg: Term


@dataclass(frozen=True)
class Counterfactual(Term):
    """Lewis's would-counterfactual; only meaningful in a neighborhood system."""

    antecedent: Term
    consequent: Term


BINDERS = (Lambda, Comprehension, Forall, Exists)
CONNECTIVES = (Top, Bottom, And, Or, Implies, Iff, Not, Forall, Exists)


def free_vars(term: Term) -> Dict[str, Type]:
    if isinstance(term, Var):
        return {term.name: term.type}
    if isinstance(term, BINDERS):
        inner = free_vars(term.body)
        inner.pop(term.var.name, None)
        return inner
    found: Dict[str, Type] = {}
    for child in term.children():
        found.update(free_vars(child))
    return found


_HEADS = {
    And: "and", Or: "or", Implies: "implies", Iff: "iff", Eq: "=",
    EvalExp: "eval", Member: "in", Counterfactual: "boxright",
}
_BINDER_HEADS = {Lambda: "lambda", Comprehension: "set", Forall: "forall", Exists: "exists"}


def to_sexpr(term: Term) -> str:
    """Print a term in the prefix syntax accepted by the parser."""
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Star):
        return "*"
    if isinstance(term, Top):
        return "true"
    if isinstance(term, Bottom):
        return "false"
    if isinstance(term, Pair):
        return "(pair " + " ".join(to_sexpr(t) for t in term.items) + ")"
    if isinstance(term, Proj):
        return f"(proj {term.index} {to_sexpr(term.term)})"
    if isinstance(term, ApplyArrow):
        return f"(apply {term.arrow} {to_sexpr(term.arg)})"
    if isinstance(term, Not):
        return f"(not {to_sexpr(term.body)})"
    if isinstance(term, CausalAtom):
        do = "".join(f" ({v} {x})" for v, x in term.do)
        return f"(outcome {term.model} {term.variable} {term.value} (do{do}) {to_sexpr(term.arg)})"
    for cls, head in _BINDER_HEADS.items():
        if isinstance(term, cls):
            return f"({head} ({term.var.name} {term.var.type}) {to_sexpr(term.body)})"
    for cls, head in _HEADS.items():
        if isinstance(term, cls):
            left, right = [to_sexpr(c) for c in term.children()]
            return f"({head} {left} {right})"
    raise TypeError(f"cannot print {term!r}")


_NODES = {cls.__name__: cls for cls in (
    Var, Star, Pair, Proj, Eq, ApplyArrow, EvalExp, Member, Lambda, Comprehension, Top,
    Bottom, And, Or, Implies, Iff, Not, Forall, Exists, CausalAtom, Counterfactual,
)}


def term_to_json(term: Term) -> dict:
    out: dict = {"node": type(term).__name__}
    for f in fields(term):
        value = getattr(term, f.name)
        if isinstance(value, Term):
            out[f.name] = term_to_json(value)
        elif f.name == "type":
            out[f.name] = str(value)
        elif isinstance(value, tuple):
            out[f.name] = [term_to_json(v) if isinstance(v, Term) else list(v) for v in value]
        else:
            out[f.name] = value
    return out


def term_from_json(data: dict) -> Term:
    from src.logic.parser import parse_type

    cls = _NODES.get(data.get("node", ""))
    if cls is None:
        raise ValueError(f"unknown term node {data.get('node')!r}")
    kwargs = {}
    for f in fields(cls):
        value = data[f.name]
        if f.name == "type":
            kwargs[f.name] = parse_type(value)
        elif isinstance(value, dict):
            kwargs[f.name] = term_from_json(value)
        elif isinstance(value, list):
            kwargs[f.name] = tuple(term_from_json(v) if isinstance(v, dict) else tuple(v)
                                   for v in value)
        else:
            kwargs[f.name] = value
    return cls(**kwargs)

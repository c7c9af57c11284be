"""Typing and interpretation of terms in a presheaf topos.

A term with free variables ``x1..xn`` denotes a natural transformation from
the product of their types to the term's type. It is computed stage by stage:
``value(term, c, env)`` is the element at stage ``c`` for an environment
holding one element of each free variable's type at ``c``. Formulas take
sieve values, so truth at ``c`` means the maximal sieve.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from src.encoding import decode_tuple, encode_set, encode_tuple
from src.errors import MultipleFreeVars, TypeMismatch, UnknownObject
from src.fincat import FinCategory
from src.finset import FinFunction
from src.logic import terms as t
from src.presheaf import (
    FamilyCodec,
    Presheaf,
    PresheafMorphism,
    SubPresheaf,
    classify,
    omega,
    presheaf_product,
    psh_exponential,
    sieve_pullback,
    terminal_presheaf,
)
from src.tcm import Intervention, TcmObject, potential_outcome

logger = logging.getLogger(__name__)

Env = Mapping[str, str]


@dataclass(frozen=True)
class TypedTerm:
    """A term with its type, its free variables and its typed subterms."""

    term: t.Term
    type: t.Type
    free: Tuple[Tuple[str, t.Type], ...]
    children: Tuple["TypedTerm", ...] = ()

    @property
    def free_map(self) -> Dict[str, t.Type]:
        return dict(self.free)

    @property
    def is_formula(self) -> bool:
        return isinstance(self.type, t.OmegaType)


@dataclass(frozen=True)
class Interpretation:
    context: Tuple[str, ...]
    morphism: PresheafMorphism


class Topos:
    """The presheaf topos over ``base`` with named types, arrows and causal models."""

    def __init__(self, base: FinCategory, limit: Optional[int] = None):
        self.base = base
        self.limit = limit
        self.classifier = omega(base)
        self.types: Dict[str, Presheaf] = {}
        self.arrows: Dict[str, Tuple[PresheafMorphism, t.Type, t.Type]] = {}
        self.models: Dict[str, TcmObject] = {}
        self._carriers: Dict[t.Type, Presheaf] = {}
        self._codecs: Dict[t.Type, FamilyCodec] = {}
        self._memo: Dict[tuple, str] = {}

    # -- registration -------------------------------------------------------

    def add_type(self, name: str, presheaf: Presheaf) -> t.BaseType:
        if presheaf.base.objects != self.base.objects:
            raise UnknownObject(f"{presheaf.name} lives on another base category")
        self.types[name] = presheaf
        return t.BaseType(name)

    def add_arrow(self, name: str, morphism: PresheafMorphism, dom: t.Type, cod: t.Type) -> None:
        if not morphism.source.same_as(self.carrier(dom)):
            raise TypeMismatch(f"arrow {name} does not start at {dom}")
        if not morphism.target.same_as(self.carrier(cod)):
            raise TypeMismatch(f"arrow {name} does not land in {cod}")
        self.arrows[name] = (morphism, dom, cod)

    def add_predicate(self, name: str, sub: SubPresheaf, dom: t.Type) -> None:
        """Register the characteristic map of a subobject as an Omega-valued arrow."""
        self.add_arrow(name, classify(sub, self.classifier), dom, t.OMEGA)

    def add_model(self, name: str, model: TcmObject) -> t.BaseType:
        """Exogenous tuples of ``model`` as a constant presheaf named ``<name>.U``."""
        U = model.u
        constant = Presheaf(self.base, {c: U for c in self.base.objects},
                            {a: FinFunction.identity(U) for a in self.base.arrows},
                            name=f"{name}.U")
        self.models[name] = model
        return self.add_type(f"{name}.U", constant)

    # -- carriers -------------------------------------------------------------

    def carrier(self, ty: t.Type) -> Presheaf:
        key = t.normalize(ty)
        if key in self._carriers:
            return self._carriers[key]
        if isinstance(key, t.BaseType):
            if key.name not in self.types:
                raise TypeMismatch(f"unknown type {key.name}", expected="a registered type",
                                   actual=key.name)
            found = self.types[key.name]
        elif isinstance(key, t.UnitType):
            found = terminal_presheaf(self.base)
        elif isinstance(key, t.OmegaType):
            found = self.classifier.presheaf
        elif isinstance(key, t.ProductType):
            found, _ = presheaf_product([self.carrier(i) for i in key.items], name=str(key))
        else:
            found = psh_exponential(self.carrier(key.dom), self.carrier(key.cod),
                                    limit=self.limit, codec=self.codec(key)).presheaf
        self._carriers[key] = found
        return found

    def codec(self, ty: t.Type) -> FamilyCodec:
        key = t.normalize(ty)
        if not isinstance(key, t.ExpType):
            raise TypeMismatch("not an exponential type", expected="(^ B C)", actual=str(ty))
        if key not in self._codecs:
            self._codecs[key] = FamilyCodec(self.carrier(key.dom), self.carrier(key.cod),
                                            name=str(ty))
        return self._codecs[key]

    def top(self, c: str) -> str:
        return self.classifier.top(c)

    def restrict_value(self, ty: t.Type, f: str, value: str) -> str:
        key = t.normalize(ty)
        if isinstance(key, t.UnitType):
            return value
        if isinstance(key, t.OmegaType):
            c = self.base.tgt(f)
            return sieve_pullback(self.base, f, self.classifier.sieve(c, value)).atom
        if isinstance(key, t.ProductType):
            parts = decode_tuple(value)
            return encode_tuple([self.restrict_value(i, f, p) for i, p in zip(key.items, parts)])
        if isinstance(key, t.ExpType):
            return self.codec(key).restrict(f, value)
        return self.carrier(key).act(f, value)

    def restrict_env(self, types: Mapping[str, t.Type], f: str, env: Env) -> Dict[str, str]:
        return {x: self.restrict_value(types[x], f, env[x]) for x in types}

    # -- typing -----------------------------------------------------------------

    def typecheck(self, term: t.Term) -> TypedTerm:
        return _Checker(self).check(term)

    # -- evaluation ---------------------------------------------------------------

    def value(self, tt: TypedTerm, c: str, env: Env) -> str:
        env_key = tuple((x, env[x]) for x, _ in tt.free)
        key = (tt, c, env_key)
        if key not in self._memo:
            self._memo[key] = self._value(tt, c, {x: v for x, v in env_key})
        return self._memo[key]

    def holds(self, tt: TypedTerm, c: str, env: Env) -> bool:
        return self.value(tt, c, env) == self.top(c)

    def _value(self, tt: TypedTerm, c: str, env: Env) -> str:
        term, C, om = tt.term, self.base, self.classifier
        kids = tt.children
        if isinstance(term, t.Var):
            return env[term.name]
        if isinstance(term, t.Star):
            return "*"
        if isinstance(term, t.Top):
            return om.top(c)
        if isinstance(term, t.Bottom):
            return om.bottom(c)
        if isinstance(term, t.Pair):
            return encode_tuple([self.value(k, c, env) for k in kids])
        if isinstance(term, t.Proj):
            return decode_tuple(self.value(kids[0], c, env))[term.index - 1]
        if isinstance(term, t.Eq):
            left, right = (self.value(k, c, env) for k in kids)
            ty = kids[0].type
            return encode_set(f for f in C.arrows_into(c)
                              if self.restrict_value(ty, f, left) == self.restrict_value(ty, f, right))
        if isinstance(term, t.ApplyArrow):
            morphism = self.arrows[term.arrow][0]
            return morphism(c, self.value(kids[0], c, env))
        if isinstance(term, t.EvalExp):
            fn, arg = (self.value(k, c, env) for k in kids)
            return self.codec(kids[0].type).apply(c, fn, arg)
        if isinstance(term, t.Member):
            elem, subset = (self.value(k, c, env) for k in kids)
            return self.codec(kids[1].type).apply(c, subset, elem)
        if isinstance(term, (t.Lambda, t.Comprehension)):
            return self._family(tt, c, env)
        if isinstance(term, (t.And, t.Or, t.Implies, t.Iff)):
            s, u = (self.value(k, c, env) for k in kids)
            if isinstance(term, t.And):
                return om.meet(c, s, u)
            if isinstance(term, t.Or):
                return om.join(c, s, u)
            if isinstance(term, t.Implies):
                return om.implies(c, s, u)
            return om.meet(c, om.implies(c, s, u), om.implies(c, u, s))
        if isinstance(term, t.Not):
            return om.negate(c, self.value(kids[0], c, env))
        if isinstance(term, t.Forall):
            return self._forall(tt, c, env)
        if isinstance(term, t.Exists):
            return self._exists(tt, c, env)
        if isinstance(term, t.CausalAtom):
            u = self.value(kids[0], c, env)
            got = potential_outcome(self.models[term.model], term.variable,
                                    Intervention(term.do), u)
            return om.top(c) if got == term.value else om.bottom(c)
        raise TypeMismatch(f"cannot evaluate {type(term).__name__}", subterm=t.to_sexpr(term))

    def _extended(self, tt: TypedTerm, f: str, env: Env, var: t.Var, x: str) -> Dict[str, str]:
        body = tt.children[0]
        outer = {n: ty for n, ty in body.free if n != var.name}
        moved = self.restrict_env(outer, f, env)
        moved[var.name] = x
        return moved

    def _family(self, tt: TypedTerm, c: str, env: Env) -> str:
        var = tt.term.var
        body = tt.children[0]
        codec = self.codec(tt.type)
        table = {}
        for d, f, x in codec.keys(c):
            table[(d, f, x)] = self.value(body, d, self._extended(tt, f, env, var, x))
        return codec.encode(c, table)

    def _forall(self, tt: TypedTerm, c: str, env: Env) -> str:
        C = self.base
        var = tt.term.var
        body = tt.children[0]
        domain = self.carrier(var.type)
        good = {}
        for h in C.arrows_into(c):
            e = C.src(h)
            good[h] = all(self.holds(body, e, self._extended(tt, h, env, var, x))
                          for x in domain.at(e))
        return encode_set(f for f in C.arrows_into(c)
                          if all(good[C.compose(f, g)] for g in C.arrows_into(C.src(f))))

    def _exists(self, tt: TypedTerm, c: str, env: Env) -> str:
        C = self.base
        var = tt.term.var
        body = tt.children[0]
        domain = self.carrier(var.type)
        return encode_set(
            f for f in C.arrows_into(c)
            if any(self.holds(body, C.src(f), self._extended(tt, f, env, var, x))
                   for x in domain.at(C.src(f)))
        )

    # -- morphisms and subobjects ---------------------------------------------------

    def context(self, names: Tuple[str, ...], types: Mapping[str, t.Type]) -> Presheaf:
        if not names:
            return terminal_presheaf(self.base)
        if len(names) == 1:
            return self.carrier(types[names[0]])
        P, _ = presheaf_product([self.carrier(types[n]) for n in names], name="context")
        return P

    def context_env(self, names: Tuple[str, ...], element: str) -> Dict[str, str]:
        if not names:
            return {}
        if len(names) == 1:
            return {names[0]: element}
        return dict(zip(names, decode_tuple(element)))

    def interpret(self, tt: TypedTerm) -> Interpretation:
        """The natural transformation from the free-variable context to the term's type."""
        types = tt.free_map
        names = tuple(sorted(types))
        source = self.context(names, types)
        target = self.carrier(tt.type)
        components = {
            c: FinFunction(source.at(c), target.at(c),
                           {g: self.value(tt, c, self.context_env(names, g)) for g in source.at(c)})
            for c in self.base.objects
        }
        return Interpretation(names, PresheafMorphism(source, target, components))

    def comprehension(self, formula: t.Term, var: Optional[t.Var] = None) -> SubPresheaf:
        """``{x | phi}`` as a subobject of the type of ``x``."""
        tt = formula if isinstance(formula, TypedTerm) else self.typecheck(formula)
        if not tt.is_formula:
            raise TypeMismatch("comprehension needs a formula", subterm=t.to_sexpr(tt.term),
                               expected="Omega", actual=str(tt.type))
        free = tt.free_map
        if var is None:
            if len(free) != 1:
                raise MultipleFreeVars(f"comprehension needs exactly one free variable, got {sorted(free)}")
            name, ty = next(iter(free.items()))
            var = t.Var(name, ty)
        elif set(free) - {var.name}:
            raise MultipleFreeVars(f"free variables {sorted(set(free) - {var.name})} besides {var.name}")
        A = self.carrier(var.type)
        members = {c: frozenset(a for a in A.at(c) if self.holds(tt, c, {var.name: a}))
                   for c in self.base.objects}
        return SubPresheaf(A, members)


class _Checker:
    def __init__(self, topos: Topos):
        self.topos = topos

    def fail(self, message: str, term: t.Term, expected=None, actual=None) -> TypeMismatch:
        return TypeMismatch(message, subterm=t.to_sexpr(term), expected=expected, actual=actual)

    def known(self, ty: t.Type, term: t.Term) -> None:
        key = t.normalize(ty)
        if isinstance(key, t.BaseType) and key.name not in self.topos.types:
            raise self.fail(f"unknown type {key.name}", term, "a registered type", key.name)
        for inner in getattr(key, "items", ()):
            self.known(inner, term)
        if isinstance(key, t.ExpType):
            self.known(key.cod, term)
            self.known(key.dom, term)

    def formula(self, tt: TypedTerm) -> TypedTerm:
        if not tt.is_formula:
            raise self.fail("expected a formula", tt.term, "Omega", str(tt.type))
        return tt

    def node(self, term: t.Term, ty: t.Type, *kids: TypedTerm,
             bound: Optional[str] = None) -> TypedTerm:
        free: Dict[str, t.Type] = {}
        for kid in kids:
            for name, kty in kid.free:
                if name == bound:
                    continue
                if name in free and not t.same_type(free[name], kty):
                    raise self.fail(f"variable {name} used at two types", term, free[name], kty)
                free[name] = kty
        return TypedTerm(term, ty, tuple(sorted(free.items(), key=lambda kv: kv[0])), kids)

    def check(self, term: t.Term) -> TypedTerm:
        if isinstance(term, t.Var):
            self.known(term.type, term)
            return TypedTerm(term, term.type, ((term.name, term.type),))
        if isinstance(term, t.Star):
            return self.node(term, t.UNIT)
        if isinstance(term, (t.Top, t.Bottom)):
            return self.node(term, t.OMEGA)
        if isinstance(term, t.Pair):
            kids = [self.check(i) for i in term.items]
            return self.node(term, t.ProductType(tuple(k.type for k in kids)), *kids)
        if isinstance(term, t.Proj):
            inner = self.check(term.term)
            if not isinstance(inner.type, t.ProductType):
                raise self.fail("projection from a non-product", term, "a product", str(inner.type))
            if not 1 <= term.index <= len(inner.type.items):
                raise self.fail(f"projection index {term.index} out of range", term,
                                f"1..{len(inner.type.items)}", term.index)
            return self.node(term, inner.type.items[term.index - 1], inner)
        if isinstance(term, t.Eq):
            left, right = self.check(term.left), self.check(term.right)
            if not t.same_type(left.type, right.type):
                raise self.fail("equality between different types", term, str(left.type), str(right.type))
            return self.node(term, t.OMEGA, left, right)
        if isinstance(term, t.ApplyArrow):
            if term.arrow not in self.topos.arrows:
                raise self.fail(f"unknown arrow {term.arrow}", term)
            _, dom, cod = self.topos.arrows[term.arrow]
            arg = self.check(term.arg)
            if not t.same_type(arg.type, dom):
                raise self.fail(f"argument of {term.arrow} has the wrong type", term, str(dom), str(arg.type))
            return self.node(term, cod, arg)
        if isinstance(term, t.EvalExp):
            fn, arg = self.check(term.fn), self.check(term.arg)
            fty = t.normalize(fn.type)
            if not isinstance(fty, t.ExpType):
                raise self.fail("evaluating a non-exponential", term, "(^ B C)", str(fn.type))
            if not t.same_type(arg.type, fty.dom):
                raise self.fail("argument has the wrong type", term, str(fty.dom), str(arg.type))
            return self.node(term, fty.cod, fn, arg)
        if isinstance(term, t.Member):
            elem, subset = self.check(term.elem), self.check(term.set)
            sty = t.normalize(subset.type)
            if not (isinstance(sty, t.ExpType) and isinstance(sty.cod, t.OmegaType)):
                raise self.fail("membership in a non-power type", term, "(P A)", str(subset.type))
            if not t.same_type(elem.type, sty.dom):
                raise self.fail("element and power type disagree", term,
                                str(t.PowerType(elem.type)), str(subset.type))
            return self.node(term, t.OMEGA, elem, subset)
        if isinstance(term, (t.Lambda, t.Comprehension, t.Forall, t.Exists)):
            self.known(term.var.type, term)
            body = self.check(term.body)
            if isinstance(term, t.Lambda):
                ty = t.ExpType(body.type, term.var.type)
            elif isinstance(term, t.Comprehension):
                self.formula(body)
                ty = t.PowerType(term.var.type)
            else:
                self.formula(body)
                ty = t.OMEGA
            for name, kty in body.free:
                if name == term.var.name and not t.same_type(kty, term.var.type):
                    raise self.fail(f"bound variable {name} used at another type", term,
                                    str(term.var.type), str(kty))
            return self.node(term, ty, body, bound=term.var.name)
        if isinstance(term, (t.And, t.Or, t.Implies, t.Iff)):
            left = self.formula(self.check(term.left))
            right = self.formula(self.check(term.right))
            return self.node(term, t.OMEGA, left, right)
        if isinstance(term, t.Not):
            return self.node(term, t.OMEGA, self.formula(self.check(term.body)))
        if isinstance(term, t.CausalAtom):
            return self.causal(term)
        if isinstance(term, t.Counterfactual):
            raise self.fail("counterfactuals are evaluated in a neighborhood system, not a topos", term)
        raise self.fail(f"unknown term {type(term).__name__}", term)

    def causal(self, term: t.CausalAtom) -> TypedTerm:
        if term.model not in self.topos.models:
            raise self.fail(f"unknown causal model {term.model}", term)
        M = self.topos.models[term.model]
        model = M.model
        if model is None or term.variable not in model.endogenous_names:
            raise self.fail(f"{term.variable} is not an endogenous variable of {term.model}", term)
        if term.value not in model.domains[term.variable]:
            raise self.fail(f"{term.value} is not a value of {term.variable}", term)
        arg = self.check(term.arg)
        expected = t.BaseType(f"{term.model}.U")
        if not t.same_type(arg.type, expected):
            raise self.fail("causal atom applied to the wrong type", term, str(expected), str(arg.type))
        return self.node(term, t.OMEGA, arg)

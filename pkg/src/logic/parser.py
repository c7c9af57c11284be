"""Prefix (S-expression) syntax for types and formulas.

Grammar of terms, with ``x`` a variable and ``A`` a type::

    *  true  false  x
    (pair t1 t2 ...)  (proj i t)  (= s t)  (apply f t)  (eval th s)  (in s t)
    (lambda (x A) t)  (set (x A) phi)
    (and p q ...)  (or p q ...)  (implies p q)  (iff p q)  (not p)
    (forall (x A) phi)  (exists (x A) phi)
    (outcome M Y y (do (X x) ...) u)
    (boxright p q)

Types: ``1``, ``Omega``, a declared name, ``(* A B ...)``, ``(P A)`` and
``(^ B C)`` for maps from C to B.
"""
from functools import reduce
from typing import List, Mapping, Optional, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, UnexpectedInput

from src.errors import ParseError
from src.logic import terms as t

SEXPR_GRAMMAR = r"""
    ?start: sexpr
    ?sexpr: list | SYMBOL -> symbol
    list: "(" sexpr* ")"
    SYMBOL: /[^\s();]+/
    COMMENT: /;[^\n]*/
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

SExpr = Union[str, List["SExpr"]]


class SExprTransformer(Transformer):
    """Turns the parse tree into nested lists of symbols."""

    @v_args(inline=True)
    def symbol(self, token):
        return str(token)

    def list(self, items):
        return list(items)


_parser = Lark(SEXPR_GRAMMAR, parser="lalr", transformer=SExprTransformer())


def read_sexpr(text: str) -> SExpr:
    if not text.strip():
        raise ParseError("empty formula text", 1, 1)
    try:
        return _parser.parse(text)
    except UnexpectedInput as exc:
        raise ParseError(f"cannot parse {text.strip()[:40]!r}", exc.line, exc.column) from exc
    except LarkError as exc:
        raise ParseError(str(exc)) from exc


def _type_from(sx: SExpr) -> t.Type:
    if isinstance(sx, str):
        if sx == "1":
            return t.UNIT
        if sx == "Omega":
            return t.OMEGA
        return t.BaseType(sx)
    if not sx:
        raise ParseError("empty type expression")
    head, *rest = sx
    if head == "*" and rest:
        return t.ProductType(tuple(_type_from(r) for r in rest))
    if head == "P" and len(rest) == 1:
        return t.PowerType(_type_from(rest[0]))
    if head == "^" and len(rest) == 2:
        return t.ExpType(_type_from(rest[0]), _type_from(rest[1]))
    raise ParseError(f"malformed type {sx}")


def parse_type(text: str) -> t.Type:
    return _type_from(read_sexpr(text))


class TermBuilder:
    """Resolves symbols against declared variables while building the AST."""

    def __init__(self, declarations: Mapping[str, t.Type], propositional: bool = False):
        self.scope = dict(declarations)
        self.propositional = propositional

    def binder(self, spec: SExpr) -> t.Var:
        if not (isinstance(spec, list) and len(spec) == 2 and isinstance(spec[0], str)):
            raise ParseError(f"binder must look like (x Type), got {spec}")
        return t.Var(spec[0], _type_from(spec[1]))

    def bound(self, var: t.Var, body: SExpr) -> t.Term:
        saved = self.scope.get(var.name)
        self.scope[var.name] = var.type
        try:
            return self.build(body)
        finally:
            if saved is None:
                del self.scope[var.name]
            else:
                self.scope[var.name] = saved

    def build(self, sx: SExpr) -> t.Term:
        if isinstance(sx, str):
            return self.symbol(sx)
        if not sx or not isinstance(sx[0], str):
            raise ParseError(f"expected an operator at the head of {sx}")
        head, *args = sx
        if head in ("and", "or") and len(args) >= 2:
            node = t.And if head == "and" else t.Or
            return reduce(lambda acc, nxt: node(acc, nxt), (self.build(a) for a in args))
        if head in ("implies", "iff", "=", "eval", "in", "boxright") and len(args) == 2:
            node = {"implies": t.Implies, "iff": t.Iff, "=": t.Eq, "eval": t.EvalExp,
                    "in": t.Member, "boxright": t.Counterfactual}[head]
            return node(self.build(args[0]), self.build(args[1]))
        if head == "not" and len(args) == 1:
            return t.Not(self.build(args[0]))
        if head == "pair" and args:
            return t.Pair(tuple(self.build(a) for a in args))
        if head == "proj" and len(args) == 2 and isinstance(args[0], str) and args[0].isdigit():
            return t.Proj(int(args[0]), self.build(args[1]))
        if head == "apply" and len(args) == 2 and isinstance(args[0], str):
            return t.ApplyArrow(args[0], self.build(args[1]))
        if head in ("lambda", "set", "forall", "exists") and len(args) == 2:
            node = {"lambda": t.Lambda, "set": t.Comprehension,
                    "forall": t.Forall, "exists": t.Exists}[head]
            var = self.binder(args[0])
            return node(var, self.bound(var, args[1]))
        if head == "outcome" and len(args) in (4, 5):
            return self.outcome(args)
        raise ParseError(f"unknown or malformed form ({head} ...)")

    def outcome(self, args: List[SExpr]) -> t.Term:
        model, variable, value = args[:3]
        if not all(isinstance(a, str) for a in (model, variable, value)):
            raise ParseError("outcome needs a model, a variable and a value")
        do: List[tuple] = []
        if len(args) == 5:
            spec = args[3]
            if not (isinstance(spec, list) and spec and spec[0] == "do"):
                raise ParseError("expected (do (X x) ...) in outcome")
            for pair in spec[1:]:
                if not (isinstance(pair, list) and len(pair) == 2):
                    raise ParseError(f"malformed assignment {pair}")
                do.append((pair[0], pair[1]))
        return t.CausalAtom(model, variable, value, tuple(sorted(do)), self.build(args[-1]))

    def symbol(self, name: str) -> t.Term:
        if name == "*":
            return t.Star()
        if name == "true":
            return t.Top()
        if name == "false":
            return t.Bottom()
        if name in self.scope:
            return t.Var(name, self.scope[name])
        if self.propositional:
            return t.Var(name, t.OMEGA)
        raise ParseError(f"undeclared variable {name}")


def parse_formula(text: str, declarations: Optional[Mapping[str, Union[str, t.Type]]] = None,
                  propositional: bool = False) -> t.Term:
    """Parse a term; declarations give the types of its free variables.

    With ``propositional`` set, undeclared symbols become Omega-typed atoms.
    """
    declared = {name: parse_type(ty) if isinstance(ty, str) else ty
                for name, ty in (declarations or {}).items()}
    return TermBuilder(declared, propositional).build(read_sexpr(text))

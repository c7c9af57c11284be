"""Connectives rewritten into equality, pairing and comprehension.

Local set theory takes ``=``, ``*``, pairing and ``{x | phi}`` as primitive and
defines the rest:

    true        * = *
    a and b     <a, b> = <true, true>
    a => b      (a and b) = a
    a <=> b     a = b
    forall x a  {x | a} = {x | true}
    false       forall w:Omega. w
    not a       a => false
    a or b      forall w:Omega. ((a => w) and (b => w)) => w
    exists x a  forall w:Omega. (forall x. (a => w)) => w

Evaluating the rewritten term in a topos gives the same truth values as the
native connectives.
"""
from dataclasses import fields, replace
from typing import Set

from src.logic import terms as t

TRUE = t.Eq(t.Star(), t.Star())


def _names(term: t.Term, found: Set[str]) -> Set[str]:
    if isinstance(term, t.Var):
        found.add(term.name)
    if isinstance(term, t.BINDERS):
        found.add(term.var.name)
    for child in term.children():
        _names(child, found)
    return found


class _Desugarer:
    def __init__(self, used: Set[str]):
        self.used = set(used)
        self.counter = 0

    def fresh(self) -> t.Var:
        while True:
            name = f"_w{self.counter}"
            self.counter += 1
            if name not in self.used:
                self.used.add(name)
                return t.Var(name, t.OMEGA)

    def conj(self, a: t.Term, b: t.Term) -> t.Term:
        return t.Eq(t.Pair((a, b)), t.Pair((TRUE, TRUE)))

    def imp(self, a: t.Term, b: t.Term) -> t.Term:
        return t.Eq(self.conj(a, b), a)

    def forall(self, var: t.Var, body: t.Term) -> t.Term:
        return t.Eq(t.Comprehension(var, body), t.Comprehension(var, TRUE))

    def false(self) -> t.Term:
        w = self.fresh()
        return self.forall(w, w)

    def rewrite(self, term: t.Term) -> t.Term:
        if isinstance(term, t.Top):
            return TRUE
        if isinstance(term, t.Bottom):
            return self.false()
        if isinstance(term, t.And):
            return self.conj(self.rewrite(term.left), self.rewrite(term.right))
        if isinstance(term, t.Implies):
            return self.imp(self.rewrite(term.left), self.rewrite(term.right))
        if isinstance(term, t.Iff):
            return t.Eq(self.rewrite(term.left), self.rewrite(term.right))
        if isinstance(term, t.Not):
            return self.imp(self.rewrite(term.body), self.false())
        if isinstance(term, t.Forall):
            return self.forall(term.var, self.rewrite(term.body))
        if isinstance(term, t.Or):
            a, b = self.rewrite(term.left), self.rewrite(term.right)
            w = self.fresh()
            return self.forall(w, self.imp(self.conj(self.imp(a, w), self.imp(b, w)), w))
        if isinstance(term, t.Exists):
            body = self.rewrite(term.body)
            w = self.fresh()
            return self.forall(w, self.imp(self.forall(term.var, self.imp(body, w)), w))
        return self._descend(term)

    def _descend(self, term: t.Term) -> t.Term:
        changes = {}
        for f in fields(term):
            value = getattr(term, f.name)
            if isinstance(value, t.Var):
                continue
            if isinstance(value, t.Term):
                changes[f.name] = self.rewrite(value)
            elif isinstance(value, tuple) and any(isinstance(v, t.Term) for v in value):
                changes[f.name] = tuple(self.rewrite(v) if isinstance(v, t.Term) else v for v in value)
        return replace(term, **changes) if changes else term


def desugar_lst(term: t.Term) -> t.Term:
    """Rewrite every logical connective into its local-set-theory encoding."""
    return _Desugarer(_names(term, set())).rewrite(term)


def is_primitive(term: t.Term) -> bool:
    """True when no logical connective remains anywhere in the term."""
    if isinstance(term, t.CONNECTIVES):
        return False
    return all(is_primitive(child) for child in term.children())

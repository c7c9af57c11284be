"""Forcing of formulas at stages, directly and clause by clause.

``forces`` checks that a generalized element factors through the
comprehension of a formula. ``forces_by_clauses`` reaches the same answer by
reducing to representable stages and unfolding the forcing clauses, and
keeps a derivation trace of how it got there.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from src.errors import TypeMismatch
from src.logic import terms as t
from src.logic.semantics import Topos, TypedTerm
from src.presheaf import (
    GrothendieckTopology,
    Presheaf,
    PresheafMorphism,
    Sieve,
    representable_element,
    sieves_on,
    yoneda,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForcingContext:
    """A stage N and one generalized element N -> M per free variable."""

    stage: Presheaf
    elements: Mapping[str, PresheafMorphism]

    @classmethod
    def single(cls, stage: Presheaf, var: str, alpha: PresheafMorphism) -> "ForcingContext":
        return cls(stage, {var: alpha})

    @classmethod
    def representable(cls, topos: Topos, c: str, values: Mapping[str, Tuple[t.Type, str]]) -> "ForcingContext":
        """Stage y(c) with each variable sent to the given element at c."""
        stage = yoneda(topos.base, c)
        elements = {name: representable_element(topos.carrier(ty), c, x)
                    for name, (ty, x) in values.items()}
        return cls(stage, elements)

    def env_at(self, c: str, n: str) -> Dict[str, str]:
        return {x: alpha(c, n) for x, alpha in self.elements.items()}

    def precompose(self, f: PresheafMorphism) -> "ForcingContext":
        """Pull the context back along f: N' -> N."""
        from src.presheaf import compose_morphisms

        return ForcingContext(f.source, {x: compose_morphisms(a, f) for x, a in self.elements.items()})


@dataclass
class Derivation:
    clause: str
    stage: str
    formula: str
    env: Dict[str, str]
    holds: bool
    children: List["Derivation"] = field(default_factory=list)
    note: str = ""

    def as_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "clause": self.clause,
            "stage": self.stage,
            "formula": self.formula,
            "env": dict(sorted(self.env.items())),
            "holds": self.holds,
        }
        if self.note:
            out["note"] = self.note
        if self.children:
            out["children"] = [c.as_dict() for c in self.children]
        return out


@dataclass
class ForcingResult:
    holds: bool
    trace: Derivation


def _prepare(topos: Topos, ctx: ForcingContext, formula: t.Term) -> TypedTerm:
    tt = formula if isinstance(formula, TypedTerm) else topos.typecheck(formula)
    if not tt.is_formula:
        raise TypeMismatch("only formulas can be forced", subterm=t.to_sexpr(tt.term),
                           expected="Omega", actual=str(tt.type))
    for name, ty in tt.free:
        if name not in ctx.elements:
            raise TypeMismatch(f"free variable {name} has no generalized element",
                               subterm=t.to_sexpr(tt.term))
        alpha = ctx.elements[name]
        if not alpha.target.same_as(topos.carrier(ty)):
            raise TypeMismatch(f"element for {name} lands in the wrong object",
                               expected=str(ty), actual=alpha.target.name)
        if not alpha.source.same_as(ctx.stage):
            raise TypeMismatch(f"element for {name} does not start at the stage")
    return tt


def forces(topos: Topos, ctx: ForcingContext, formula: t.Term) -> bool:
    """N forces phi(alpha) iff the image of alpha lies in {x | phi}."""
    tt = _prepare(topos, ctx, formula)
    names = [n for n, _ in tt.free]
    N = ctx.stage
    for c in topos.base.objects:
        for n in N.at(c):
            env = {x: ctx.elements[x](c, n) for x in names}
            if not topos.holds(tt, c, env):
                return False
    return True


class ClauseEvaluator:
    """Unfolds the forcing clauses at representable stages.

    Without a topology, disjunction and existence are checked at the stage
    itself. With one, they need a covering sieve on whose arrows a disjunct
    (or witness) is forced, and atomic formulas hold on some cover. With
    ``epi_search``, the covers are all jointly epimorphic sieves.
    """

    def __init__(self, topos: Topos, topology: Optional[GrothendieckTopology] = None,
                 epi_search: bool = False):
        self.topos = topos
        self.topology = topology
        self.epi_search = epi_search
        self._memo: Dict[tuple, Derivation] = {}
        self._epic: Dict[str, List[Sieve]] = {}

    @property
    def local(self) -> bool:
        return self.topology is not None or self.epi_search

    def covers(self, c: str) -> List[Sieve]:
        if self.topology is not None:
            return list(self.topology.covering(c))
        if c not in self._epic:
            C = self.topos.base
            self._epic[c] = [S for S in sieves_on(C, c) if self._jointly_epic(S)]
        return self._epic[c]

    def _jointly_epic(self, S: Sieve) -> bool:
        C = self.topos.base
        return all(any(C.tgt(h) == C.src(f) and C.compose(f, h) == g
                       for f in S.arrows for h in C.arrows_into(C.src(f)))
                   for g in C.arrows_into(S.on))

    def force(self, tt: TypedTerm, c: str, env: Mapping[str, str]) -> Derivation:
        env = {x: env[x] for x, _ in tt.free}
        key = (tt, c, tuple(sorted(env.items())))
        if key not in self._memo:
            self._memo[key] = self._force(tt, c, env)
        return self._memo[key]

    def _moved(self, tt: TypedTerm, f: str, env: Mapping[str, str]) -> Dict[str, str]:
        return self.topos.restrict_env(tt.free_map, f, env)

    def _bound(self, tt: TypedTerm, f: str, env: Mapping[str, str], x: str) -> Dict[str, str]:
        body = tt.children[0]
        var = tt.term.var
        outer = {n: ty for n, ty in body.free if n != var.name}
        moved = self.topos.restrict_env(outer, f, env)
        moved[var.name] = x
        return moved

    def _result(self, clause: str, tt: TypedTerm, c: str, env: Mapping[str, str],
                holds: bool, children: List[Derivation], note: str = "") -> Derivation:
        return Derivation(clause, c, t.to_sexpr(tt.term), dict(env), holds, children, note)

    def _force(self, tt: TypedTerm, c: str, env: Dict[str, str]) -> Derivation:
        C = self.topos.base
        term = tt.term
        kids = tt.children
        if isinstance(term, t.Top):
            return self._result("true", tt, c, env, True, [])
        if isinstance(term, t.Bottom):
            holds = self.local and any(not S.arrows for S in self.covers(c))
            return self._result("false", tt, c, env, holds, [])
        if isinstance(term, t.And):
            left, right = self.force(kids[0], c, env), self.force(kids[1], c, env)
            return self._result("and", tt, c, env, left.holds and right.holds, [left, right])
        if isinstance(term, t.Or):
            return self._disjunction(tt, c, env)
        if isinstance(term, (t.Implies, t.Not, t.Iff)):
            return self._implication(tt, c, env)
        if isinstance(term, t.Forall):
            children = []
            domain = self.topos.carrier(term.var.type)
            for f in C.arrows_into(c):
                d = C.src(f)
                for x in domain.at(d):
                    child = self.force(kids[0], d, self._bound(tt, f, env, x))
                    children.append(child)
                    if not child.holds:
                        return self._result("forall", tt, c, env, False, children,
                                            note=f"fails along {f} at {term.var.name}={x}")
            return self._result("forall", tt, c, env, True, children)
        if isinstance(term, t.Exists):
            return self._existential(tt, c, env)
        return self._atomic(tt, c, env)

    def _atomic(self, tt: TypedTerm, c: str, env: Dict[str, str]) -> Derivation:
        C = self.topos.base
        if not self.local:
            holds = self.topos.holds(tt, c, env)
            return self._result("atomic", tt, c, env, holds, [])
        for S in self.covers(c):
            if all(self.topos.holds(tt, C.src(f), self._moved(tt, f, env)) for f in S.arrows):
                return self._result("atomic", tt, c, env, True, [], note=f"on cover {S.atom}")
        return self._result("atomic", tt, c, env, False, [])

    def _disjunction(self, tt: TypedTerm, c: str, env: Dict[str, str]) -> Derivation:
        C = self.topos.base
        left, right = tt.children
        if not self.local:
            a, b = self.force(left, c, env), self.force(right, c, env)
            return self._result("or", tt, c, env, a.holds or b.holds, [a, b])
        for S in self.covers(c):
            children = []
            for f in sorted(S.arrows):
                d = C.src(f)
                a = self.force(left, d, self._moved(left, f, env))
                chosen = a if a.holds else self.force(right, d, self._moved(right, f, env))
                children.append(chosen)
                if not chosen.holds:
                    break
            else:
                return self._result("or", tt, c, env, True, children, note=f"on cover {S.atom}")
        return self._result("or", tt, c, env, False, [])

    def _existential(self, tt: TypedTerm, c: str, env: Dict[str, str]) -> Derivation:
        C = self.topos.base
        var = tt.term.var
        body = tt.children[0]
        domain = self.topos.carrier(var.type)

        def witness(f: str) -> Optional[Derivation]:
            for x in domain.at(C.src(f)):
                child = self.force(body, C.src(f), self._bound(tt, f, env, x))
                if child.holds:
                    return child
            return None

        if not self.local:
            found = witness(C.identity(c))
            return self._result("exists", tt, c, env, found is not None,
                                [found] if found else [])
        for S in self.covers(c):
            children = []
            for f in sorted(S.arrows):
                found = witness(f)
                if found is None:
                    break
                children.append(found)
            else:
                return self._result("exists", tt, c, env, True, children, note=f"on cover {S.atom}")
        return self._result("exists", tt, c, env, False, [])

    def _implication(self, tt: TypedTerm, c: str, env: Dict[str, str]) -> Derivation:
        """phi => psi at c: along every f: d -> c, forcing phi at d gives psi at d."""
        C = self.topos.base
        term = tt.term
        if isinstance(term, t.Iff):
            parts = [(tt.children[0], tt.children[1]), (tt.children[1], tt.children[0])]
        elif isinstance(term, t.Not):
            parts = [(tt.children[0], None)]
        else:
            parts = [(tt.children[0], tt.children[1])]
        clause = type(term).__name__.lower()
        children = []
        for f in C.arrows_into(c):
            d = C.src(f)
            for antecedent, consequent in parts:
                before = self.force(antecedent, d, self._moved(antecedent, f, env))
                if not before.holds:
                    continue
                if consequent is None:
                    holds = self.local and any(not S.arrows for S in self.covers(d))
                    after = Derivation("false", d, "false", {}, holds)
                else:
                    after = self.force(consequent, d, self._moved(consequent, f, env))
                children.extend([before, after])
                if not after.holds:
                    return self._result(clause, tt, c, env, False, children,
                                        note=f"antecedent forced along {f} but not the consequent")
        return self._result(clause, tt, c, env, True, children)


def forces_by_clauses(topos: Topos, ctx: ForcingContext, formula: t.Term,
                      topology: Optional[GrothendieckTopology] = None,
                      epi_search: bool = False) -> ForcingResult:
    tt = _prepare(topos, ctx, formula)
    evaluator = ClauseEvaluator(topos, topology, epi_search)
    children = []
    holds = True
    for c in topos.base.objects:
        for n in ctx.stage.at(c):
            child = evaluator.force(tt, c, ctx.env_at(c, n))
            children.append(child)
            holds = holds and child.holds
    trace = Derivation("stage", ctx.stage.name, t.to_sexpr(tt.term), {}, holds, children,
                       note="one derivation per element of the stage")
    logger.debug("clause evaluation of %s: %s", trace.formula, holds)
    return ForcingResult(holds, trace)

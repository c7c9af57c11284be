"""Presheaf toposes over a finite base category.

A presheaf sends each arrow ``f: c -> d`` of the base to a restriction map
``at(d) -> at(c)``. Subobjects are canonical pointwise member sets and truth
values at a stage ``c`` are sieves on ``c``, written as set atoms ``{f,g}``.
"""
import itertools
import logging
from dataclasses import dataclass
from math import prod
from types import MappingProxyType
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.config import enum_limit
from src.encoding import encode_set, encode_tuple
from src.errors import (
    CodomainMismatch,
    DomainMismatch,
    ParentMismatch,
    SizeLimit,
    UnknownObject,
    ValueOutOfDomain,
)
from src.fincat import Cone, ConeDirection, FinCategory, Report, SetDiagram, colimit, limit, mediating_morphism
from src.finset import FinFunction, FinSet, compose, tuple_product

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Presheaf:
    base: FinCategory
    sets: Mapping[str, FinSet]
    maps: Mapping[str, FinFunction]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sets", MappingProxyType(dict(self.sets)))
        object.__setattr__(self, "maps", MappingProxyType(dict(self.maps)))
        missing = [c for c in self.base.objects if c not in self.sets]
        if missing:
            raise UnknownObject(f"presheaf {self.name} has no set at {missing}")

    def at(self, c: str) -> FinSet:
        try:
            return self.sets[c]
        except KeyError:
            raise UnknownObject(f"{c} is not an object of {self.base.name}") from None

    def restrict(self, f: str) -> FinFunction:
        if f in self.maps:
            return self.maps[f]
        arrow = self.base.arrow(f)
        if self.base.is_identity(f):
            return FinFunction.identity(self.at(arrow.src))
        raise UnknownObject(f"presheaf {self.name} has no restriction along {f}")

    def act(self, f: str, x: str) -> str:
        return self.restrict(f)(x)

    def same_as(self, other: "Presheaf") -> bool:
        if self.base.objects != other.base.objects:
            return False
        if any(self.at(c) != other.at(c) for c in self.base.objects):
            return False
        return all(self.restrict(f) == other.restrict(f) for f in self.base.arrows)

    def size(self) -> int:
        return sum(len(self.at(c)) for c in self.base.objects)


def validate_presheaf(X: Presheaf) -> Report:
    C = X.base
    report = Report(f"presheaf {X.name}")
    for a in C.arrows.values():
        try:
            r = X.restrict(a.name)
        except UnknownObject as exc:
            report.add("functoriality", str(exc), arrow=a.name)
            continue
        if r.dom != X.at(a.tgt) or r.cod != X.at(a.src):
            report.add("functoriality", f"restriction along {a.name} has the wrong endpoints",
                       arrow=a.name)
        elif C.is_identity(a.name) and r != FinFunction.identity(X.at(a.src)):
            report.add("functoriality", f"restriction along {a.name} is not the identity",
                       arrow=a.name)
    if not report.ok:
        return report
    for (g, f), h in C.composition.items():
        if X.restrict(h) != compose(X.restrict(f), X.restrict(g)):
            report.add("functoriality", f"restriction along {g}.{f} is not the composite",
                       g=g, f=f)
    return report


def terminal_presheaf(C: FinCategory) -> Presheaf:
    one = FinSet("1", ("*",))
    return Presheaf(C, {c: one for c in C.objects},
                    {a: FinFunction.identity(one) for a in C.arrows}, name="1")


def yoneda(C: FinCategory, x: str) -> Presheaf:
    if x not in C.objects:
        raise UnknownObject(f"{x} is not an object of {C.name}")
    sets = {d: FinSet(f"y({x})({d})", C.hom(d, x)) for d in C.objects}
    maps = {
        f.name: FinFunction(sets[f.tgt], sets[f.src],
                            {g: C.compose(g, f.name) for g in sets[f.tgt]})
        for f in C.arrows.values()
    }
    return Presheaf(C, sets, maps, name=f"y({x})")


def representable_element(X: Presheaf, c: str, x: str) -> "PresheafMorphism":
    """The map y(c) -> X picking out ``x`` in X(c)."""
    if x not in X.at(c):
        raise ValueOutOfDomain(f"{x} is not in {X.name}({c})")
    yc = yoneda(X.base, c)
    components = {d: FinFunction(yc.at(d), X.at(d), {f: X.act(f, x) for f in yc.at(d)})
                  for d in X.base.objects}
    return PresheafMorphism(yc, X, components)


# -- sieves -----------------------------------------------------------------


@dataclass(frozen=True)
class Sieve:
    on: str
    arrows: FrozenSet[str]

    @property
    def atom(self) -> str:
        return encode_set(self.arrows)

    def __contains__(self, f: str) -> bool:
        return f in self.arrows


def _closed(C: FinCategory, arrows: FrozenSet[str]) -> bool:
    for f in arrows:
        for g in C.arrows_into(C.src(f)):
            if C.compose(f, g) not in arrows:
                return False
    return True


def sieves_on(C: FinCategory, x: str) -> List[Sieve]:
    if x not in C.objects:
        raise UnknownObject(f"{x} is not an object of {C.name}")
    into = C.arrows_into(x)
    found = []
    for size in range(len(into) + 1):
        for combo in itertools.combinations(into, size):
            arrows = frozenset(combo)
            if _closed(C, arrows):
                found.append(Sieve(x, arrows))
    return found


def maximal_sieve(C: FinCategory, x: str) -> Sieve:
    return Sieve(x, frozenset(C.arrows_into(x)))


def sieve_pullback(C: FinCategory, h: str, S: Sieve) -> Sieve:
    if C.tgt(h) != S.on:
        raise CodomainMismatch(f"{h} does not land in {S.on}")
    d = C.src(h)
    return Sieve(d, frozenset(g for g in C.arrows_into(d) if C.compose(h, g) in S.arrows))


# -- morphisms and subobjects --------------------------------------------------


@dataclass(frozen=True, eq=False)
class PresheafMorphism:
    """A natural transformation between presheaves on one base."""

    source: Presheaf
    target: Presheaf
    components: Mapping[str, FinFunction]

    def __post_init__(self):
        object.__setattr__(self, "components", MappingProxyType(dict(self.components)))

    def __call__(self, c: str, x: str) -> str:
        return self.components[c](x)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PresheafMorphism):
            return NotImplemented
        return all(self.components[c] == other.components[c] for c in self.source.base.objects)

    def __hash__(self) -> int:
        return hash(tuple(self.components[c] for c in self.source.base.objects))

    def naturality_violations(self) -> List[str]:
        bad = []
        for a in self.source.base.arrows.values():
            left = compose(self.components[a.src], self.source.restrict(a.name))
            right = compose(self.target.restrict(a.name), self.components[a.tgt])
            if left != right:
                bad.append(a.name)
        return bad

    @property
    def is_natural(self) -> bool:
        return not self.naturality_violations()

    def image(self) -> "SubPresheaf":
        return SubPresheaf(self.target, {c: self.components[c].image()
                                         for c in self.source.base.objects})


def compose_morphisms(beta: PresheafMorphism, alpha: PresheafMorphism) -> PresheafMorphism:
    if not alpha.target.same_as(beta.source):
        raise DomainMismatch("natural transformations do not compose")
    return PresheafMorphism(alpha.source, beta.target,
                            {c: compose(beta.components[c], alpha.components[c])
                             for c in alpha.source.base.objects})


def identity_morphism(X: Presheaf) -> PresheafMorphism:
    return PresheafMorphism(X, X, {c: FinFunction.identity(X.at(c)) for c in X.base.objects})


@dataclass(frozen=True, eq=False)
class SubPresheaf:
    parent: Presheaf
    members: Mapping[str, FrozenSet[str]]

    def __post_init__(self):
        members = {c: frozenset(self.members.get(c, ())) for c in self.parent.base.objects}
        for c, ms in members.items():
            stray = ms - self.parent.at(c).members
            if stray:
                raise ValueOutOfDomain(f"{sorted(stray)} are not in {self.parent.name}({c})")
        object.__setattr__(self, "members", MappingProxyType(members))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubPresheaf):
            return NotImplemented
        same = self.parent is other.parent or self.parent.same_as(other.parent)
        return same and dict(self.members) == dict(other.members)

    def __hash__(self) -> int:
        return hash(tuple(sorted((c, m) for c, m in self.members.items())))

    def closure_violations(self) -> List[Tuple[str, str]]:
        bad = []
        for a in self.parent.base.arrows.values():
            for x in self.members[a.tgt]:
                if self.parent.act(a.name, x) not in self.members[a.src]:
                    bad.append((a.name, x))
        return bad

    @property
    def is_closed(self) -> bool:
        return not self.closure_violations()

    def leq(self, other: "SubPresheaf") -> bool:
        _same_parent(self, other)
        return all(self.members[c] <= other.members[c] for c in self.members)

    def as_presheaf(self, name: str = "") -> Presheaf:
        X = self.parent
        sets = {c: FinSet(f"{name or 'S'}({c})", tuple(x for x in X.at(c) if x in self.members[c]))
                for c in X.base.objects}
        maps = {a.name: FinFunction(sets[a.tgt], sets[a.src],
                                    {x: X.act(a.name, x) for x in sets[a.tgt]})
                for a in X.base.arrows.values()}
        return Presheaf(X.base, sets, maps, name=name or f"sub({X.name})")

    def inclusion(self) -> PresheafMorphism:
        sub = self.as_presheaf()
        return PresheafMorphism(sub, self.parent,
                                {c: FinFunction(sub.at(c), self.parent.at(c), {x: x for x in sub.at(c)})
                                 for c in self.parent.base.objects})


def full_subobject(X: Presheaf) -> SubPresheaf:
    return SubPresheaf(X, {c: X.at(c).members for c in X.base.objects})


def empty_subobject(X: Presheaf) -> SubPresheaf:
    return SubPresheaf(X, {})


def _same_parent(A: SubPresheaf, B: SubPresheaf) -> None:
    if A.parent is not B.parent and not A.parent.same_as(B.parent):
        raise ParentMismatch("subobjects live in different presheaves")


# -- the subobject classifier ---------------------------------------------


@dataclass(frozen=True, eq=False)
class Omega:
    """The sieve presheaf together with its true point."""

    presheaf: Presheaf
    true_point: Mapping[str, str]
    sieves: Mapping[Tuple[str, str], Sieve]

    def sieve(self, c: str, atom: str) -> Sieve:
        return self.sieves[(c, atom)]

    def top(self, c: str) -> str:
        return self.true_point[c]

    def bottom(self, c: str) -> str:
        return encode_set(())

    def meet(self, c: str, s: str, t: str) -> str:
        return encode_set(self.sieve(c, s).arrows & self.sieve(c, t).arrows)

    def join(self, c: str, s: str, t: str) -> str:
        return encode_set(self.sieve(c, s).arrows | self.sieve(c, t).arrows)

    def implies(self, c: str, s: str, t: str) -> str:
        """Largest sieve R with R meet s below t."""
        C = self.presheaf.base
        S, T = self.sieve(c, s).arrows, self.sieve(c, t).arrows
        keep = []
        for f in C.arrows_into(c):
            below = (C.compose(f, g) for g in C.arrows_into(C.src(f)))
            if all(h in T for h in below if h in S):
                keep.append(f)
        return encode_set(keep)

    def negate(self, c: str, s: str) -> str:
        return self.implies(c, s, self.bottom(c))

    def alias(self, c: str, atom: str) -> str:
        if atom == self.bottom(c):
            return "0"
        if atom == self.true_point[c]:
            return "1"
        if self.presheaf.base.name == "2" and len(self.presheaf.at(c)) == 3:
            return "1/2"
        return atom


def omega(C: FinCategory) -> Omega:
    sets, sieves, true_point = {}, {}, {}
    for c in C.objects:
        found = sieves_on(C, c)
        sets[c] = FinSet(f"Omega({c})", tuple(s.atom for s in found))
        sieves.update({(c, s.atom): s for s in found})
        true_point[c] = maximal_sieve(C, c).atom
    maps = {
        a.name: FinFunction(sets[a.tgt], sets[a.src],
                            {s: sieve_pullback(C, a.name, sieves[(a.tgt, s)]).atom
                             for s in sets[a.tgt]})
        for a in C.arrows.values()
    }
    logger.debug("Omega over %s: %s", C.name, {c: len(s) for c, s in sets.items()})
    return Omega(Presheaf(C, sets, maps, name="Omega"), MappingProxyType(true_point),
                 MappingProxyType(sieves))


def classify(S: SubPresheaf, classifier: Optional[Omega] = None) -> PresheafMorphism:
    X = S.parent
    C = X.base
    om = classifier or omega(C)
    components = {}
    for c in C.objects:
        table = {}
        for e in X.at(c):
            table[e] = encode_set(f for f in C.arrows_into(c) if X.act(f, e) in S.members[C.src(f)])
        components[c] = FinFunction(X.at(c), om.presheaf.at(c), table, name=f"chi_{c}")
    return PresheafMorphism(X, om.presheaf, components)


def true_subobject(chi: PresheafMorphism, classifier: Omega) -> SubPresheaf:
    """Pull the true point back along ``chi``."""
    X = chi.source
    return SubPresheaf(X, {c: frozenset(e for e in X.at(c) if chi(c, e) == classifier.true_point[c])
                           for c in X.base.objects})


def subobjects(X: Presheaf, limit: Optional[int] = None) -> List[SubPresheaf]:
    cap = enum_limit(limit)
    total = 2 ** X.size()
    if total > cap:
        raise SizeLimit(f"subobjects of {X.name}", total, cap)
    C = X.base
    per_object = []
    for c in C.objects:
        elems = X.at(c).elements
        per_object.append([frozenset(combo) for size in range(len(elems) + 1)
                           for combo in itertools.combinations(elems, size)])
    found = []
    for choice in itertools.product(*per_object):
        candidate = SubPresheaf(X, dict(zip(C.objects, choice)))
        if candidate.is_closed:
            found.append(candidate)
    return found


def meet(A: SubPresheaf, B: SubPresheaf) -> SubPresheaf:
    _same_parent(A, B)
    return SubPresheaf(A.parent, {c: A.members[c] & B.members[c] for c in A.members})


def join(A: SubPresheaf, B: SubPresheaf) -> SubPresheaf:
    _same_parent(A, B)
    return SubPresheaf(A.parent, {c: A.members[c] | B.members[c] for c in A.members})


def implies(A: SubPresheaf, B: SubPresheaf) -> SubPresheaf:
    _same_parent(A, B)
    X = A.parent
    C = X.base
    members = {}
    for c in C.objects:
        members[c] = frozenset(
            e for e in X.at(c)
            if all(X.act(f, e) in B.members[C.src(f)]
                   for f in C.arrows_into(c) if X.act(f, e) in A.members[C.src(f)])
        )
    return SubPresheaf(X, members)


def negate(A: SubPresheaf) -> SubPresheaf:
    return implies(A, empty_subobject(A.parent))


HEYTING_OPS = ("meet", "join", "implies", "not")


def heyting(opname: str, A: SubPresheaf, B: Optional[SubPresheaf] = None) -> SubPresheaf:
    if opname == "not":
        return negate(A)
    if B is None:
        raise ValueError(f"{opname} needs two subobjects")
    ops: Dict[str, Callable[[SubPresheaf, SubPresheaf], SubPresheaf]] = {
        "meet": meet, "join": join, "implies": implies,
    }
    if opname not in ops:
        raise ValueError(f"unknown Heyting operation {opname}; expected one of {HEYTING_OPS}")
    return ops[opname](A, B)


# -- hom-sets, products and exponentials ---------------------------------------


def hom_presheaves(F: Presheaf, G: Presheaf, limit: Optional[int] = None) -> List[PresheafMorphism]:
    """Every natural transformation F -> G, by backtracking over objects."""
    C = F.base
    cap = enum_limit(limit)
    raw = prod(len(G.at(c)) ** len(F.at(c)) for c in C.objects)
    if raw > cap:
        raise SizeLimit(f"Hom({F.name}, {G.name})", raw, cap)
    objs = C.objects
    found: List[PresheafMorphism] = []
    chosen: Dict[str, FinFunction] = {}

    def consistent(c: str) -> bool:
        for a in C.arrows.values():
            if c not in (a.src, a.tgt) or a.src not in chosen or a.tgt not in chosen:
                continue
            for x in F.at(a.tgt):
                if chosen[a.src](F.act(a.name, x)) != G.act(a.name, chosen[a.tgt](x)):
                    return False
        return True

    def extend(i: int) -> None:
        if i == len(objs):
            found.append(PresheafMorphism(F, G, dict(chosen)))
            return
        c = objs[i]
        for values in itertools.product(G.at(c).elements, repeat=len(F.at(c))):
            chosen[c] = FinFunction(F.at(c), G.at(c), dict(zip(F.at(c).elements, values)))
            if consistent(c):
                extend(i + 1)
            del chosen[c]

    extend(0)
    return found


def presheaf_product(factors: Sequence[Presheaf], name: str = "") -> Tuple[Presheaf, List[PresheafMorphism]]:
    """Pointwise n-ary product with tuple atoms."""
    if not factors:
        raise ValueError("presheaf_product needs at least one factor")
    C = factors[0].base
    sets, proj_tables = {}, {}
    for c in C.objects:
        apex, projections = tuple_product([X.at(c) for X in factors], name=f"{name or 'P'}({c})")
        sets[c] = apex
        proj_tables[c] = projections
    maps = {}
    for a in C.arrows.values():
        table = {}
        for t in sets[a.tgt]:
            parts = [p(t) for p in proj_tables[a.tgt]]
            table[t] = encode_tuple([X.act(a.name, x) for X, x in zip(factors, parts)])
        maps[a.name] = FinFunction(sets[a.tgt], sets[a.src], table)
    P = Presheaf(C, sets, maps, name=name or " x ".join(X.name for X in factors))
    projections = [
        PresheafMorphism(P, X, {c: FinFunction(P.at(c), X.at(c), dict(proj_tables[c][i].table))
                                for c in C.objects})
        for i, X in enumerate(factors)
    ]
    return P, projections


def presheaf_pullback(alpha: PresheafMorphism, beta: PresheafMorphism) -> Tuple[Presheaf, PresheafMorphism, PresheafMorphism]:
    if not alpha.target.same_as(beta.target):
        raise CodomainMismatch("pullback needs a shared codomain presheaf")
    C = alpha.source.base
    F, G = alpha.source, beta.source
    sets = {c: FinSet(f"pb({c})", tuple(encode_tuple((x, y)) for x in F.at(c) for y in G.at(c)
                                         if alpha(c, x) == beta(c, y)))
            for c in C.objects}
    pairs = {c: {encode_tuple((x, y)): (x, y) for x in F.at(c) for y in G.at(c)
                 if alpha(c, x) == beta(c, y)} for c in C.objects}
    maps = {a.name: FinFunction(sets[a.tgt], sets[a.src],
                                {t: encode_tuple((F.act(a.name, x), G.act(a.name, y)))
                                 for t, (x, y) in pairs[a.tgt].items()})
            for a in C.arrows.values()}
    P = Presheaf(C, sets, maps, name="pullback")
    p1 = PresheafMorphism(P, F, {c: FinFunction(sets[c], F.at(c), {t: xy[0] for t, xy in pairs[c].items()})
                                 for c in C.objects})
    p2 = PresheafMorphism(P, G, {c: FinFunction(sets[c], G.at(c), {t: xy[1] for t, xy in pairs[c].items()})
                                 for c in C.objects})
    return P, p1, p2


def presheaf_equalizer(alpha: PresheafMorphism, beta: PresheafMorphism) -> SubPresheaf:
    if not (alpha.source.same_as(beta.source) and alpha.target.same_as(beta.target)):
        raise DomainMismatch("equalizer needs parallel natural transformations")
    X = alpha.source
    return SubPresheaf(X, {c: frozenset(x for x in X.at(c) if alpha(c, x) == beta(c, x))
                           for c in X.base.objects})


@dataclass(frozen=True, eq=False)
class PresheafDiagram:
    """A diagram of presheaves on one base, indexed by a finite shape."""

    shape: FinCategory
    objects: Mapping[str, Presheaf]
    arrows: Mapping[str, PresheafMorphism]

    def at_stage(self, c: str) -> SetDiagram:
        objs = {j: X.at(c) for j, X in self.objects.items()}
        maps = {a: m.components[c] for a, m in self.arrows.items()}
        return SetDiagram(self.shape, objs, maps, name=f"stage {c}")


def presheaf_limit(D: PresheafDiagram, limit_cap: Optional[int] = None) -> Tuple[Presheaf, Dict[str, Cone]]:
    """Limits computed stage by stage; restrictions come from mediating maps."""
    base = next(iter(D.objects.values())).base
    cones = {c: limit(D.at_stage(c), limit=limit_cap) for c in base.objects}
    maps = {}
    for a in base.arrows.values():
        target = cones[a.src]
        legs = {j: compose(D.objects[j].restrict(a.name), cones[a.tgt].legs[j])
                for j in D.shape.objects}
        candidate = Cone(target.diagram, cones[a.tgt].apex, legs, ConeDirection.OVER)
        maps[a.name] = mediating_morphism(target, candidate)
    sets = {c: cones[c].apex for c in base.objects}
    return Presheaf(base, sets, maps, name="lim"), cones


def presheaf_colimit(D: PresheafDiagram) -> Tuple[Presheaf, Dict[str, Cone]]:
    base = next(iter(D.objects.values())).base
    cones = {c: colimit(D.at_stage(c)) for c in base.objects}
    maps = {}
    for a in base.arrows.values():
        source = cones[a.tgt]
        legs = {j: compose(cones[a.src].legs[j], D.objects[j].restrict(a.name))
                for j in D.shape.objects}
        candidate = Cone(source.diagram, cones[a.src].apex, legs, ConeDirection.UNDER)
        maps[a.name] = mediating_morphism(source, candidate)
    sets = {c: cones[c].apex for c in base.objects}
    return Presheaf(base, sets, maps, name="colim"), cones


FamilyKey = Tuple[str, str, str]


class FamilyCodec:
    """Encodes natural families ``y(c) x F -> G`` as atoms and back.

    A family at stage ``c`` assigns a value in G(d) to every arrow ``f: d -> c``
    and every ``x`` in F(d).
    """

    def __init__(self, F: Presheaf, G: Presheaf, name: str = ""):
        self.F = F
        self.G = G
        self.base = F.base
        self.name = name or f"{G.name}^{F.name}"
        self._decoded: Dict[Tuple[str, str], Dict[FamilyKey, str]] = {}

    def keys(self, c: str) -> List[FamilyKey]:
        C = self.base
        return [(d, f, x) for d in C.objects for f in C.hom(d, c) for x in self.F.at(d)]

    def encode(self, c: str, table: Mapping[FamilyKey, str]) -> str:
        atom = "[" + ";".join(f"{f}/{x}={table[(d, f, x)]}" for d, f, x in self.keys(c)) + "]"
        self._decoded.setdefault((c, atom), dict(table))
        return atom

    def decode(self, c: str, atom: str) -> Dict[FamilyKey, str]:
        try:
            return self._decoded[(c, atom)]
        except KeyError:
            raise ValueOutOfDomain(f"{atom} is not a known element of {self.name}({c})") from None

    def apply(self, c: str, atom: str, x: str) -> str:
        return self.decode(c, atom)[(c, self.base.identity(c), x)]

    def restrict(self, h: str, atom: str) -> str:
        C = self.base
        c, c2 = C.tgt(h), C.src(h)
        table = self.decode(c, atom)
        return self.encode(c2, {(d, f, x): table[(d, C.compose(h, f), x)]
                                for d, f, x in self.keys(c2)})

    def families(self, c: str, limit: Optional[int] = None) -> List[str]:
        """Every natural family at stage ``c``, in canonical order."""
        C, F, G = self.base, self.F, self.G
        keys = self.keys(c)
        cap = enum_limit(limit)
        raw = prod(len(G.at(d)) for d, _, _ in keys)
        if raw > cap:
            raise SizeLimit(f"families of {self.name} at {c}", raw, cap)
        index = {k: i for i, k in enumerate(keys)}
        checks: List[List[Tuple[int, int, str]]] = [[] for _ in keys]
        for i, (d, f, x) in enumerate(keys):
            for g in C.arrows_into(d):
                j = index[(C.src(g), C.compose(f, g), F.act(g, x))]
                checks[max(i, j)].append((i, j, g))
        found: List[str] = []
        values: List[str] = []

        def extend() -> None:
            pos = len(values)
            if pos == len(keys):
                found.append(self.encode(c, dict(zip(keys, values))))
                return
            for v in G.at(keys[pos][0]):
                values.append(v)
                if all(values[j] == G.act(g, values[i]) for i, j, g in checks[pos]):
                    extend()
                values.pop()

        extend()
        return found


@dataclass(frozen=True, eq=False)
class ExponentialPresheaf:
    presheaf: Presheaf
    codec: FamilyCodec
    evaluation: PresheafMorphism


def psh_exponential(F: Presheaf, G: Presheaf, limit: Optional[int] = None,
                    codec: Optional[FamilyCodec] = None) -> ExponentialPresheaf:
    """G^F with its evaluation map G^F x F -> G."""
    if F.base is not G.base and F.base.objects != G.base.objects:
        raise DomainMismatch("exponential needs presheaves on one base")
    C = F.base
    codec = codec or FamilyCodec(F, G)
    sets = {c: FinSet(f"{codec.name}({c})", tuple(codec.families(c, limit=limit)))
            for c in C.objects}
    maps = {a.name: FinFunction(sets[a.tgt], sets[a.src],
                                {t: codec.restrict(a.name, t) for t in sets[a.tgt]})
            for a in C.arrows.values()}
    E = Presheaf(C, sets, maps, name=codec.name)
    pairs, _ = presheaf_product([E, F])
    evaluation = PresheafMorphism(pairs, G, {
        c: FinFunction(pairs.at(c), G.at(c),
                       {encode_tuple((t, x)): codec.apply(c, t, x) for t in sets[c] for x in F.at(c)})
        for c in C.objects
    })
    logger.debug("exponential %s: %s", codec.name, {c: len(s) for c, s in sets.items()})
    return ExponentialPresheaf(E, codec, evaluation)


def power_object(A: Presheaf, limit: Optional[int] = None,
                 classifier: Optional[Omega] = None) -> ExponentialPresheaf:
    om = classifier or omega(A.base)
    return psh_exponential(A, om.presheaf, limit=limit,
                           codec=FamilyCodec(A, om.presheaf, name=f"P{A.name}"))


# -- Grothendieck topologies and sheaves --------------------------------------


@dataclass(frozen=True, eq=False)
class GrothendieckTopology:
    base: FinCategory
    covers: Mapping[str, Tuple[Sieve, ...]]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "covers", MappingProxyType(
            {c: tuple(self.covers.get(c, ())) for c in self.base.objects}))

    def covering(self, c: str) -> Tuple[Sieve, ...]:
        return self.covers[c]

    def is_covering(self, S: Sieve) -> bool:
        return S in self.covers[S.on]


def trivial_topology(C: FinCategory) -> GrothendieckTopology:
    return GrothendieckTopology(C, {c: (maximal_sieve(C, c),) for c in C.objects}, name="trivial")


def opens_category(opens: Mapping[str, Iterable[str]], name: str = "opens") -> FinCategory:
    """Poset of opens ordered by inclusion."""
    sets = {k: frozenset(v) for k, v in opens.items()}
    names = sorted(sets)
    leq = [(u, v) for u in names for v in names if u != v and sets[u] <= sets[v]]
    return FinCategory.poset(name, names, leq)


def open_cover_topology(C: FinCategory, opens: Mapping[str, Iterable[str]]) -> GrothendieckTopology:
    """A sieve on U covers when the opens it contains have union U."""
    sets = {k: frozenset(v) for k, v in opens.items()}
    covers = {}
    for c in C.objects:
        covers[c] = tuple(
            S for S in sieves_on(C, c)
            if frozenset().union(*(sets[C.src(f)] for f in S.arrows)) == sets[c]
        )
    return GrothendieckTopology(C, covers, name="open covers")


def check_topology(J: GrothendieckTopology) -> Report:
    C = J.base
    report = Report(f"topology {J.name}")
    all_sieves = {c: sieves_on(C, c) for c in C.objects}
    for c in C.objects:
        for S in J.covering(c):
            if S.on != c or not _closed(C, S.arrows):
                report.add("sieve", f"{S.atom} is not a sieve on {c}", object=c, sieve=S.atom)
    if not report.ok:
        return report
    for c in C.objects:
        if maximal_sieve(C, c) not in J.covering(c):
            report.add("maximal", f"maximal sieve on {c} does not cover", object=c)
    for c in C.objects:
        for S in J.covering(c):
            for h in C.arrows_into(c):
                pulled = sieve_pullback(C, h, S)
                if not J.is_covering(pulled):
                    report.add("stability", f"pullback of {S.atom} along {h} does not cover",
                               object=c, sieve=S.atom, arrow=h)
    for c in C.objects:
        for S in J.covering(c):
            for R in all_sieves[c]:
                if J.is_covering(R):
                    continue
                if all(J.is_covering(sieve_pullback(C, h, R)) for h in S.arrows):
                    report.add("transitivity",
                               f"{R.atom} is locally covering along {S.atom} but does not cover",
                               object=c, sieve=S.atom, local=R.atom)
    return report


def matching_families(F: Presheaf, S: Sieve, limit: Optional[int] = None) -> List[Dict[str, str]]:
    C = F.base
    arrows = sorted(S.arrows)
    cap = enum_limit(limit)
    raw = prod(len(F.at(C.src(f))) for f in arrows)
    if raw > cap:
        raise SizeLimit(f"matching families on {S.atom}", raw, cap)
    found: List[Dict[str, str]] = []
    chosen: Dict[str, str] = {}

    def compatible(f: str) -> bool:
        for k, xk in chosen.items():
            for g in C.arrows_into(C.src(k)):
                kg = C.compose(k, g)
                if f in (k, kg) and kg in chosen and F.act(g, xk) != chosen[kg]:
                    return False
        return True

    def extend(i: int) -> None:
        if i == len(arrows):
            found.append(dict(chosen))
            return
        f = arrows[i]
        for x in F.at(C.src(f)):
            chosen[f] = x
            if compatible(f):
                extend(i + 1)
            del chosen[f]

    extend(0)
    return found


def amalgamations(F: Presheaf, S: Sieve, family: Mapping[str, str]) -> List[str]:
    return [a for a in F.at(S.on) if all(F.act(f, a) == x for f, x in family.items())]


def is_sheaf(F: Presheaf, J: GrothendieckTopology, limit: Optional[int] = None) -> Report:
    """Every matching family on every covering sieve has exactly one amalgamation."""
    report = Report(f"sheaf condition for {F.name} under {J.name}")
    for c in F.base.objects:
        for S in J.covering(c):
            for family in matching_families(F, S, limit=limit):
                glued = amalgamations(F, S, family)
                if len(glued) != 1:
                    kind = "no amalgamation" if not glued else "several amalgamations"
                    report.add("sheaf", f"{kind} for a matching family on {S.atom} at {c}",
                               object=c, sieve=S.atom, family=dict(family),
                               amalgamations=glued)
                    return report
    return report

"""Finite categories, set-valued diagrams, cones and their limits.

Composition tables are keyed by ``(g, f)`` and hold the name of ``g.f``
(g after f); they are defined exactly on the composable pairs.
"""
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from math import prod
from types import MappingProxyType
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from src.config import enum_limit, get_settings
from src.encoding import encode_tuple, tag
from src.errors import (
    DomainMismatch,
    InvalidShape,
    NoFactorization,
    NotACone,
    SizeLimit,
    UnknownObject,
)
from src.finset import FinFunction, FinSet, compose, equalizer, quotient, tuple_product

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """One failed axiom, with the objects that witness the failure."""

    axiom: str
    detail: str
    witness: Mapping[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        return {"axiom": self.axiom, "detail": self.detail, "witness": dict(self.witness)}


@dataclass
class Report:
    subject: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, axiom: str, detail: str, **witness: Any) -> None:
        self.violations.append(Violation(axiom, detail, witness))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "subject": self.subject,
            "ok": self.ok,
            "violations": [v.as_dict() for v in self.violations],
        }


@dataclass(frozen=True)
class Arrow:
    name: str
    src: str
    tgt: str


@dataclass(frozen=True, eq=False)
class FinCategory:
    """A finite category with an explicit composition table."""

    name: str
    objects: Tuple[str, ...]
    arrows: Mapping[str, Arrow]
    identities: Mapping[str, str]
    composition: Mapping[Tuple[str, str], str]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "arrows", MappingProxyType(dict(self.arrows)))
        object.__setattr__(self, "identities", MappingProxyType(dict(self.identities)))
        object.__setattr__(self, "composition", MappingProxyType(dict(self.composition)))
        known = set(self.objects)
        for arrow in self.arrows.values():
            if arrow.src not in known or arrow.tgt not in known:
                raise UnknownObject(f"arrow {arrow.name} mentions an unknown object")

    def arrow(self, name: str) -> Arrow:
        try:
            return self.arrows[name]
        except KeyError:
            raise UnknownObject(f"{self.name} has no arrow {name}") from None

    def src(self, name: str) -> str:
        return self.arrow(name).src

    def tgt(self, name: str) -> str:
        return self.arrow(name).tgt

    def identity(self, obj: str) -> str:
        try:
            return self.identities[obj]
        except KeyError:
            raise UnknownObject(f"{self.name} has no object {obj}") from None

    def is_identity(self, name: str) -> bool:
        arrow = self.arrow(name)
        return self.identities.get(arrow.src) == name

    def compose(self, g: str, f: str) -> str:
        """g after f."""
        if self.tgt(f) != self.src(g):
            raise DomainMismatch(f"{g} cannot follow {f} in {self.name}")
        try:
            return self.composition[(g, f)]
        except KeyError:
            raise DomainMismatch(f"{self.name} has no entry for {g}.{f}") from None

    def hom(self, x: str, y: str) -> Tuple[str, ...]:
        return tuple(sorted(a.name for a in self.arrows.values() if a.src == x and a.tgt == y))

    def arrows_into(self, x: str) -> Tuple[str, ...]:
        return tuple(sorted(a.name for a in self.arrows.values() if a.tgt == x))

    def arrows_from(self, x: str) -> Tuple[str, ...]:
        return tuple(sorted(a.name for a in self.arrows.values() if a.src == x))

    def non_identity_arrows(self) -> Tuple[str, ...]:
        return tuple(sorted(n for n in self.arrows if not self.is_identity(n)))

    # -- named shapes -------------------------------------------------------

    @classmethod
    def build(cls, name: str, objects: Sequence[str],
              arrows: Iterable[Tuple[str, str, str]],
              composition: Mapping[Tuple[str, str], str] = (),
              identity_names: Optional[Mapping[str, str]] = None) -> "FinCategory":
        """Add identities and their composites to a table of non-identity arrows."""
        identity_names = dict(identity_names or {})
        ids = {x: identity_names.get(x, f"id_{x}") for x in objects}
        table: Dict[str, Arrow] = {n: Arrow(n, x, x) for x, n in ids.items()}
        for n, s, t in arrows:
            table[n] = Arrow(n, s, t)
        comp = dict(composition)
        for a in table.values():
            comp[(ids[a.tgt], a.name)] = a.name
            comp[(a.name, ids[a.src])] = a.name
        return cls(name, tuple(objects), table, ids, comp)

    @classmethod
    def discrete(cls, objects: Sequence[str], name: str = "discrete") -> "FinCategory":
        return cls.build(name, objects, [])

    @classmethod
    def empty(cls) -> "FinCategory":
        return cls.build("empty", [], [])

    @classmethod
    def interval(cls) -> "FinCategory":
        """The arrow category's index ``a --u--> b``."""
        return cls.build("2", ["a", "b"], [("u", "a", "b")])

    @classmethod
    def cospan(cls) -> "FinCategory":
        """Pullback shape ``x --f--> z <--g-- y``."""
        return cls.build("cospan", ["x", "y", "z"], [("f", "x", "z"), ("g", "y", "z")])

    @classmethod
    def span(cls) -> "FinCategory":
        """Pushout shape ``x <--f-- z --g--> y``."""
        return cls.build("span", ["z", "x", "y"], [("f", "z", "x"), ("g", "z", "y")])

    @classmethod
    def parallel_pair(cls) -> "FinCategory":
        return cls.build("pair", ["s", "t"], [("f", "s", "t"), ("g", "s", "t")])

    @classmethod
    def free(cls, name: str, objects: Sequence[str],
             edges: Sequence[Tuple[str, str, str]]) -> "FinCategory":
        """Free category on an acyclic graph; composite paths are named ``g.f``."""
        out: Dict[str, List[Tuple[str, str]]] = {x: [] for x in objects}
        for e, s, t in edges:
            if s not in out or t not in out:
                raise UnknownObject(f"edge {e} mentions an unknown object")
            out[s].append((e, t))
        # each path is a tuple of edges, first edge first
        paths: Dict[Tuple[str, ...], Tuple[str, str]] = {}
        frontier = [((e,), s, t) for e, s, t in edges]
        while frontier:
            nxt = []
            for path, s, t in frontier:
                if len(path) > len(edges):
                    raise InvalidShape(f"{name}: the graph has a cycle, so its free category is infinite")
                paths[path] = (s, t)
                for e, t2 in out[t]:
                    nxt.append((path + (e,), s, t2))
            frontier = nxt

        def label(path: Tuple[str, ...]) -> str:
            return ".".join(reversed(path))

        arrows = [(label(p), s, t) for p, (s, t) in paths.items()]
        composition = {}
        for p1 in paths:
            for p2 in paths:
                if paths[p1][1] == paths[p2][0]:
                    composition[(label(p2), label(p1))] = label(p1 + p2)
        return cls.build(name, objects, arrows, composition)

    @classmethod
    def poset(cls, name: str, elements: Sequence[str],
              leq: Iterable[Tuple[str, str]]) -> "FinCategory":
        """Preorder category: one arrow ``x<=y`` for each related pair."""
        rel = {(x, x) for x in elements} | set(leq)
        changed = True
        while changed:
            changed = False
            for (x, y), (y2, z) in itertools.product(list(rel), list(rel)):
                if y == y2 and (x, z) not in rel:
                    rel.add((x, z))
                    changed = True

        def label(x: str, y: str) -> str:
            return f"{x}<={y}"

        arrows = [(label(x, y), x, y) for x, y in sorted(rel) if x != y]
        composition = {}
        for x, y in rel:
            for y2, z in rel:
                if y == y2:
                    composition[(label(y, z) if y != z else f"id_{y}",
                                 label(x, y) if x != y else f"id_{x}")] = (
                        label(x, z) if x != z else f"id_{x}")
        return cls.build(name, elements, arrows, composition)


def validate_category(C: FinCategory) -> Report:
    report = Report(f"category {C.name}")
    for x in C.objects:
        ident = C.identities.get(x)
        if ident is None or ident not in C.arrows:
            report.add("identity", f"object {x} has no identity arrow", object=x)
            continue
        a = C.arrows[ident]
        if a.src != x or a.tgt != x:
            report.add("identity", f"{ident} is not an endo-arrow of {x}", object=x)
    if not report.ok:
        return report

    for f in C.arrows.values():
        for g in C.arrows.values():
            key = (g.name, f.name)
            if f.tgt != g.src:
                if key in C.composition:
                    report.add("closure", f"entry for non-composable pair {g.name}.{f.name}",
                               g=g.name, f=f.name)
                continue
            h = C.composition.get(key)
            if h is None:
                report.add("closure", f"missing entry for {g.name}.{f.name}", g=g.name, f=f.name)
            elif h not in C.arrows or C.arrows[h].src != f.src or C.arrows[h].tgt != g.tgt:
                report.add("closure", f"{g.name}.{f.name} = {h} has the wrong endpoints",
                           g=g.name, f=f.name)
    if not report.ok:
        return report

    for f in C.arrows.values():
        if C.composition[(C.identities[f.tgt], f.name)] != f.name:
            report.add("identity", f"left identity fails on {f.name}", f=f.name)
        if C.composition[(f.name, C.identities[f.src])] != f.name:
            report.add("identity", f"right identity fails on {f.name}", f=f.name)

    for f in C.arrows.values():
        for g in (C.arrows[n] for n in C.arrows_from(f.tgt)):
            for h in (C.arrows[n] for n in C.arrows_from(g.tgt)):
                left = C.composition[(h.name, C.composition[(g.name, f.name)])]
                right = C.composition[(C.composition[(h.name, g.name)], f.name)]
                if left != right:
                    report.add("associativity",
                               f"({h.name}.{g.name}).{f.name} != {h.name}.({g.name}.{f.name})",
                               f=f.name, g=g.name, h=h.name)
    return report


@dataclass(frozen=True, eq=False)
class SetDiagram:
    """A functor from a finite shape into finite sets."""

    shape: FinCategory
    objects: Mapping[str, FinSet]
    arrows: Mapping[str, FinFunction]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objects", MappingProxyType(dict(self.objects)))
        object.__setattr__(self, "arrows", MappingProxyType(dict(self.arrows)))
        missing = [j for j in self.shape.objects if j not in self.objects]
        if missing:
            raise UnknownObject(f"diagram {self.name} has no set for {missing}")

    def at(self, j: str) -> FinSet:
        return self.objects[j]

    def fmap(self, a: str) -> FinFunction:
        if a in self.arrows:
            return self.arrows[a]
        arrow = self.shape.arrow(a)
        if self.shape.is_identity(a):
            return FinFunction.identity(self.objects[arrow.src])
        raise UnknownObject(f"diagram {self.name} does not map arrow {a}")


def constant_diagram(shape: FinCategory, s: FinSet) -> SetDiagram:
    return SetDiagram(shape, {j: s for j in shape.objects},
                      {a: FinFunction.identity(s) for a in shape.arrows}, name=f"const({s.name})")


def validate_diagram(D: SetDiagram) -> Report:
    shape_report = validate_category(D.shape)
    if not shape_report.ok:
        raise InvalidShape(f"shape {D.shape.name} is not a category: "
                           + "; ".join(v.detail for v in shape_report.violations))
    report = Report(f"diagram {D.name}")
    for a in D.shape.arrows.values():
        try:
            fa = D.fmap(a.name)
        except UnknownObject as exc:
            report.add("functoriality", str(exc), arrow=a.name)
            continue
        if fa.dom != D.at(a.src) or fa.cod != D.at(a.tgt):
            report.add("functoriality", f"image of {a.name} has the wrong endpoints", arrow=a.name)
        elif D.shape.is_identity(a.name) and fa != FinFunction.identity(D.at(a.src)):
            report.add("functoriality", f"identity {a.name} is not sent to an identity", arrow=a.name)
    if not report.ok:
        return report
    for (g, f), h in D.shape.composition.items():
        if D.fmap(h) != compose(D.fmap(g), D.fmap(f)):
            report.add("functoriality", f"image of {g}.{f} is not the composite of images",
                       g=g, f=f)
    return report


@dataclass(frozen=True, eq=False)
class NatTransformation:
    source: SetDiagram
    target: SetDiagram
    components: Mapping[str, FinFunction]

    def naturality_violations(self) -> List[str]:
        bad = []
        for a in self.source.shape.arrows.values():
            left = compose(self.target.fmap(a.name), self.components[a.src])
            right = compose(self.components[a.tgt], self.source.fmap(a.name))
            if left != right:
                bad.append(a.name)
        return bad

    @property
    def is_natural(self) -> bool:
        return not self.naturality_violations()


class ConeDirection(str, Enum):
    OVER = "over"
    UNDER = "under"


@dataclass(frozen=True, eq=False)
class Cone:
    """Legs run apex -> D(j) for cones over D and D(j) -> apex for cones under D."""

    diagram: SetDiagram
    apex: FinSet
    legs: Mapping[str, FinFunction]
    direction: ConeDirection = ConeDirection.OVER

    def violations(self) -> List[str]:
        D = self.diagram
        bad = []
        for j in D.shape.objects:
            leg = self.legs.get(j)
            if leg is None:
                bad.append(f"missing leg {j}")
                continue
            ends = (self.apex, D.at(j)) if self.direction is ConeDirection.OVER else (D.at(j), self.apex)
            if (leg.dom, leg.cod) != ends:
                bad.append(f"leg {j} has the wrong endpoints")
        if bad:
            return bad
        for a in D.shape.arrows.values():
            if self.direction is ConeDirection.OVER:
                ok = compose(D.fmap(a.name), self.legs[a.src]) == self.legs[a.tgt]
            else:
                ok = compose(self.legs[a.tgt], D.fmap(a.name)) == self.legs[a.src]
            if not ok:
                bad.append(f"triangle over {a.name} does not commute")
        return bad

    @property
    def is_cone(self) -> bool:
        return not self.violations()

    def as_nat_transformation(self) -> NatTransformation:
        const = constant_diagram(self.diagram.shape, self.apex)
        if self.direction is ConeDirection.OVER:
            return NatTransformation(const, self.diagram, self.legs)
        return NatTransformation(self.diagram, const, self.legs)


def limit(D: SetDiagram, limit: Optional[int] = None) -> Cone:
    """Compatible tuples, one coordinate per shape object in shape order."""
    objs = D.shape.objects
    cap = enum_limit(limit)
    size = prod(len(D.at(j)) for j in objs)
    if size > cap:
        raise SizeLimit(f"limit of {D.name or 'diagram'}", size, cap)
    checks = [(D.fmap(a.name), objs.index(a.src), objs.index(a.tgt))
              for a in D.shape.arrows.values() if not D.shape.is_identity(a.name)]
    tuples: List[Tuple[str, ...]] = []

    def extend(prefix: List[str]) -> None:
        n = len(prefix)
        for fa, i, k in checks:
            if max(i, k) == n - 1 and fa(prefix[i]) != prefix[k]:
                return
        if n == len(objs):
            tuples.append(tuple(prefix))
            return
        for x in D.at(objs[n]):
            prefix.append(x)
            extend(prefix)
            prefix.pop()

    extend([])
    apex = FinSet(f"lim {D.name}".strip(), tuple(encode_tuple(t) for t in tuples))
    legs = {
        j: FinFunction(apex, D.at(j), {encode_tuple(t): t[i] for t in tuples}, name=f"pi_{j}")
        for i, j in enumerate(objs)
    }
    logger.debug("limit of %s has %d elements", D.name, len(apex))
    return Cone(D, apex, legs, ConeDirection.OVER)


def colimit(D: SetDiagram) -> Cone:
    """Object-tagged disjoint union modulo ``x ~ D(f)(x)``."""
    objs = D.shape.objects
    summed = FinSet(f"sum {D.name}".strip(),
                    tuple(tag(j, x) for j in objs for x in D.at(j)))
    pairs = [(tag(a.src, x), tag(a.tgt, D.fmap(a.name)(x)))
             for a in D.shape.arrows.values() for x in D.at(a.src)]
    quot = quotient(summed, pairs, name=f"colim {D.name}".strip())
    legs = {
        j: FinFunction(D.at(j), quot.quotient,
                       {x: quot.quotient_map(tag(j, x)) for x in D.at(j)}, name=f"in_{j}")
        for j in objs
    }
    logger.debug("colimit of %s has %d classes", D.name, len(quot.quotient))
    return Cone(D, quot.quotient, legs, ConeDirection.UNDER)


def _choices(universal: Cone, candidate: Cone) -> Dict[str, List[str]]:
    """For each source element of the mediator, the values that keep every leg factoring."""
    D = universal.diagram
    if universal.direction is ConeDirection.OVER:
        return {
            c: [u for u in universal.apex
                if all(universal.legs[j](u) == candidate.legs[j](c) for j in D.shape.objects)]
            for c in candidate.apex
        }
    choices: Dict[str, List[str]] = {}
    for u in universal.apex:
        forced = {candidate.legs[j](x) for j in D.shape.objects
                  for x in D.at(j) if universal.legs[j](x) == u}
        if len(forced) > 1:
            choices[u] = []
        elif forced:
            choices[u] = list(forced)
        else:
            choices[u] = list(candidate.apex.elements)
    return choices


def _check_pair(universal: Cone, candidate: Cone) -> None:
    if universal.direction is not candidate.direction:
        raise NotACone("cones point in different directions")
    if universal.diagram.shape is not candidate.diagram.shape and (
            universal.diagram.shape.objects != candidate.diagram.shape.objects):
        raise NotACone("cones live over different diagrams")
    for cone in (universal, candidate):
        bad = cone.violations()
        if bad:
            raise NotACone("; ".join(bad))


def count_mediators(universal: Cone, candidate: Cone) -> int:
    _check_pair(universal, candidate)
    return prod(len(v) for v in _choices(universal, candidate).values())


def mediating_morphism(universal: Cone, candidate: Cone) -> FinFunction:
    """The unique k through which ``candidate`` factors."""
    _check_pair(universal, candidate)
    choices = _choices(universal, candidate)
    empty = [x for x, vs in choices.items() if not vs]
    if empty:
        raise NoFactorization(f"no mediator: nothing available for {empty[0]}")
    ambiguous = [x for x, vs in choices.items() if len(vs) > 1]
    if ambiguous:
        raise NoFactorization(f"mediator not unique: {ambiguous[0]} has {len(choices[ambiguous[0]])} choices")
    table = {x: vs[0] for x, vs in choices.items()}
    if universal.direction is ConeDirection.OVER:
        return FinFunction(candidate.apex, universal.apex, table, name="mediator")
    return FinFunction(universal.apex, candidate.apex, table, name="mediator")


def _candidate_apex(n: int) -> FinSet:
    return FinSet(f"T{n}", tuple(f"c{i}" for i in range(n)))


def _over_candidates(D: SetDiagram, bound: int, cap: int) -> Iterator[Cone]:
    compatible = _compatible(D, cap)
    objs = D.shape.objects
    for n in range(bound + 1):
        total = len(compatible) ** n
        if total > cap:
            raise SizeLimit(f"candidate cones of size {n}", total, cap)
        apex = _candidate_apex(n)
        for pick in itertools.product(compatible, repeat=n):
            legs = {j: FinFunction(apex, D.at(j), {f"c{i}": t[k] for i, t in enumerate(pick)})
                    for k, j in enumerate(objs)}
            yield Cone(D, apex, legs, ConeDirection.OVER)


def _compatible(D: SetDiagram, cap: int) -> List[Tuple[str, ...]]:
    lim = limit(D, limit=cap)
    objs = D.shape.objects
    return [tuple(lim.legs[j](t) for j in objs) for t in lim.apex]


def _under_candidates(D: SetDiagram, bound: int, cap: int) -> Iterator[Cone]:
    objs = D.shape.objects
    slots = [(j, x) for j in objs for x in D.at(j)]
    index = {s: i for i, s in enumerate(slots)}
    constraints: List[List[int]] = [[] for _ in slots]
    for a in D.shape.arrows.values():
        for x in D.at(a.src):
            i, k = index[(a.src, x)], index[(a.tgt, D.fmap(a.name)(x))]
            # identities and fixed points of endo-arrows constrain nothing
            if i != k:
                constraints[max(i, k)].append(min(i, k))
    for n in range(bound + 1):
        total = n ** len(slots)
        if total > cap:
            raise SizeLimit(f"candidate cocones of size {n}", total, cap)
        apex = _candidate_apex(n)
        values: List[str] = []

        def assign() -> Iterator[Cone]:
            pos = len(values)
            if pos == len(slots):
                legs = {j: FinFunction(D.at(j), apex,
                                       {x: values[index[(j, x)]] for x in D.at(j)})
                        for j in objs}
                yield Cone(D, apex, legs, ConeDirection.UNDER)
                return
            for v in apex:
                if all(values[other] == v for other in constraints[pos]):
                    values.append(v)
                    yield from assign()
                    values.pop()

        yield from assign()


def is_universal_cone(c: Cone, bound: Optional[int] = None, limit: Optional[int] = None) -> bool:
    """Exhaustively check that every cone with a small apex factors exactly once."""
    if not c.is_cone:
        return False
    bound = get_settings().universality_bound if bound is None else bound
    cap = enum_limit(limit)
    candidates = (_over_candidates if c.direction is ConeDirection.OVER else _under_candidates)
    checked = 0
    for candidate in candidates(c.diagram, bound, cap):
        checked += 1
        if prod(len(v) for v in _choices(c, candidate).values()) != 1:
            logger.debug("cone over %s fails universality after %d candidates", c.diagram.name, checked)
            return False
    logger.debug("cone over %s universal against %d candidates", c.diagram.name, checked)
    return True


def limit_by_equalizer(D: SetDiagram, limit: Optional[int] = None) -> FinSet:
    """Limit as the equalizer of two maps out of the product of all objects."""
    objs = D.shape.objects
    whole, projections = tuple_product([D.at(j) for j in objs], limit=limit)
    arrows = [a for a in D.shape.arrows.values() if not D.shape.is_identity(a.name)]
    targets, _ = tuple_product([D.at(a.tgt) for a in arrows], limit=limit)
    pi = dict(zip(objs, projections))
    direct = FinFunction(whole, targets,
                         {t: encode_tuple([pi[a.tgt](t) for a in arrows]) for t in whole})
    through = FinFunction(whole, targets,
                          {t: encode_tuple([D.fmap(a.name)(pi[a.src](t)) for a in arrows])
                           for t in whole})
    return equalizer(direct, through).subset.as_finset(f"eq {D.name}".strip())

"""Finite sets, total functions, and the (co)limits of the category of sets.

Everything else in the package computes on these values. Elements are atom
strings; derived sets use the encodings in :mod:`src.encoding`.
"""
import itertools
import logging
from dataclasses import dataclass, field
from math import prod
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from src.config import enum_limit
from src.encoding import encode_tuple, tag
from src.errors import (
    CodomainMismatch,
    DomainMismatch,
    NotParallel,
    SizeLimit,
    ValueOutOfDomain,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FinSet:
    """A named finite set of atoms, iterated in a fixed canonical order.

    Two sets are equal when they have the same members; the order only fixes
    iteration and serialization.
    """

    name: str
    elements: Tuple[str, ...]
    _members: FrozenSet[str] = field(init=False, repr=False)

    def __post_init__(self):
        elements = tuple(self.elements)
        members = frozenset(elements)
        if len(members) != len(elements):
            dupes = sorted(a for a in members if elements.count(a) > 1)
            raise ValueOutOfDomain(f"duplicate atoms in {self.name}: {dupes}")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "_members", members)

    @classmethod
    def of(cls, name: str, atoms: Iterable[str]) -> "FinSet":
        """A primitive set: atoms sorted lexicographically."""
        return cls(name, tuple(sorted(set(atoms))))

    @property
    def members(self) -> FrozenSet[str]:
        return self._members

    def __contains__(self, atom: object) -> bool:
        return atom in self._members

    def __iter__(self) -> Iterator[str]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinSet):
            return NotImplemented
        return self._members == other._members

    def __hash__(self) -> int:
        return hash(self._members)

    def renamed(self, name: str) -> "FinSet":
        return FinSet(name, self.elements)


TERMINAL = FinSet("1", ("*",))
EMPTY = FinSet("0", ())
TWO = FinSet("2", ("0", "1"))


@dataclass(frozen=True, eq=False)
class FinFunction:
    """A total function between finite sets, stored as a lookup table."""

    dom: FinSet
    cod: FinSet
    table: Mapping[str, str]
    name: str = ""

    def __post_init__(self):
        table = dict(self.table)
        missing = [x for x in self.dom if x not in table]
        if missing:
            raise DomainMismatch(f"{self.name or 'function'} is not total: missing {missing}")
        extra = [x for x in table if x not in self.dom]
        if extra:
            raise DomainMismatch(f"{self.name or 'function'} maps atoms outside its domain: {extra}")
        outside = sorted({y for y in table.values() if y not in self.cod})
        if outside:
            raise CodomainMismatch(
                f"{self.name or 'function'} has images outside {self.cod.name}: {outside}"
            )
        object.__setattr__(self, "table", MappingProxyType(table))

    def __call__(self, x: str) -> str:
        return self.table[x]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinFunction):
            return NotImplemented
        return (
            self.dom == other.dom
            and self.cod == other.cod
            and dict(self.table) == dict(other.table)
        )

    def __hash__(self) -> int:
        return hash((self.dom, self.cod, frozenset(self.table.items())))

    @property
    def images(self) -> Tuple[str, ...]:
        return tuple(self.table[x] for x in self.dom)

    def image(self) -> FrozenSet[str]:
        return frozenset(self.table.values())

    @classmethod
    def identity(cls, s: FinSet) -> "FinFunction":
        return cls(s, s, {x: x for x in s}, name=f"id_{s.name}")

    @classmethod
    def constant(cls, dom: FinSet, cod: FinSet, value: str) -> "FinFunction":
        return cls(dom, cod, {x: value for x in dom})

    @classmethod
    def from_callable(cls, dom: FinSet, cod: FinSet, fn, name: str = "") -> "FinFunction":
        return cls(dom, cod, {x: fn(x) for x in dom}, name=name)


@dataclass(frozen=True, eq=False)
class SubSet:
    parent: FinSet
    members: FrozenSet[str]

    def __post_init__(self):
        members = frozenset(self.members)
        stray = sorted(members - self.parent.members)
        if stray:
            raise ValueOutOfDomain(f"{stray} are not elements of {self.parent.name}")
        object.__setattr__(self, "members", members)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubSet):
            return NotImplemented
        return self.parent == other.parent and self.members == other.members

    def __hash__(self) -> int:
        return hash((self.parent, self.members))

    def as_finset(self, name: Optional[str] = None) -> FinSet:
        return FinSet(name or f"sub({self.parent.name})",
                      tuple(x for x in self.parent if x in self.members))

    def include(self) -> FinFunction:
        sub = self.as_finset()
        return FinFunction(sub, self.parent, {x: x for x in sub}, name="include")


class MorphismClass(NamedTuple):
    monic: bool
    epic: bool
    iso: bool


class Product(NamedTuple):
    apex: FinSet
    proj1: FinFunction
    proj2: FinFunction


class Coproduct(NamedTuple):
    apex: FinSet
    inj1: FinFunction
    inj2: FinFunction


class Equalizer(NamedTuple):
    subset: SubSet
    include: FinFunction


class Coequalizer(NamedTuple):
    quotient: FinSet
    quotient_map: FinFunction


class Pullback(NamedTuple):
    apex: FinSet
    p1: FinFunction
    p2: FinFunction


class Pushout(NamedTuple):
    apex: FinSet
    i1: FinFunction
    i2: FinFunction


class Exponential(NamedTuple):
    obj: FinSet
    eval: FinFunction
    tables: Mapping[str, Mapping[str, str]]


def compose(g: FinFunction, f: FinFunction) -> FinFunction:
    """g after f."""
    if f.cod != g.dom:
        raise DomainMismatch(
            f"cannot compose: codomain {f.cod.name} of {f.name or 'f'} "
            f"is not the domain {g.dom.name} of {g.name or 'g'}"
        )
    return FinFunction(f.dom, g.cod, {x: g(f(x)) for x in f.dom},
                       name=f"{g.name}.{f.name}" if f.name and g.name else "")


def morphism_class(f: FinFunction) -> MorphismClass:
    monic = len(f.image()) == len(f.dom)
    epic = f.image() == f.cod.members
    return MorphismClass(monic, epic, monic and epic)


def tuple_product(sets: Sequence[FinSet], name: str = "",
                  limit: Optional[int] = None) -> Tuple[FinSet, List[FinFunction]]:
    """n-ary product with tuple atoms; the empty product is ``{()}``."""
    cap = enum_limit(limit)
    size = prod(len(s) for s in sets)
    if size > cap:
        raise SizeLimit("product", size, cap)
    atoms = [encode_tuple(combo) for combo in itertools.product(*(s.elements for s in sets))]
    apex = FinSet(name or " x ".join(s.name for s in sets) or "1", tuple(atoms))
    combos = list(itertools.product(*(s.elements for s in sets)))
    projections = [
        FinFunction(apex, s, {encode_tuple(c): c[i] for c in combos}, name=f"pi{i + 1}")
        for i, s in enumerate(sets)
    ]
    return apex, projections


def product(a: FinSet, b: FinSet, limit: Optional[int] = None) -> Product:
    apex, (p1, p2) = tuple_product([a, b], name=f"{a.name} x {b.name}", limit=limit)
    return Product(apex, p1, p2)


def coproduct(a: FinSet, b: FinSet) -> Coproduct:
    apex = FinSet(f"{a.name} + {b.name}",
                  tuple(tag("L", x) for x in a) + tuple(tag("R", y) for y in b))
    inj1 = FinFunction(a, apex, {x: tag("L", x) for x in a}, name="inj1")
    inj2 = FinFunction(b, apex, {y: tag("R", y) for y in b}, name="inj2")
    return Coproduct(apex, inj1, inj2)


def _check_parallel(f: FinFunction, g: FinFunction) -> None:
    if f.dom != g.dom or f.cod != g.cod:
        raise NotParallel(f"{f.name or 'f'} and {g.name or 'g'} are not parallel")


def equalizer(f: FinFunction, g: FinFunction) -> Equalizer:
    _check_parallel(f, g)
    sub = SubSet(f.dom, frozenset(x for x in f.dom if f(x) == g(x)))
    return Equalizer(sub, sub.include())


def quotient_classes(elements: Sequence[str],
                     pairs: Iterable[Tuple[str, str]]) -> Dict[str, str]:
    """Union-find: map each element to the minimal atom of its class."""
    parent = {x: x for x in elements}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in pairs:
        rx, ry = find(x), find(y)
        if rx != ry:
            lo, hi = sorted((rx, ry))
            parent[hi] = lo
    return {x: find(x) for x in elements}


def quotient(s: FinSet, pairs: Iterable[Tuple[str, str]], name: str = "") -> Coequalizer:
    """Quotient ``s`` by the equivalence generated by ``pairs``; classes are ``q:<min>``."""
    rep = quotient_classes(s.elements, pairs)
    classes = sorted({tag("q", r) for r in rep.values()})
    quot = FinSet(name or f"{s.name}/~", tuple(classes))
    return Coequalizer(quot, FinFunction(s, quot, {x: tag("q", rep[x]) for x in s}, name="quotient"))


def coequalizer(f: FinFunction, g: FinFunction) -> Coequalizer:
    _check_parallel(f, g)
    return quotient(f.cod, ((f(x), g(x)) for x in f.dom))


def pullback(f: FinFunction, g: FinFunction) -> Pullback:
    if f.cod != g.cod:
        raise CodomainMismatch(f"pullback needs a shared codomain, got {f.cod.name} and {g.cod.name}")
    pairs = [(x, y) for x in f.dom for y in g.dom if f(x) == g(y)]
    apex = FinSet(f"{f.dom.name} x_{f.cod.name} {g.dom.name}",
                  tuple(encode_tuple(p) for p in pairs))
    p1 = FinFunction(apex, f.dom, {encode_tuple(p): p[0] for p in pairs}, name="p1")
    p2 = FinFunction(apex, g.dom, {encode_tuple(p): p[1] for p in pairs}, name="p2")
    return Pullback(apex, p1, p2)


def pushout(f: FinFunction, g: FinFunction) -> Pushout:
    if f.dom != g.dom:
        raise DomainMismatch(f"pushout needs a shared domain, got {f.dom.name} and {g.dom.name}")
    summed = coproduct(f.cod, g.cod)
    quot = quotient(summed.apex,
                    ((summed.inj1(f(x)), summed.inj2(g(x))) for x in f.dom),
                    name=f"{f.cod.name} +_{f.dom.name} {g.cod.name}")
    return Pushout(quot.quotient,
                   compose(quot.quotient_map, summed.inj1),
                   compose(quot.quotient_map, summed.inj2))


def encode_function(dom: FinSet, table: Mapping[str, str]) -> str:
    return "[" + ",".join(f"{x}={table[x]}" for x in dom) + "]"


def exponential(a: FinSet, b: FinSet, limit: Optional[int] = None) -> Exponential:
    """B^A with its evaluation map B^A x A -> B."""
    cap = enum_limit(limit)
    size = len(b) ** len(a)
    if size > cap:
        raise SizeLimit(f"exponential {b.name}^{a.name}", size, cap)
    tables: Dict[str, Mapping[str, str]] = {}
    for values in itertools.product(b.elements, repeat=len(a)):
        table = dict(zip(a.elements, values))
        tables[encode_function(a, table)] = table
    obj = FinSet(f"{b.name}^{a.name}", tuple(tables))
    pairs = product(obj, a, limit=limit)
    ev = FinFunction(pairs.apex, b,
                     {encode_tuple((fn, x)): tables[fn][x] for fn in obj for x in a},
                     name="eval")
    logger.debug("exponential %s^%s has %d elements", b.name, a.name, len(obj))
    return Exponential(obj, ev, MappingProxyType(tables))


def curry(h: FinFunction, a: FinSet, b: FinSet, limit: Optional[int] = None) -> FinFunction:
    """Transpose h: A x B -> C into A -> C^B."""
    expo = exponential(b, h.cod, limit=limit)
    return FinFunction(
        a, expo.obj,
        {x: encode_function(b, {y: h(encode_tuple((x, y))) for y in b}) for x in a},
        name=f"curry({h.name})" if h.name else "",
    )


def uncurry(k: FinFunction, b: FinSet, cod: FinSet, limit: Optional[int] = None) -> FinFunction:
    """Transpose k: A -> C^B back into A x B -> C."""
    expo = exponential(b, cod, limit=limit)
    pairs = product(k.dom, b, limit=limit)
    return FinFunction(pairs.apex, cod,
                       {encode_tuple((x, y)): expo.tables[k(x)][y] for x in k.dom for y in b})


def characteristic(s: SubSet) -> FinFunction:
    return FinFunction(s.parent, TWO,
                       {x: "1" if x in s.members else "0" for x in s.parent},
                       name=f"chi({s.parent.name})")


def true_arrow() -> FinFunction:
    return FinFunction(TERMINAL, TWO, {"*": "1"}, name="true")


def hom(a: FinSet, b: FinSet, limit: Optional[int] = None) -> Iterator[FinFunction]:
    """Every function A -> B, in canonical order."""
    cap = enum_limit(limit)
    size = len(b) ** len(a)
    if size > cap:
        raise SizeLimit(f"Hom({a.name}, {b.name})", size, cap)
    for values in itertools.product(b.elements, repeat=len(a)):
        yield FinFunction(a, b, dict(zip(a.elements, values)))


def subsets(s: FinSet) -> Iterator[SubSet]:
    for size in range(len(s) + 1):
        for combo in itertools.combinations(s.elements, size):
            yield SubSet(s, frozenset(combo))

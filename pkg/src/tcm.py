"""Structural causal models as objects of the arrow category of finite sets.

A solved model is a single function from exogenous tuples to endogenous
tuples. Arrows between models are commuting squares ``(h, k)`` and the
interval category ``a --u--> b`` views a model ``f: U -> V`` as the presheaf
with ``at(b) = U``, ``at(a) = V`` and ``restrict(u) = f``.
"""
import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from src.encoding import decode_tuple, encode_tuple, tag
from src.errors import (
    CodomainMismatch,
    CyclicModel,
    DomainMismatch,
    NotMonic,
    UnknownTuple,
    UnknownVariable,
    ValidationError,
    ValueOutOfDomain,
)
from src.fincat import Cone, ConeDirection, FinCategory, SetDiagram
from src.finset import FinFunction, FinSet, compose, morphism_class, pullback, tuple_product
from src.presheaf import (
    Presheaf,
    PresheafMorphism,
    SubPresheaf,
    classify,
    hom_presheaves,
    omega,
    presheaf_product,
    psh_exponential,
)

logger = logging.getLogger(__name__)

INTERVAL = FinCategory.interval()
OMEGA_B = FinSet("Omega(b)", ("0", "1/2", "1"))
OMEGA_A = FinSet("Omega(a)", ("0", "1"))
# restriction of truth values along u
TRUTH_RESTRICTION = FinFunction(OMEGA_B, OMEGA_A, {"0": "0", "1/2": "1", "1": "1"}, name="t")


@dataclass(frozen=True)
class Mechanism:
    """A local function: values of the parents, as a tuple atom, to a value."""

    parents: Tuple[str, ...]
    table: FinFunction


@dataclass(frozen=True, eq=False)
class CausalModel:
    name: str
    exogenous: Tuple[Tuple[str, FinSet], ...]
    endogenous: Tuple[Tuple[str, FinSet], ...]
    mechanisms: Mapping[str, Mechanism]

    def __post_init__(self):
        object.__setattr__(self, "exogenous", tuple(self.exogenous))
        object.__setattr__(self, "endogenous", tuple(self.endogenous))
        object.__setattr__(self, "mechanisms", MappingProxyType(dict(self.mechanisms)))
        names = [v for v, _ in self.exogenous + self.endogenous]
        if len(set(names)) != len(names):
            raise ValidationError(f"model {self.name} declares a variable twice")
        domains = self.domains
        for var, _ in self.endogenous:
            if var not in self.mechanisms:
                raise UnknownVariable(f"endogenous {var} of {self.name} has no mechanism")
        for var, mech in self.mechanisms.items():
            if var not in self.endogenous_names:
                raise UnknownVariable(f"{self.name} has a mechanism for undeclared {var}")
            for p in mech.parents:
                if p not in domains:
                    raise UnknownVariable(f"parent {p} of {var} is not declared")
                if p == var:
                    raise CyclicModel([var, var])
            expected, _ = tuple_product([domains[p] for p in mech.parents])
            if mech.table.dom != expected:
                raise DomainMismatch(f"mechanism for {var} is not tabulated on its parent tuples")
            if mech.table.cod != domains[var]:
                raise DomainMismatch(f"mechanism for {var} does not land in its domain")

    @property
    def domains(self) -> Dict[str, FinSet]:
        return dict(self.exogenous + self.endogenous)

    @property
    def exogenous_names(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.exogenous)

    @property
    def endogenous_names(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.endogenous)

    def u_tuples(self) -> FinSet:
        return tuple_product([d for _, d in self.exogenous], name=f"U[{self.name}]")[0]

    def v_tuples(self) -> FinSet:
        return tuple_product([d for _, d in self.endogenous], name=f"V[{self.name}]")[0]

    @classmethod
    def from_rules(cls, name: str, exogenous: Mapping[str, Sequence[str]],
                   endogenous: Mapping[str, Sequence[str]],
                   rules: Mapping[str, Tuple[Sequence[str], Callable[..., str]]]) -> "CausalModel":
        """Tabulate each mechanism from a Python callable over its parents' values."""
        exo = tuple((v, FinSet.of(v, d)) for v, d in exogenous.items())
        endo = tuple((v, FinSet.of(v, d)) for v, d in endogenous.items())
        domains = dict(exo + endo)
        mechanisms = {}
        for var, (parents, fn) in rules.items():
            parents = tuple(parents)
            dom, _ = tuple_product([domains[p] for p in parents])
            mechanisms[var] = Mechanism(parents, FinFunction(
                dom, domains[var], {t: fn(*decode_tuple(t)) for t in dom}, name=f"f_{var}"))
        return cls(name, exo, endo, mechanisms)


@dataclass(frozen=True, eq=False)
class TcmObject:
    """A causal model together with its solved global function U -> V."""

    model: Optional[CausalModel]
    global_map: FinFunction

    @property
    def u(self) -> FinSet:
        return self.global_map.dom

    @property
    def v(self) -> FinSet:
        return self.global_map.cod

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TcmObject):
            return NotImplemented
        return self.global_map == other.global_map

    def __hash__(self) -> int:
        return hash(self.global_map)

    def corestrict(self) -> "TcmObject":
        """The same model with V cut down to the tuples it actually solves to."""
        image = FinSet(f"im {self.v.name}", tuple(y for y in self.v if y in self.global_map.image()))
        return TcmObject(self.model, FinFunction(self.u, image, dict(self.global_map.table)))

    def as_presheaf(self) -> Presheaf:
        return Presheaf(INTERVAL, {"b": self.u, "a": self.v}, {"u": self.global_map},
                        name=self.model.name if self.model else "tcm")

    @classmethod
    def from_presheaf(cls, P: Presheaf, model: Optional[CausalModel] = None) -> "TcmObject":
        if P.base.objects != INTERVAL.objects:
            raise DomainMismatch(f"{P.name} is not a presheaf on the interval category")
        return cls(model, P.restrict("u"))


@dataclass(frozen=True, eq=False)
class TcmSquare:
    """An arrow of the arrow category: ``k . src.global = dst.global . h``."""

    src: TcmObject
    dst: TcmObject
    h: FinFunction
    k: FinFunction

    def __post_init__(self):
        if self.h.dom != self.src.u or self.h.cod != self.dst.u:
            raise DomainMismatch("h does not run between the exogenous sides")
        if self.k.dom != self.src.v or self.k.cod != self.dst.v:
            raise DomainMismatch("k does not run between the endogenous sides")
        if compose(self.k, self.src.global_map) != compose(self.dst.global_map, self.h):
            raise ValidationError("square does not commute")

    def as_morphism(self) -> PresheafMorphism:
        return PresheafMorphism(self.src.as_presheaf(), self.dst.as_presheaf(),
                                {"b": self.h, "a": self.k})

    @classmethod
    def identity(cls, T: TcmObject) -> "TcmSquare":
        return cls(T, T, FinFunction.identity(T.u), FinFunction.identity(T.v))


@dataclass(frozen=True)
class Intervention:
    """do(X=x): sorted (variable, value) pairs."""

    assignments: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(sorted(self.assignments)))
        targets = [v for v, _ in self.assignments]
        if len(set(targets)) != len(targets):
            raise ValidationError(f"intervention assigns a variable twice: {targets}")

    @classmethod
    def of(cls, mapping: Optional[Mapping[str, str]] = None, **values: str) -> "Intervention":
        merged = dict(mapping or {})
        merged.update(values)
        return cls(tuple(merged.items()))

    @property
    def targets(self) -> FrozenSet[str]:
        return frozenset(v for v, _ in self.assignments)

    @property
    def values(self) -> Dict[str, str]:
        return dict(self.assignments)

    @property
    def label(self) -> str:
        if not self.assignments:
            return ""
        return "do:" + "&".join(f"{v}={x}" for v, x in self.assignments)

    def __bool__(self) -> bool:
        return bool(self.assignments)

    def union(self, other: "Intervention") -> "Intervention":
        return Intervention.of({**self.values, **other.values})


def _find_cycle(deps: Mapping[str, Sequence[str]], remaining: Sequence[str]) -> List[str]:
    left = set(remaining)
    start = sorted(left)[0]
    path: List[str] = []
    seen: Dict[str, int] = {}
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = sorted(p for p in deps[node] if p in left)[0]
    return path[seen[node]:] + [node]


def topological_order(model: CausalModel) -> List[str]:
    """Kahn's algorithm over the endogenous graph, ready set kept sorted."""
    endo = set(model.endogenous_names)
    deps = {v: [p for p in model.mechanisms[v].parents if p in endo] for v in endo}
    pending = {v: len(set(ps)) for v, ps in deps.items()}
    children: Dict[str, List[str]] = {v: [] for v in endo}
    for v, ps in deps.items():
        for p in set(ps):
            children[p].append(v)
    ready = sorted(v for v, n in pending.items() if n == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for child in children[v]:
            pending[child] -= 1
            if pending[child] == 0:
                ready.append(child)
        ready.sort()
    if len(order) != len(endo):
        raise CyclicModel(_find_cycle(deps, [v for v in endo if v not in order]))
    return order


def evaluate(model: CausalModel, exogenous: Mapping[str, str],
             order: Optional[Sequence[str]] = None) -> Dict[str, str]:
    values = dict(exogenous)
    for var in order or topological_order(model):
        mech = model.mechanisms[var]
        values[var] = mech.table(encode_tuple([values[p] for p in mech.parents]))
    return values


def solve(model: CausalModel, order: Optional[Sequence[str]] = None) -> TcmObject:
    if order is None:
        order = topological_order(model)
    else:
        order = list(order)
        if sorted(order) != sorted(model.endogenous_names):
            raise UnknownVariable(f"order {order} is not a permutation of the endogenous variables")
        placed = set()
        for var in order:
            late = [p for p in model.mechanisms[var].parents
                    if p in model.endogenous_names and p not in placed]
            if late:
                raise ValidationError(f"{var} is evaluated before its parents {late}")
            placed.add(var)
    U, V = model.u_tuples(), model.v_tuples()
    exo = model.exogenous_names
    table = {}
    for u in U:
        values = evaluate(model, dict(zip(exo, decode_tuple(u))), order)
        table[u] = encode_tuple([values[v] for v in model.endogenous_names])
    logger.debug("solved %s over %d exogenous tuples", model.name, len(U))
    return TcmObject(model, FinFunction(U, V, table, name=f"F[{model.name}]"))


def check_intervention(model: CausalModel, intervention: Intervention) -> None:
    domains = model.domains
    for var, value in intervention.assignments:
        if var not in model.endogenous_names:
            raise UnknownVariable(f"{var} is not an endogenous variable of {model.name}")
        if value not in domains[var]:
            raise ValueOutOfDomain(f"{value} is not in the domain of {var}")


def submodel(model: CausalModel, intervention: Intervention) -> CausalModel:
    """The model with each target's mechanism replaced by its constant."""
    check_intervention(model, intervention)
    mechanisms = dict(model.mechanisms)
    unit, _ = tuple_product([])
    for var, value in intervention.assignments:
        mechanisms[var] = Mechanism((), FinFunction.constant(unit, model.domains[var], value))
    name = f"{model.name}[{intervention.label}]" if intervention else model.name
    return CausalModel(name, model.exogenous, model.endogenous, mechanisms)


def _require_model(M: TcmObject) -> CausalModel:
    if M.model is None:
        raise UnknownVariable("this object carries no causal model to intervene on")
    return M.model


def regime_ambient(M: TcmObject, regimes: Sequence[Intervention]) -> TcmObject:
    """One copy of the exogenous tuples per regime, each solved under that regime.

    Observational tuples keep their atoms; tuples of another regime are tagged
    with its label.
    """
    model = _require_model(M)
    U = M.u
    atoms, table = [], {}
    for regime in regimes:
        solved = solve(submodel(model, regime)) if regime else M
        for u in U:
            atom = tag(regime.label, u) if regime else u
            if atom not in table:
                atoms.append(atom)
                table[atom] = solved.global_map(u)
    ambient_u = FinSet(f"U[{model.name}|regimes]", tuple(atoms))
    V = model.v_tuples()
    return TcmObject(model, FinFunction(ambient_u, V, table, name=f"F[{model.name}|regimes]"))


def intervene(M: TcmObject, intervention: Intervention) -> Tuple[TcmObject, TcmSquare]:
    """Return M_x and the monic square embedding it into M's regime ambient."""
    model = _require_model(M)
    check_intervention(model, intervention)
    mx = solve(submodel(model, intervention))
    regimes = [Intervention()] + ([intervention] if intervention else [])
    ambient = regime_ambient(M, regimes)
    src = mx.corestrict()
    h = FinFunction(src.u, ambient.u,
                    {u: tag(intervention.label, u) if intervention else u for u in src.u}, name="h")
    k = FinFunction(src.v, ambient.v, {y: y for y in src.v}, name="k")
    logger.debug("intervened %s with %s", model.name, intervention.label or "nothing")
    return mx, TcmSquare(src, ambient, h, k)


def potential_outcome(M: TcmObject, Y: str, intervention: Intervention, u: str) -> str:
    """Y_x(u): the value of Y solved under do(X=x) at exogenous tuple u."""
    model = _require_model(M)
    if Y not in model.endogenous_names:
        raise UnknownVariable(f"{Y} is not an endogenous variable of {model.name}")
    check_intervention(model, intervention)
    if u not in M.u:
        raise UnknownTuple(f"{u} is not an exogenous tuple of {model.name}")
    mx = solve(submodel(model, intervention)) if intervention else M
    return decode_tuple(mx.global_map(u))[model.endogenous_names.index(Y)]


class SubmodelClassification(NamedTuple):
    psi: FinFunction
    chi: FinFunction


def submodel_subobject(square: TcmSquare) -> SubPresheaf:
    for name, fn in (("h", square.h), ("k", square.k)):
        if not morphism_class(fn).monic:
            raise NotMonic(f"{name} is not injective, so the square is not a subobject")
    return SubPresheaf(square.dst.as_presheaf(), {"b": square.h.image(), "a": square.k.image()})


def classify_submodel(square: TcmSquare) -> SubmodelClassification:
    sub = submodel_subobject(square)
    classifier = omega(INTERVAL)
    chi_nat = classify(sub, classifier)
    dst = square.dst
    psi = FinFunction(dst.u, OMEGA_B,
                      {x: classifier.alias("b", chi_nat("b", x)) for x in dst.u}, name="psi")
    chi = FinFunction(dst.v, OMEGA_A,
                      {y: classifier.alias("a", chi_nat("a", y)) for y in dst.v}, name="chi")
    return SubmodelClassification(psi, chi)


def recover_submodel(psi: FinFunction, chi: FinFunction) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """Pull the true point back along (psi, chi)."""
    return (frozenset(x for x in psi.dom if psi(x) == "1"),
            frozenset(y for y in chi.dom if chi(y) == "1"))


def tcm_pullback(sq1: TcmSquare, sq2: TcmSquare) -> Tuple[TcmObject, TcmSquare, TcmSquare]:
    if sq1.dst != sq2.dst:
        raise CodomainMismatch("squares do not share a codomain object")
    P = pullback(sq1.h, sq2.h)
    Q = pullback(sq1.k, sq2.k)
    g1, g2 = sq1.src.global_map, sq2.src.global_map
    table = {}
    for t in P.apex:
        x, y = decode_tuple(t)
        table[t] = encode_tuple((g1(x), g2(y)))
    obj = TcmObject(None, FinFunction(P.apex, Q.apex, table, name="F[pullback]"))
    return obj, TcmSquare(obj, sq1.src, P.p1, Q.p1), TcmSquare(obj, sq2.src, P.p2, Q.p2)


def pullback_cones(sq1: TcmSquare, sq2: TcmSquare) -> Tuple[Cone, Cone]:
    """The exogenous-side and endogenous-side pullbacks as cones over the cospan shape."""
    obj, left, right = tcm_pullback(sq1, sq2)
    shape = FinCategory.cospan()
    cones = []
    for side in ("u", "v"):
        def pick(sq: TcmSquare, side=side) -> FinFunction:
            return sq.h if side == "u" else sq.k

        D = SetDiagram(shape,
                       {"x": getattr(sq1.src, side), "y": getattr(sq2.src, side),
                        "z": getattr(sq1.dst, side)},
                       {"f": pick(sq1), "g": pick(sq2)}, name=f"{side}-side")
        apex = getattr(obj, side)
        legs = {"x": pick(left), "y": pick(right), "z": compose(pick(sq1), pick(left))}
        cones.append(Cone(D, apex, legs, ConeDirection.OVER))
    return cones[0], cones[1]


def tcm_exponential(f: TcmObject, g: TcmObject, limit: Optional[int] = None) -> TcmObject:
    """g^f: commuting squares f -> g over all functions V -> V'."""
    expo = psh_exponential(f.as_presheaf(), g.as_presheaf(), limit=limit)
    return TcmObject.from_presheaf(expo.presheaf)


def tcm_product(e: TcmObject, f: TcmObject) -> TcmObject:
    P, _ = presheaf_product([e.as_presheaf(), f.as_presheaf()])
    return TcmObject.from_presheaf(P)


def hom_tcm(f: TcmObject, g: TcmObject, limit: Optional[int] = None) -> List[TcmSquare]:
    return [TcmSquare(f, g, m.components["b"], m.components["a"])
            for m in hom_presheaves(f.as_presheaf(), g.as_presheaf(), limit=limit)]

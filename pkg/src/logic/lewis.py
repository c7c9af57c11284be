"""Lewis's would-counterfactual over neighborhood systems.

Formulas here are propositional: atoms are Omega-typed variables whose truth
sets come from the system's valuation, connectives are read classically at
each world, and ``(boxright a b)`` is evaluated by scanning neighborhoods.
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

from src.encoding import decode_tuple, tag
from src.errors import TypeMismatch, UnknownVariable, UnknownWorld, ValueOutOfDomain
from src.finset import FinSet
from src.logic import terms as t
from src.tcm import Intervention, TcmObject, check_intervention, potential_outcome

logger = logging.getLogger(__name__)

OBSERVATIONAL = "obs"


@dataclass(frozen=True, eq=False)
class NeighborhoodSystem:
    worlds: FinSet
    neighborhoods: Mapping[str, Tuple[FrozenSet[str], ...]]
    valuation: Mapping[str, FrozenSet[str]]

    def __post_init__(self):
        members = self.worlds.members
        hoods = {}
        for w, sets in self.neighborhoods.items():
            if w not in members:
                raise UnknownWorld(f"neighborhoods given for unknown world {w}")
            frozen = tuple(frozenset(s) for s in sets)
            for s in frozen:
                if not s <= members:
                    raise ValueOutOfDomain(f"neighborhood of {w} has stray worlds {sorted(s - members)}")
            hoods[w] = frozen
        object.__setattr__(self, "neighborhoods", hoods)
        valuation = {}
        for atom, truth in self.valuation.items():
            truth = frozenset(truth)
            if not truth <= members:
                raise ValueOutOfDomain(f"atom {atom} is true at unknown worlds {sorted(truth - members)}")
            valuation[atom] = truth
        object.__setattr__(self, "valuation", valuation)

    def around(self, w: str) -> Tuple[FrozenSet[str], ...]:
        if w not in self.worlds.members:
            raise UnknownWorld(f"{w} is not a world of this system")
        return self.neighborhoods.get(w, ())

    @classmethod
    def build(cls, worlds: Iterable[str], neighborhoods: Mapping[str, Iterable[Iterable[str]]],
              valuation: Mapping[str, Iterable[str]], name: str = "W") -> "NeighborhoodSystem":
        return cls(FinSet.of(name, worlds),
                   {w: tuple(frozenset(n) for n in ns) for w, ns in neighborhoods.items()},
                   {a: frozenset(ws) for a, ws in valuation.items()})


def satisfies(W: NeighborhoodSystem, w: str, phi: t.Term) -> bool:
    """Classical truth of a propositional formula at world ``w``."""
    if w not in W.worlds.members:
        raise UnknownWorld(f"{w} is not a world of this system")
    if isinstance(phi, t.Var):
        if phi.name not in W.valuation:
            raise UnknownVariable(f"atom {phi.name} has no valuation")
        return w in W.valuation[phi.name]
    if isinstance(phi, t.Top):
        return True
    if isinstance(phi, t.Bottom):
        return False
    if isinstance(phi, t.And):
        return satisfies(W, w, phi.left) and satisfies(W, w, phi.right)
    if isinstance(phi, t.Or):
        return satisfies(W, w, phi.left) or satisfies(W, w, phi.right)
    if isinstance(phi, t.Implies):
        return not satisfies(W, w, phi.left) or satisfies(W, w, phi.right)
    if isinstance(phi, t.Iff):
        return satisfies(W, w, phi.left) == satisfies(W, w, phi.right)
    if isinstance(phi, t.Not):
        return not satisfies(W, w, phi.body)
    if isinstance(phi, t.Counterfactual):
        return lewis_counterfactual(W, w, phi.antecedent, phi.consequent)
    raise TypeMismatch("not a propositional formula", subterm=t.to_sexpr(phi))


def truth_set(W: NeighborhoodSystem, phi: t.Term) -> FrozenSet[str]:
    return frozenset(w for w in W.worlds if satisfies(W, w, phi))


def lewis_counterfactual(W: NeighborhoodSystem, u: str, alpha: t.Term, beta: t.Term) -> bool:
    """``alpha []-> beta`` at ``u``.

    Vacuously true when no world of any neighborhood of ``u`` satisfies alpha.
    Otherwise some neighborhood must contain an alpha-world and satisfy
    ``alpha => beta`` throughout.
    """
    hoods = W.around(u)
    reached = frozenset().union(*hoods) if hoods else frozenset()
    if not any(satisfies(W, w, alpha) for w in reached):
        return True
    for N in sorted(hoods, key=sorted):
        if any(satisfies(W, w, alpha) for w in N) and all(
                not satisfies(W, v, alpha) or satisfies(W, v, beta) for v in N):
            return True
    return False


def _world_index(M: TcmObject, regimes: Sequence[Intervention]) -> Dict[str, Tuple[Intervention, str]]:
    index: Dict[str, Tuple[Intervention, str]] = {}
    for regime in regimes:
        for u in M.u:
            index.setdefault(tag(regime.label, u) if regime else u, (regime, u))
    return index


def intervention_system(M: TcmObject, regimes: Sequence[Intervention]) -> NeighborhoodSystem:
    """Worlds are (regime, exogenous tuple) pairs; each neighborhood fixes the tuple.

    Atoms are ``Y=y`` for every endogenous value, the label ``do:X=x...`` of
    every non-empty regime and ``obs`` for the observational worlds.
    """
    model = M.model
    if model is None:
        raise UnknownVariable("this object carries no causal model")
    for regime in regimes:
        check_intervention(model, regime)
    index = _world_index(M, [Intervention()] + [r for r in regimes if r])
    by_u: Dict[str, List[str]] = {}
    for w, (_, u) in index.items():
        by_u.setdefault(u, []).append(w)
    neighborhoods = {w: (frozenset(by_u[u]),) for w, (_, u) in index.items()}

    valuation: Dict[str, set] = {OBSERVATIONAL: set()}
    for var in model.endogenous_names:
        for value in model.domains[var]:
            valuation[f"{var}={value}"] = set()
    for w, (regime, u) in index.items():
        if regime:
            valuation.setdefault(regime.label, set()).add(w)
        else:
            valuation[OBSERVATIONAL].add(w)
        for var in model.endogenous_names:
            valuation[f"{var}={potential_outcome(M, var, regime, u)}"].add(w)
    logger.debug("neighborhood system for %s: %d worlds", model.name, len(index))
    return NeighborhoodSystem(FinSet(f"W[{model.name}]", tuple(index)), neighborhoods,
                              {a: frozenset(ws) for a, ws in valuation.items()})


def would(M: TcmObject, intervention: Intervention, Y: str, y: str, u: str) -> bool:
    """``do(X=x) []-> Y=y`` at the observational world of ``u``."""
    W = intervention_system(M, [intervention])
    antecedent = t.Var(intervention.label or OBSERVATIONAL, t.OMEGA)
    return lewis_counterfactual(W, u, antecedent, t.Var(f"{Y}={y}", t.OMEGA))


def split_world(world: str) -> Tuple[str, str]:
    """Regime label and exogenous tuple of a world atom."""
    if world.startswith("("):
        return "", world
    label, _, u = world.rpartition(":")
    decode_tuple(u)
    return label, u

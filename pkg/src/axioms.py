"""Exhaustive axiom checks for a named workspace object.

Each check returns a ``Report``; a suite is the list of checks that apply to
the object's kind.
"""
import itertools
import logging
from typing import Callable, Dict, List, Optional

from src.encoding import decode_tuple
from src.errors import UnknownObject
from src.fincat import Report, colimit, is_universal_cone, limit, limit_by_equalizer, validate_category
from src.finset import morphism_class
from src.graphtopos import FinGraph, classify_subgraph, subgraph_of, subgraphs
from src.presheaf import (
    Presheaf,
    check_topology,
    classify,
    hom_presheaves,
    implies,
    meet,
    negate,
    omega,
    power_object,
    subobjects,
    terminal_presheaf,
    true_subobject,
)
from src.tcm import (
    Intervention,
    TcmObject,
    classify_submodel,
    evaluate,
    intervene,
    potential_outcome,
    recover_submodel,
    solve,
    submodel,
)

logger = logging.getLogger(__name__)


# -- presheaves ---------------------------------------------------------------


def classifier_bijection(X: Presheaf, limit: Optional[int] = None) -> Report:
    """|Sub(X)| = |Hom(X, Omega)|, with classify and pullback mutually inverse."""
    report = Report("classifier-bijection")
    om = omega(X.base)
    subs = subobjects(X, limit=limit)
    maps = hom_presheaves(X, om.presheaf, limit=limit)
    if len(subs) != len(maps):
        report.add("classifier-bijection", f"{len(subs)} subobjects but {len(maps)} maps to Omega",
                   subobjects=len(subs), maps=len(maps))
    for S in subs:
        if true_subobject(classify(S, om), om) != S:
            report.add("classifier-bijection", "pulling back the classifying map changes the subobject",
                       members={c: sorted(m) for c, m in S.members.items()})
    for chi in maps:
        if classify(true_subobject(chi, om), om) != chi:
            report.add("classifier-bijection", "a map to Omega is not the classifier of its pullback")
    return report


def heyting_adjunction(X: Presheaf, limit: Optional[int] = None) -> Report:
    """z <= (x => y) iff z meet x <= y, over every triple of subobjects."""
    report = Report("heyting-adjunction")
    subs = subobjects(X, limit=limit)
    for x, y in itertools.product(subs, repeat=2):
        arrow = implies(x, y)
        for z in subs:
            if z.leq(arrow) != meet(z, x).leq(y):
                report.add("heyting-adjunction", "implication is not right adjoint to meet",
                           x={c: sorted(m) for c, m in x.members.items()},
                           y={c: sorted(m) for c, m in y.members.items()},
                           z={c: sorted(m) for c, m in z.members.items()})
                return report
    return report


def double_negation(X: Presheaf, limit: Optional[int] = None) -> Report:
    report = Report("double-negation")
    for A in subobjects(X, limit=limit):
        if not A.leq(negate(negate(A))):
            report.add("double-negation", "A is not below not-not-A",
                       members={c: sorted(m) for c, m in A.members.items()})
    return report


def exponential_count(X: Presheaf, limit: Optional[int] = None) -> Report:
    """Global elements of Omega^X match maps X -> Omega."""
    report = Report("exponential-count")
    power = power_object(X, limit=limit).presheaf
    globals_ = len(hom_presheaves(terminal_presheaf(X.base), power, limit=limit))
    maps = len(hom_presheaves(X, omega(X.base).presheaf, limit=limit))
    if globals_ != maps:
        report.add("exponential-count", f"{globals_} global elements of P{X.name} but {maps} maps to Omega",
                   globals=globals_, maps=maps)
    return report


# -- diagrams -------------------------------------------------------------------


def limit_universality(D, limit_cap: Optional[int] = None) -> Report:
    report = Report("limit-universality")
    cone = limit(D, limit=limit_cap)
    if not is_universal_cone(cone, limit=limit_cap):
        report.add("limit-universality", f"limit cone of {D.name} is not universal")
    by_equalizer = limit_by_equalizer(D, limit=limit_cap)
    if len(by_equalizer) != len(cone.apex):
        report.add("limit-universality", "limit and equalizer-of-products disagree in size",
                   tuples=len(cone.apex), equalizer=len(by_equalizer))
    return report


def colimit_universality(D, limit_cap: Optional[int] = None) -> Report:
    report = Report("colimit-universality")
    if not is_universal_cone(colimit(D), limit=limit_cap):
        report.add("colimit-universality", f"colimit cocone of {D.name} is not universal")
    return report


# -- causal models ------------------------------------------------------------------


def _single_interventions(M: TcmObject) -> List[Intervention]:
    model = M.model
    return [Intervention.of({var: value}) for var in model.endogenous_names
            for value in model.domains[var]]


def potential_outcomes(M: TcmObject) -> Report:
    """Y_x(u) against re-evaluating the mechanisms of the submodel directly."""
    report = Report("potential-outcomes")
    model = M.model
    exo = model.exogenous_names
    for I in [Intervention()] + _single_interventions(M):
        sub = submodel(model, I)
        for u in M.u:
            direct = evaluate(sub, dict(zip(exo, decode_tuple(u))))
            for Y in model.endogenous_names:
                got = potential_outcome(M, Y, I, u)
                if got != direct[Y]:
                    report.add("potential-outcomes", f"{Y} under {I.label or 'no intervention'} at {u}",
                               expected=direct[Y], actual=got)
    return report


def intervention_laws(M: TcmObject) -> Report:
    """Repeating an intervention changes nothing; disjoint ones compose."""
    report = Report("intervention-laws")
    model = M.model
    singles = _single_interventions(M)
    for I in singles:
        once = solve(submodel(model, I))
        twice = solve(submodel(submodel(model, I), I))
        if once != twice:
            report.add("idempotence", f"applying {I.label} twice differs from once")
    for I, J in itertools.combinations(singles, 2):
        if I.targets & J.targets:
            continue
        stepwise = solve(submodel(submodel(model, I), J))
        joint = solve(submodel(model, I.union(J)))
        if stepwise != joint:
            report.add("composition", f"{I.label} then {J.label} differs from the joint intervention")
    return report


def submodel_classification(M: TcmObject) -> Report:
    """Each intervention square is monic and is recovered from its classifying pair."""
    report = Report("submodel-classification")
    for I in [Intervention()] + _single_interventions(M):
        _, square = intervene(M, I)
        if not (morphism_class(square.h).monic and morphism_class(square.k).monic):
            report.add("submodel-classification", f"square for {I.label or 'no intervention'} is not monic")
            continue
        psi, chi = classify_submodel(square)
        if set(psi.images) - {"0", "1/2", "1"} or set(chi.images) - {"0", "1"}:
            report.add("submodel-classification", "classifying maps leave the truth-value sets")
        us, vs = recover_submodel(psi, chi)
        if us != square.h.image() or vs != square.k.image():
            report.add("submodel-classification",
                       f"pullback of the true point misses the submodel for {I.label or 'no intervention'}")
    return report


# -- graphs -------------------------------------------------------------------------


def subgraph_round_trip(G: FinGraph, limit: Optional[int] = None) -> Report:
    report = Report("subgraph-round-trip")
    for S in subgraphs(G, limit=limit):
        if subgraph_of(classify_subgraph(S)) != S:
            report.add("subgraph-round-trip", "classifying and pulling back changes the subgraph",
                       vertices=sorted(S.vertex_members), edges=sorted(S.edge_members))
    return report


# -- suites -------------------------------------------------------------------------

PRESHEAF_CHECKS: Dict[str, Callable[..., Report]] = {
    "classifier-bijection": classifier_bijection,
    "heyting-adjunction": heyting_adjunction,
    "double-negation": double_negation,
    "exponential-count": exponential_count,
}


def run_suite(ws, name: str, limit_cap: Optional[int] = None) -> List[Report]:
    """Every check that applies to the object called ``name``."""
    kind = ws.kind_of(name)
    logger.debug("axiom suite for %s %s", kind, name)
    if kind == "category":
        return [validate_category(ws.category(name))]
    if kind == "diagram":
        D = ws.diagrams[name]
        return [limit_universality(D, limit_cap), colimit_universality(D, limit_cap)]
    if kind == "scm":
        M = ws.model(name)
        return [potential_outcomes(M), intervention_laws(M), submodel_classification(M)]
    if kind == "topology":
        return [check_topology(ws.topologies[name])]
    if kind == "graph":
        X = ws.presheaf(name)
        return ([check(X, limit_cap) for check in PRESHEAF_CHECKS.values()]
                + [subgraph_round_trip(ws.graphs[name], limit_cap)])
    if kind == "presheaf":
        X = ws.presheaf(name)
        return [check(X, limit_cap) for check in PRESHEAF_CHECKS.values()]
    raise UnknownObject(f"no axiom suite for {kind} {name}")

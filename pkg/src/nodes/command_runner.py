import itertools
import logging
import time
from collections import Counter
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from src.axioms import run_suite
from src.config import get_settings
from src.errors import MultipleFreeVars, UnknownCommand, UnknownObject
from src.fincat import Cone, FinCategory, colimit, is_universal_cone, limit
from src.finset import FinFunction
from src.graphtopos import (
    EDGE_LABELS,
    GRAPH_BASE,
    VERTEX_LABELS,
    FinGraph,
    classify_subgraph,
    graph_coproduct,
    graph_product,
    to_dot,
)
from src.logic import terms as t
from src.logic.forcing import ForcingContext, forces, forces_by_clauses
from src.logic.lewis import OBSERVATIONAL, intervention_system, satisfies, split_world, would
from src.logic.semantics import Topos
from src.presheaf import check_topology, classify, is_sheaf, omega
from src.tcm import Intervention, classify_submodel, intervene, potential_outcome, recover_submodel
from src.workspace import Workspace

logger = logging.getLogger(__name__)

Args = Mapping[str, Any]
Result = Dict[str, Any]


def table(fn: FinFunction) -> Dict[str, str]:
    return {x: fn(x) for x in fn.dom}


def cone_result(cone: Cone) -> Result:
    return {
        "direction": cone.direction.value,
        "apex": list(cone.apex),
        "legs": {j: table(leg) for j, leg in cone.legs.items()},
    }


def graph_result(G: FinGraph) -> Result:
    return {
        "vertices": list(G.vertices),
        "edges": [{"name": e, "src": s, "tgt": d} for e, s, d in G.edge_triples()],
    }


def cap(args: Args) -> int:
    return args.get("max_enum") or get_settings().max_enum


# -- commands ----------------------------------------------------------------


def _universal_construction(ws: Workspace, args: Args, kind: str) -> Result:
    if args.get("graphs"):
        names = list(args["graphs"])
        if len(names) != 2:
            raise ValueError(f"{kind} of graphs takes exactly two graph names")
        G, H = (ws.get("graph", n) for n in names)
        P = graph_product(G, H) if kind == "limit" else graph_coproduct(G, H)
        result = {"graphs": names, "graph": graph_result(P)}
        if args.get("dot"):
            result["dot"] = to_dot(P)
        return result
    D = ws.get("diagram", args["diagram"])
    cone = limit(D, limit=cap(args)) if kind == "limit" else colimit(D)
    result = {"diagram": args["diagram"], "cone": cone_result(cone)}
    if args.get("check"):
        result["universal"] = is_universal_cone(cone, limit=cap(args))
    return result


def run_limit(ws: Workspace, args: Args) -> Result:
    return _universal_construction(ws, args, "limit")


def run_colimit(ws: Workspace, args: Args) -> Result:
    return _universal_construction(ws, args, "colimit")


def run_intervene(ws: Workspace, args: Args) -> Result:
    M = ws.model(args["model"])
    I = Intervention.of(args.get("do") or {})
    mx, square = intervene(M, I)
    psi, chi = classify_submodel(square)
    us, vs = recover_submodel(psi, chi)
    return {
        "model": args["model"],
        "intervention": I.label or "none",
        "submodel": {"global_map": table(mx.global_map)},
        "square": {"h": table(square.h), "k": table(square.k)},
        "classification": {"psi": table(psi), "chi": table(chi)},
        "summary": {"U": dict(Counter(psi.images)), "V": dict(Counter(chi.images))},
        "recovered": {"U": sorted(us), "V": sorted(vs)},
    }


def run_outcome(ws: Workspace, args: Args) -> Result:
    M = ws.model(args["model"])
    Y = args["variable"]
    I = Intervention.of(args.get("do") or {})
    us = [args["u"]] if args.get("u") else list(M.u)
    result = {
        "model": args["model"],
        "variable": Y,
        "intervention": I.label or "none",
        "outcomes": {u: potential_outcome(M, Y, I, u) for u in us},
    }
    if args.get("value") is not None:
        result["would"] = {u: would(M, I, Y, args["value"], u) for u in us}
    return result


def _aliases(C: FinCategory) -> Callable[[str, str], str]:
    if C is GRAPH_BASE:
        return lambda c, atom: (VERTEX_LABELS if c == "V" else EDGE_LABELS)[atom]
    om = omega(C)
    return om.alias


def run_classify(ws: Workspace, args: Args) -> Result:
    name = args["subobject"]
    if name in ws.subgraphs:
        S = ws.subgraphs[name]
        chi = classify_subgraph(S)
        result = {"subgraph": name, "vertices": table(chi.vertex_map), "edges": table(chi.edge_map)}
        if args.get("dot"):
            result["dot"] = to_dot(S.parent, chi)
        return result
    S = ws.get("subobject", name)
    C = S.parent.base
    chi = classify(S, omega(C))
    alias = _aliases(C)
    return {
        "subobject": name,
        "classifying_map": {c: {x: alias(c, chi(c, x)) for x in S.parent.at(c)} for c in C.objects},
    }


def run_omega(ws: Workspace, args: Args) -> Result:
    C = ws.category(args.get("base") or "interval")
    om = omega(C)
    alias = _aliases(C)
    P = om.presheaf
    stages = {
        c: {
            "size": len(P.at(c)),
            "values": {atom: alias(c, atom) for atom in P.at(c)},
            "true": alias(c, om.top(c)),
        }
        for c in C.objects
    }
    restrictions = {
        a.name: {alias(a.tgt, s): alias(a.src, P.act(a.name, s)) for s in P.at(a.tgt)}
        for a in C.arrows.values() if not C.is_identity(a.name)
    }
    return {"base": args.get("base") or "interval", "stages": stages, "restrictions": restrictions}


def build_topos(ws: Workspace, base: FinCategory, limit_cap: Optional[int] = None) -> Topos:
    """Every workspace presheaf, morphism, subobject and model on ``base``, by name."""
    topos = Topos(base, limit=limit_cap)
    for name, P in ws.presheaves_on(base).items():
        topos.add_type(name, P)
    for name, m in ws.morphisms.items():
        source, target = ws.morphism_ends[name]
        if source in topos.types and target in topos.types:
            topos.add_arrow(name, m, t.BaseType(source), t.BaseType(target))
    for name, S in ws.subobjects.items():
        parent = ws.subobject_parents[name]
        if parent in topos.types:
            topos.add_predicate(name, S, t.BaseType(parent))
    for name, M in ws.models.items():
        topos.add_model(name, M)
    return topos


def _regimes(term: t.Term) -> List[Intervention]:
    """Interventions named by ``do:X=x&...`` atoms of a propositional formula."""
    found = []
    for name in sorted(t.free_vars(term)):
        if name.startswith("do:"):
            found.append(Intervention.of(dict(part.split("=", 1) for part in name[3:].split("&"))))
    return found


def _force_propositional(ws: Workspace, args: Args, formula) -> Result:
    if args.get("neighborhoods"):
        W = ws.get("neighborhoods", args["neighborhoods"])
    elif args.get("model"):
        W = intervention_system(ws.model(args["model"]), _regimes(formula.term))
    else:
        raise ValueError("propositional formulas need --neighborhoods or --model")
    worlds = [args["world"]] if args.get("world") else list(W.worlds)
    result: Result = {"formula": formula.name,
                      "truth": {w: satisfies(W, w, formula.term) for w in worlds}}
    if args.get("model") and not args.get("neighborhoods"):
        result["worlds"] = {}
        for w in worlds:
            regime, u = split_world(w)
            result["worlds"][w] = {"regime": regime or OBSERVATIONAL, "exogenous": u}
    return result


def _elements(given: Any, free: List[str]) -> Dict[str, str]:
    """``x=alpha`` pairs, or one bare morphism name for a formula with one free variable."""
    if isinstance(given, Mapping):
        return dict(given)
    chosen = {}
    for item in given:
        var, sep, morphism = item.partition("=")
        if not sep:
            if len(free) != 1:
                raise MultipleFreeVars(f"element {item!r} needs a variable name; free variables are {free}")
            var, morphism = free[0], item
        chosen[var] = morphism
    return chosen


def _formula(ws: Workspace, ref: str):
    """A formula by name, or the single formula document in a JSON file."""
    if ref in ws.formulas or not ref.endswith(".json"):
        return ws.formula(ref)
    added = ws.merge_file(ref)
    formulas = [doc.name for doc in added if doc.kind == "formula"]
    if len(formulas) != 1:
        raise UnknownObject(f"{ref} must hold exactly one formula document")
    return ws.formula(formulas[0])


def run_force(ws: Workspace, args: Args) -> Result:
    formula = _formula(ws, args["formula"])
    if formula.propositional or args.get("neighborhoods"):
        return _force_propositional(ws, args, formula)
    stage = ws.presheaf(args["stage"]) if args.get("stage") else None
    if formula.base is not None:
        base = ws.category(formula.base)
    elif stage is not None:
        base = stage.base
    else:
        base = ws.category("interval")
    topos = build_topos(ws, base, cap(args))
    topology = ws.get("topology", args["topology"]) if args.get("topology") else None
    tt = topos.typecheck(formula.term)
    traces = []
    result: Result = {"formula": formula.name, "sexpr": t.to_sexpr(formula.term)}

    def both(ctx: ForcingContext) -> Tuple[bool, bool]:
        direct = forces(topos, ctx, tt)
        by_clauses = forces_by_clauses(topos, ctx, tt, topology=topology,
                                       epi_search=bool(args.get("epi_search")))
        if args.get("trace"):
            traces.append(by_clauses.trace.as_dict())
        return direct, by_clauses.holds

    if stage is not None:
        chosen = _elements(args.get("elements") or [], [n for n, _ in tt.free])
        elements = {var: ws.get("morphism", m) for var, m in chosen.items()}
        direct, by_clauses = both(ForcingContext(stage, elements))
        result.update({"stage": args["stage"], "elements": chosen,
                       "forces": direct, "by_clauses": by_clauses})
    else:
        rows = []
        names = [n for n, _ in tt.free]
        types = [ty for _, ty in tt.free]
        for c in base.objects:
            for values in itertools.product(*(topos.carrier(ty).at(c) for ty in types)):
                ctx = ForcingContext.representable(topos, c, dict(zip(names, zip(types, values))))
                direct, by_clauses = both(ctx)
                rows.append({"stage": f"y({c})", "env": dict(zip(names, values)),
                             "forces": direct, "by_clauses": by_clauses})
        result["stages"] = rows
    if traces:
        result["traces"] = traces
    return result


def run_sheaf_check(ws: Workspace, args: Args) -> Result:
    X = ws.presheaf(args["presheaf"])
    J = ws.get("topology", args["topology"])
    topology = check_topology(J)
    sheaf = is_sheaf(X, J, limit=cap(args))
    return {"presheaf": args["presheaf"], "topology": topology.as_dict(),
            "sheaf": sheaf.as_dict(), "is_sheaf": topology.ok and sheaf.ok}


def run_axiom_check(ws: Workspace, args: Args) -> Result:
    reports = run_suite(ws, args["object"], cap(args))
    return {"object": args["object"], "ok": all(r.ok for r in reports),
            "axioms": [r.as_dict() for r in reports]}


COMMANDS: Dict[str, Callable[[Workspace, Args], Result]] = {
    "limit": run_limit,
    "colimit": run_colimit,
    "intervene": run_intervene,
    "outcome": run_outcome,
    "classify": run_classify,
    "force": run_force,
    "omega": run_omega,
    "sheaf-check": run_sheaf_check,
    "axiom-check": run_axiom_check,
}


class CommandRunnerNode:
    """Node for dispatching a command against the loaded workspace."""

    def __init__(self, commands: Optional[Mapping[str, Callable[[Workspace, Args], Result]]] = None):
        self.commands = dict(commands or COMMANDS)

    async def run(self, state: Dict[str, Any]) -> Tuple[Dict[str, Any], str]:
        """Runs ``state["command"]`` with ``state["args"]``."""
        command = state.get("command")
        try:
            handler = self.commands.get(command)
            if handler is None:
                raise UnknownCommand(f"unknown command {command!r}; expected one of {sorted(self.commands)}")
            workspace = state.get("workspace")
            if workspace is None:
                raise UnknownObject("no workspace loaded")
            started = time.perf_counter()
            result = handler(workspace, state.get("args", {}))
            state["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
            state["traces"] = result.pop("traces", [])
            state["result"] = result
            state["logs"].append(f"Ran {command}")
            return state, "report_writer"

        except Exception as e:
            logger.debug("command %s failed", command, exc_info=True)
            state["errors"].append(f"Command error in {command}: {e}")
            state["logs"].append(f"Error running {command}: {e}")
            state["failure"] = e
            return state, "error_handler"

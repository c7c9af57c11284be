"""JSON documents and the workspace they load into.

Each file holds one document or a list of documents; the ``kind`` field
selects the schema. Documents may refer to each other by name across files.
Loading collects every problem it finds and raises one ``ValidationError``
carrying a report, rather than stopping at the first bad document.
"""
import json
import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import pydantic
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, TypeAdapter

from src.encoding import check_atom
from src.errors import ParseError, ToposError, UnknownObject, ValidationError
from src.fincat import FinCategory, Report, SetDiagram, validate_category, validate_diagram
from src.finset import FinFunction, FinSet, compose, tuple_product
from src.graphtopos import GRAPH_BASE, FinGraph, SubGraph, as_presheaf
from src.logic import terms as t
from src.logic.lewis import NeighborhoodSystem
from src.logic.parser import parse_formula, parse_type
from src.presheaf import (
    GrothendieckTopology,
    Presheaf,
    PresheafMorphism,
    Sieve,
    SubPresheaf,
    check_topology,
    open_cover_topology,
    opens_category,
    trivial_topology,
    validate_presheaf,
)
from src.tcm import INTERVAL, CausalModel, Mechanism, TcmObject, solve

logger = logging.getLogger(__name__)

# element, object and arrow names end up inside tuple and set encodings
Atom = Annotated[str, AfterValidator(check_atom)]


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: Optional[str] = None


class FinSetDoc(_Doc):
    kind: Literal["finset"] = "finset"
    elements: List[Atom]


class FunctionDoc(_Doc):
    kind: Literal["function"] = "function"
    dom: str
    cod: str
    table: Dict[str, str]


class ArrowSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Atom
    src: str
    tgt: str


class CompositeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    g: str
    f: str
    result: str


CategoryPreset = Literal["interval", "graph", "cospan", "span", "pair", "discrete",
                         "free", "poset", "opens"]


class CategoryDoc(_Doc):
    """An explicit category, or one of the named shapes.

    ``free`` reads ``arrows`` as graph edges, ``poset`` reads ``leq`` pairs and
    ``opens`` builds the inclusion order of the given open sets.
    """

    kind: Literal["category"] = "category"
    preset: Optional[CategoryPreset] = None
    objects: List[Atom] = Field(default_factory=list)
    arrows: List[ArrowSpec] = Field(default_factory=list)
    identities: Dict[str, Atom] = Field(default_factory=dict)
    composition: List[CompositeSpec] = Field(default_factory=list)
    leq: List[Tuple[str, str]] = Field(default_factory=list)
    opens: Dict[Atom, List[Atom]] = Field(default_factory=dict)


class DiagramDoc(_Doc):
    kind: Literal["diagram"] = "diagram"
    shape: str
    objects: Dict[str, str]
    arrows: Dict[str, str] = Field(default_factory=dict)


class PresheafDoc(_Doc):
    """Sets per object and a restriction table per arrow.

    Identities may be omitted, and so may composites whose factors are given.
    """

    kind: Literal["presheaf"] = "presheaf"
    base: str
    sets: Dict[str, List[Atom]]
    maps: Dict[str, Dict[str, str]] = Field(default_factory=dict)


class MorphismDoc(_Doc):
    kind: Literal["morphism"] = "morphism"
    source: str
    target: str
    components: Dict[str, Dict[str, str]]


class SubobjectDoc(_Doc):
    kind: Literal["subobject"] = "subobject"
    parent: str
    members: Dict[str, List[str]]


class GraphDoc(_Doc):
    kind: Literal["graph"] = "graph"
    vertices: List[Atom]
    edges: List[ArrowSpec] = Field(default_factory=list)


class SubgraphDoc(_Doc):
    kind: Literal["subgraph"] = "subgraph"
    parent: str
    vertices: List[str] = Field(default_factory=list)
    edges: List[str] = Field(default_factory=list)


class MechanismSpec(BaseModel):
    """Table keyed by tuple atoms of parent values, e.g. ``"(0,1)"``; ``"()"`` for no parents."""

    model_config = ConfigDict(extra="forbid")

    parents: List[str] = Field(default_factory=list)
    table: Dict[str, str]


class ScmDoc(_Doc):
    kind: Literal["scm"] = "scm"
    exogenous: Dict[str, List[Atom]]
    endogenous: Dict[str, List[Atom]]
    mechanisms: Dict[str, MechanismSpec]


class TopologyDoc(_Doc):
    kind: Literal["topology"] = "topology"
    base: str
    preset: Optional[Literal["trivial", "opens"]] = None
    covers: Dict[str, List[List[str]]] = Field(default_factory=dict)


class FormulaDoc(_Doc):
    """Formula text (or a JSON AST) with the types of its free variables."""

    kind: Literal["formula"] = "formula"
    base: Optional[str] = None
    text: Optional[str] = None
    ast: Optional[Dict[str, Any]] = None
    declarations: Dict[str, str] = Field(default_factory=dict)
    propositional: bool = False


class NeighborhoodsDoc(_Doc):
    kind: Literal["neighborhoods"] = "neighborhoods"
    worlds: List[Atom]
    neighborhoods: Dict[str, List[List[str]]]
    valuation: Dict[str, List[str]]


Document = Annotated[
    Union[FinSetDoc, FunctionDoc, CategoryDoc, DiagramDoc, PresheafDoc, MorphismDoc,
          SubobjectDoc, GraphDoc, SubgraphDoc, ScmDoc, TopologyDoc, FormulaDoc,
          NeighborhoodsDoc],
    Field(discriminator="kind"),
]
_DOCUMENTS = TypeAdapter(Union[Document, List[Document]])

# build order: every kind only refers to kinds before it
KIND_ORDER = ("finset", "category", "function", "diagram", "presheaf", "graph", "morphism",
              "subobject", "subgraph", "scm", "topology", "formula", "neighborhoods")

DOCUMENT_MODELS = {cls.model_fields["kind"].default: cls for cls in (
    FinSetDoc, FunctionDoc, CategoryDoc, DiagramDoc, PresheafDoc, MorphismDoc, SubobjectDoc,
    GraphDoc, SubgraphDoc, ScmDoc, TopologyDoc, FormulaDoc, NeighborhoodsDoc)}


def document_schemas() -> Dict[str, Any]:
    return {kind: model.model_json_schema() for kind, model in DOCUMENT_MODELS.items()}


class Formula(BaseModel):
    """A parsed formula document."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    base: Optional[str]
    term: Any
    declarations: Dict[str, Any]
    propositional: bool = False


class Workspace:
    """Named objects of every kind, built from validated documents."""

    def __init__(self):
        self.documents: List[BaseModel] = []
        self.sets: Dict[str, FinSet] = {}
        self.functions: Dict[str, FinFunction] = {}
        self.categories: Dict[str, FinCategory] = {"interval": INTERVAL, "graph": GRAPH_BASE}
        self.diagrams: Dict[str, SetDiagram] = {}
        self.presheaves: Dict[str, Presheaf] = {}
        self.morphisms: Dict[str, PresheafMorphism] = {}
        self.subobjects: Dict[str, SubPresheaf] = {}
        self.graphs: Dict[str, FinGraph] = {}
        self.subgraphs: Dict[str, SubGraph] = {}
        self.models: Dict[str, TcmObject] = {}
        self.topologies: Dict[str, GrothendieckTopology] = {}
        self.formulas: Dict[str, Formula] = {}
        self.neighborhoods: Dict[str, NeighborhoodSystem] = {}
        # names of the presheaves each morphism and subobject was declared on
        self.morphism_ends: Dict[str, Tuple[str, str]] = {}
        self.subobject_parents: Dict[str, str] = {}

    # -- lookup ---------------------------------------------------------------

    def _get(self, table: Dict[str, Any], name: str, what: str) -> Any:
        try:
            return table[name]
        except KeyError:
            raise UnknownObject(f"no {what} named {name!r} in the workspace") from None

    def category(self, name: str) -> FinCategory:
        return self._get(self.categories, name, "category")

    def presheaf(self, name: str) -> Presheaf:
        return self._get(self.presheaves, name, "presheaf")

    def model(self, name: str) -> TcmObject:
        return self._get(self.models, name, "scm")

    def formula(self, name: str) -> Formula:
        return self._get(self.formulas, name, "formula")

    def get(self, kind: str, name: str) -> Any:
        tables = {"finset": self.sets, "function": self.functions, "category": self.categories,
                  "diagram": self.diagrams, "presheaf": self.presheaves, "morphism": self.morphisms,
                  "subobject": self.subobjects, "graph": self.graphs, "subgraph": self.subgraphs,
                  "scm": self.models, "topology": self.topologies, "formula": self.formulas,
                  "neighborhoods": self.neighborhoods}
        return self._get(tables[kind], name, kind)

    def kind_of(self, name: str) -> str:
        """The kind under which ``name`` was registered; categories win ties."""
        for kind, table in (("category", self.categories), ("scm", self.models),
                            ("diagram", self.diagrams), ("graph", self.graphs),
                            ("subgraph", self.subgraphs), ("subobject", self.subobjects),
                            ("presheaf", self.presheaves), ("morphism", self.morphisms),
                            ("topology", self.topologies), ("formula", self.formulas),
                            ("neighborhoods", self.neighborhoods), ("function", self.functions),
                            ("finset", self.sets)):
            if name in table:
                return kind
        raise UnknownObject(f"nothing named {name!r} in the workspace")

    def presheaves_on(self, base: FinCategory) -> Dict[str, Presheaf]:
        return {n: P for n, P in self.presheaves.items() if P.base.objects == base.objects}

    # -- building ---------------------------------------------------------------

    def add(self, doc: BaseModel) -> None:
        builder = getattr(self, f"_build_{doc.kind}")
        builder(doc)
        self.documents.append(doc)

    def _build_finset(self, doc: FinSetDoc) -> None:
        self.sets[doc.name] = FinSet(doc.name, tuple(doc.elements))

    def _build_function(self, doc: FunctionDoc) -> None:
        dom = self._get(self.sets, doc.dom, "finset")
        cod = self._get(self.sets, doc.cod, "finset")
        self.functions[doc.name] = FinFunction(dom, cod, doc.table, name=doc.name)

    def _build_category(self, doc: CategoryDoc) -> None:
        edges = [(a.name, a.src, a.tgt) for a in doc.arrows]
        preset = doc.preset
        if preset is None:
            C = FinCategory.build(doc.name, doc.objects, edges,
                                  {(c.g, c.f): c.result for c in doc.composition},
                                  identity_names=doc.identities)
        elif preset == "interval":
            C = INTERVAL
        elif preset == "graph":
            C = GRAPH_BASE
        elif preset == "cospan":
            C = FinCategory.cospan()
        elif preset == "span":
            C = FinCategory.span()
        elif preset == "pair":
            C = FinCategory.parallel_pair()
        elif preset == "discrete":
            C = FinCategory.discrete(doc.objects, name=doc.name)
        elif preset == "free":
            C = FinCategory.free(doc.name, doc.objects, edges)
        elif preset == "poset":
            C = FinCategory.poset(doc.name, doc.objects, doc.leq)
        else:
            C = opens_category(doc.opens, name=doc.name)
        report = validate_category(C)
        if not report.ok:
            raise ValidationError(f"category {doc.name} fails the category axioms", report)
        self.categories[doc.name] = C

    def _build_diagram(self, doc: DiagramDoc) -> None:
        shape = self.category(doc.shape)
        D = SetDiagram(shape,
                       {j: self._get(self.sets, s, "finset") for j, s in doc.objects.items()},
                       {a: self._get(self.functions, f, "function") for a, f in doc.arrows.items()},
                       name=doc.name)
        D = _with_identities(D)
        report = validate_diagram(D)
        if not report.ok:
            raise ValidationError(f"diagram {doc.name} is not a functor", report)
        self.diagrams[doc.name] = D

    def _build_presheaf(self, doc: PresheafDoc) -> None:
        C = self.category(doc.base)
        _check_stages(f"presheaf {doc.name}", C, doc.sets, "set")
        sets = {c: FinSet(f"{doc.name}({c})", tuple(xs)) for c, xs in doc.sets.items()}
        maps = {}
        for f, table in doc.maps.items():
            a = C.arrow(f)
            maps[f] = FinFunction(sets[a.tgt], sets[a.src], table, name=f"{doc.name}({f})")
        P = Presheaf(C, sets, _fill_composites(C, maps), name=doc.name)
        report = validate_presheaf(P)
        if not report.ok:
            raise ValidationError(f"presheaf {doc.name} is not a functor", report)
        self.presheaves[doc.name] = P

    def _build_graph(self, doc: GraphDoc) -> None:
        G = FinGraph.build(doc.vertices, [(e.name, e.src, e.tgt) for e in doc.edges], name=doc.name)
        self.graphs[doc.name] = G
        self.presheaves.setdefault(doc.name, as_presheaf(G))

    def _build_morphism(self, doc: MorphismDoc) -> None:
        F, G = self.presheaf(doc.source), self.presheaf(doc.target)
        _check_stages(f"morphism {doc.name}", F.base, doc.components, "component")
        components = {c: FinFunction(F.at(c), G.at(c), table, name=f"{doc.name}_{c}")
                      for c, table in doc.components.items()}
        m = PresheafMorphism(F, G, components)
        bad = m.naturality_violations()
        if bad:
            report = Report(f"morphism {doc.name}")
            for detail in bad:
                report.add("naturality", detail)
            raise ValidationError(f"morphism {doc.name} is not natural", report)
        self.morphisms[doc.name] = m
        self.morphism_ends[doc.name] = (doc.source, doc.target)

    def _build_subobject(self, doc: SubobjectDoc) -> None:
        X = self.presheaf(doc.parent)
        _check_stages(f"subobject {doc.name}", X.base, doc.members, "member list", require_all=False)
        S = SubPresheaf(X, {c: frozenset(xs) for c, xs in doc.members.items()})
        if not S.is_closed:
            report = Report(f"subobject {doc.name}")
            for f, x in S.closure_violations():
                report.add("closure", f"restriction along {f} leaves the subobject", element=x)
            raise ValidationError(f"subobject {doc.name} is not closed under restriction", report)
        self.subobjects[doc.name] = S
        self.subobject_parents[doc.name] = doc.parent

    def _build_subgraph(self, doc: SubgraphDoc) -> None:
        G = self._get(self.graphs, doc.parent, "graph")
        S = SubGraph(G, frozenset(doc.vertices), frozenset(doc.edges))
        if not S.is_closed:
            report = Report(f"subgraph {doc.name}")
            for e in S.dangling_edges():
                report.add("closure", f"edge {e} has an endpoint outside the subgraph", edge=e)
            raise ValidationError(f"subgraph {doc.name} has dangling edges", report)
        self.subgraphs[doc.name] = S
        self.subobjects.setdefault(doc.name, S.to_subpresheaf(self.presheaf(doc.parent)))
        self.subobject_parents.setdefault(doc.name, doc.parent)

    def _build_scm(self, doc: ScmDoc) -> None:
        exo = tuple((v, FinSet.of(v, d)) for v, d in doc.exogenous.items())
        endo = tuple((v, FinSet.of(v, d)) for v, d in doc.endogenous.items())
        domains = dict(exo + endo)
        mechanisms = {}
        for var, spec in doc.mechanisms.items():
            for p in spec.parents:
                self._get(domains, p, "variable")
            dom, _ = tuple_product([domains[p] for p in spec.parents])
            cod = self._get(domains, var, "endogenous variable")
            mechanisms[var] = Mechanism(tuple(spec.parents),
                                        FinFunction(dom, cod, spec.table, name=f"f_{var}"))
        model = CausalModel(doc.name, exo, endo, mechanisms)
        self.models[doc.name] = solve(model)

    def _build_topology(self, doc: TopologyDoc) -> None:
        C = self.category(doc.base)
        if doc.preset == "trivial":
            J = trivial_topology(C)
        elif doc.preset == "opens":
            source = next((d for d in self.documents
                           if isinstance(d, CategoryDoc) and d.name == doc.base), None)
            if source is None or source.preset != "opens":
                raise ValidationError(f"topology {doc.name} needs an 'opens' category as base")
            J = open_cover_topology(C, source.opens)
        else:
            J = GrothendieckTopology(C, {c: tuple(Sieve(c, frozenset(s)) for s in sieves)
                                         for c, sieves in doc.covers.items()}, name=doc.name)
        report = check_topology(J)
        if not report.ok:
            raise ValidationError(f"topology {doc.name} fails the topology axioms", report)
        self.topologies[doc.name] = J

    def _build_formula(self, doc: FormulaDoc) -> None:
        if (doc.text is None) == (doc.ast is None):
            raise ValidationError(f"formula {doc.name} needs exactly one of text and ast")
        declarations = {v: parse_type(ty) for v, ty in doc.declarations.items()}
        if doc.text is not None:
            term = parse_formula(doc.text, declarations, propositional=doc.propositional)
        else:
            try:
                term = t.term_from_json(doc.ast)
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"formula {doc.name} has a malformed ast: {exc}") from exc
        if doc.base is not None:
            self.category(doc.base)
        self.formulas[doc.name] = Formula(name=doc.name, base=doc.base, term=term,
                                          declarations=declarations,
                                          propositional=doc.propositional)

    def _build_neighborhoods(self, doc: NeighborhoodsDoc) -> None:
        self.neighborhoods[doc.name] = NeighborhoodSystem.build(
            doc.worlds, doc.neighborhoods, doc.valuation, name=doc.name)

    def merge_file(self, path: Union[str, Path]) -> List[BaseModel]:
        """Add the documents of one more file; they may refer to what is already loaded."""
        path = Path(path)
        report = Report(str(path))
        documents = _documents_of(path.read_text(encoding="utf-8"), str(path), report)
        for doc in sorted(documents, key=lambda d: KIND_ORDER.index(d.kind)):
            try:
                self.add(doc)
            except ToposError as exc:
                report.add(doc.kind, str(exc), name=doc.name)
        if not report.ok:
            raise ValidationError(f"{path}: {len(report.violations)} problem(s) found", report)
        return documents

    # -- serialization -----------------------------------------------------------

    def to_documents(self) -> List[Dict[str, Any]]:
        return [doc.model_dump(mode="json", exclude_none=True) for doc in self.documents]

    def to_json(self) -> str:
        return json.dumps(self.to_documents(), indent=2, sort_keys=True)


def _check_stages(subject: str, C: FinCategory, given: Dict[str, Any], what: str,
                  require_all: bool = True) -> None:
    """Keys of a per-object table must be objects of C, and cover them all when required."""
    report = Report(subject)
    for c in given:
        if c not in C.objects:
            report.add("stages", f"{c} is not an object of {C.name}", object=c)
    if require_all:
        for c in C.objects:
            if c not in given:
                report.add("stages", f"no {what} at {c}", object=c)
    if not report.ok:
        raise ValidationError(f"{subject} does not match the objects of {C.name}", report)


def _with_identities(D: SetDiagram) -> SetDiagram:
    arrows = dict(D.arrows)
    for j in D.shape.objects:
        arrows.setdefault(D.shape.identity(j), FinFunction.identity(D.at(j)))
    return SetDiagram(D.shape, D.objects, arrows, name=D.name)


def _fill_composites(C: FinCategory, maps: Dict[str, FinFunction]) -> Dict[str, FinFunction]:
    """Derive restrictions along composites from those along their factors."""
    maps = dict(maps)
    changed = True
    while changed:
        changed = False
        for (g, f), h in C.composition.items():
            if h in maps or C.is_identity(h) or C.is_identity(g) or C.is_identity(f):
                continue
            if g in maps and f in maps:
                maps[h] = compose(maps[f], maps[g])
                changed = True
    return maps


def _parse_json(text: str, source: str) -> Any:
    if not text.strip():
        raise ParseError(f"{source} is empty", 1, 1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from exc


def _documents_of(text: str, source: str, report: Report) -> List[BaseModel]:
    raw = _parse_json(text, source)
    try:
        parsed = _DOCUMENTS.validate_python(raw)
    except pydantic.ValidationError as exc:
        for err in exc.errors():
            report.add("schema", f"{source}: {err['msg']}",
                       location=".".join(str(p) for p in err["loc"]))
        return []
    return parsed if isinstance(parsed, list) else [parsed]


def _files(path: Path) -> List[Path]:
    if path.is_dir():
        return sorted(p for p in path.rglob("*.json") if p.is_file())
    if not path.exists():
        raise UnknownObject(f"{path} does not exist")
    return [path]


def build(documents: List[BaseModel], subject: str = "workspace") -> Workspace:
    """Build a workspace, collecting every failure into one report."""
    ws = Workspace()
    report = Report(subject)
    names: Dict[Tuple[str, str], int] = {}
    for doc in documents:
        key = (doc.kind, doc.name)
        names[key] = names.get(key, 0) + 1
    for (kind, name), count in sorted(names.items()):
        if count > 1:
            report.add("unique-names", f"{kind} {name} is defined {count} times", name=name)
    ordered = sorted(documents, key=lambda d: KIND_ORDER.index(d.kind))
    for doc in ordered:
        try:
            ws.add(doc)
        except ValidationError as exc:
            report.add(doc.kind, str(exc), name=doc.name,
                       **({"report": exc.report.as_dict()} if isinstance(exc.report, Report) else {}))
        except ToposError as exc:
            report.add(doc.kind, str(exc), name=doc.name)
    if not report.ok:
        raise ValidationError(f"{subject}: {len(report.violations)} problem(s) found", report)
    logger.debug("loaded %d documents from %s", len(ws.documents), subject)
    return ws


def loads(text: str, source: str = "<text>") -> Workspace:
    report = Report(source)
    documents = _documents_of(text, source, report)
    if not report.ok:
        raise ValidationError(f"{source}: documents do not match the schema", report)
    return build(documents, subject=source)


def load(path: Union[str, Path]) -> Workspace:
    """Load a file, or every ``*.json`` file under a directory."""
    path = Path(path)
    report = Report(str(path))
    documents: List[BaseModel] = []
    for file in _files(path):
        documents.extend(_documents_of(file.read_text(encoding="utf-8"), str(file), report))
    if not report.ok:
        raise ValidationError(f"{path}: documents do not match the schema", report)
    return build(documents, subject=str(path))

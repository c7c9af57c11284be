"""Directed graphs as presheaves on the base ``V --s,t--> E``.

Edges restrict to vertices: ``restrict(s)`` is the source map and
``restrict(t)`` the target map.
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple

from src.errors import DomainMismatch, ParentMismatch, ValueOutOfDomain
from src.fincat import FinCategory, SetDiagram
from src.finset import FinFunction, FinSet
from src.presheaf import (
    Presheaf,
    PresheafDiagram,
    PresheafMorphism,
    SubPresheaf,
    classify,
    hom_presheaves,
    negate,
    join,
    omega,
    presheaf_colimit,
    presheaf_limit,
    subobjects,
)

logger = logging.getLogger(__name__)

# sieve atoms of the classifier, relabeled
VERTEX_LABELS = {"{}": "0_V", "{1_V}": "V"}
EDGE_LABELS = {"{}": "0_E", "{s}": "s", "{t}": "t", "{s,t}": "st", "{1_E,s,t}": "1_E"}


def graph_base() -> FinCategory:
    return FinCategory.build("graph", ["V", "E"], [("s", "V", "E"), ("t", "V", "E")],
                             identity_names={"V": "1_V", "E": "1_E"})


def covariant_graph_base() -> FinCategory:
    """The same shape with arrows reversed, for reading graphs as covariant functors."""
    return FinCategory.build("graph-op", ["E", "V"], [("s", "E", "V"), ("t", "E", "V")],
                             identity_names={"V": "1_V", "E": "1_E"})


GRAPH_BASE = graph_base()


@dataclass(frozen=True, eq=False)
class FinGraph:
    vertices: FinSet
    edges: FinSet
    src: FinFunction
    tgt: FinFunction
    name: str = ""

    def __post_init__(self):
        for fn in (self.src, self.tgt):
            if fn.dom != self.edges or fn.cod != self.vertices:
                raise DomainMismatch(f"graph {self.name}: endpoint maps must run edges -> vertices")

    @classmethod
    def build(cls, vertices: Iterable[str], edges: Iterable[Tuple[str, str, str]],
              name: str = "") -> "FinGraph":
        edges = list(edges)
        V = FinSet.of(f"{name}.V", vertices)
        E = FinSet.of(f"{name}.E", (e for e, _, _ in edges))
        return cls(V, E,
                   FinFunction(E, V, {e: s for e, s, _ in edges}, name="src"),
                   FinFunction(E, V, {e: t for e, _, t in edges}, name="tgt"),
                   name=name)

    def edge_triples(self) -> List[Tuple[str, str, str]]:
        return [(e, self.src(e), self.tgt(e)) for e in self.edges]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinGraph):
            return NotImplemented
        return (self.vertices == other.vertices and self.edges == other.edges
                and self.src == other.src and self.tgt == other.tgt)

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges))


def as_presheaf(G: FinGraph) -> Presheaf:
    return Presheaf(GRAPH_BASE, {"V": G.vertices, "E": G.edges},
                    {"s": G.src, "t": G.tgt}, name=G.name or "graph")


def from_presheaf(P: Presheaf, name: str = "") -> FinGraph:
    if set(P.base.objects) != {"V", "E"}:
        raise DomainMismatch(f"{P.name} is not a presheaf on the graph base")
    return FinGraph(P.at("V"), P.at("E"), P.restrict("s"), P.restrict("t"), name=name or P.name)


def as_diagram(G: FinGraph) -> SetDiagram:
    """Covariant reading: E and V as sets, s and t as functions E -> V."""
    return SetDiagram(covariant_graph_base(), {"V": G.vertices, "E": G.edges},
                      {"s": G.src, "t": G.tgt}, name=G.name)


@dataclass(frozen=True, eq=False)
class SubGraph:
    parent: FinGraph
    vertex_members: FrozenSet[str]
    edge_members: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "vertex_members", frozenset(self.vertex_members))
        object.__setattr__(self, "edge_members", frozenset(self.edge_members))
        stray = (self.vertex_members - self.parent.vertices.members) | (
            self.edge_members - self.parent.edges.members)
        if stray:
            raise ValueOutOfDomain(f"{sorted(stray)} are not part of {self.parent.name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubGraph):
            return NotImplemented
        return (self.parent == other.parent and self.vertex_members == other.vertex_members
                and self.edge_members == other.edge_members)

    def __hash__(self) -> int:
        return hash((self.vertex_members, self.edge_members))

    def dangling_edges(self) -> List[str]:
        return sorted(e for e in self.edge_members
                      if self.parent.src(e) not in self.vertex_members
                      or self.parent.tgt(e) not in self.vertex_members)

    @property
    def is_closed(self) -> bool:
        return not self.dangling_edges()

    def to_subpresheaf(self, parent: Optional[Presheaf] = None) -> SubPresheaf:
        return SubPresheaf(parent or as_presheaf(self.parent),
                           {"V": self.vertex_members, "E": self.edge_members})

    @classmethod
    def from_subpresheaf(cls, G: FinGraph, S: SubPresheaf) -> "SubGraph":
        return cls(G, S.members["V"], S.members["E"])


class OmegaGraph(NamedTuple):
    graph: FinGraph
    labels: Mapping[str, str]
    true_vertex: str
    true_edge: str


def graph_omega() -> OmegaGraph:
    """The subgraph classifier with readable labels in place of sieve atoms."""
    om = omega(GRAPH_BASE)
    P = om.presheaf
    vertices = FinSet("Omega.V", tuple(VERTEX_LABELS[a] for a in P.at("V")))
    edges = FinSet("Omega.E", tuple(EDGE_LABELS[a] for a in P.at("E")))
    src = FinFunction(edges, vertices,
                      {EDGE_LABELS[a]: VERTEX_LABELS[P.act("s", a)] for a in P.at("E")})
    tgt = FinFunction(edges, vertices,
                      {EDGE_LABELS[a]: VERTEX_LABELS[P.act("t", a)] for a in P.at("E")})
    labels = {**{v: k for k, v in VERTEX_LABELS.items()}, **{v: k for k, v in EDGE_LABELS.items()}}
    return OmegaGraph(FinGraph(vertices, edges, src, tgt, name="Omega"), labels,
                      VERTEX_LABELS[om.true_point["V"]], EDGE_LABELS[om.true_point["E"]])


@dataclass(frozen=True, eq=False)
class GraphMorphism:
    source: FinGraph
    target: FinGraph
    vertex_map: FinFunction
    edge_map: FinFunction

    def is_homomorphism(self) -> bool:
        return all(
            self.vertex_map(self.source.src(e)) == self.target.src(self.edge_map(e))
            and self.vertex_map(self.source.tgt(e)) == self.target.tgt(self.edge_map(e))
            for e in self.source.edges
        )

    def as_morphism(self) -> PresheafMorphism:
        return PresheafMorphism(as_presheaf(self.source), as_presheaf(self.target),
                                {"V": self.vertex_map, "E": self.edge_map})

    @classmethod
    def from_morphism(cls, m: PresheafMorphism, source: FinGraph, target: FinGraph) -> "GraphMorphism":
        return cls(source, target, m.components["V"], m.components["E"])


def classify_subgraph(S: SubGraph) -> GraphMorphism:
    om = graph_omega()
    chi = classify(S.to_subpresheaf())
    G = S.parent
    vertex_map = FinFunction(G.vertices, om.graph.vertices,
                             {v: VERTEX_LABELS[chi("V", v)] for v in G.vertices}, name="chi_V")
    edge_map = FinFunction(G.edges, om.graph.edges,
                           {e: EDGE_LABELS[chi("E", e)] for e in G.edges}, name="chi_E")
    return GraphMorphism(G, om.graph, vertex_map, edge_map)


def subgraph_of(chi: GraphMorphism) -> SubGraph:
    """Pull the true point (V, 1_E) back along a classifying map."""
    om = graph_omega()
    G = chi.source
    return SubGraph(G,
                    frozenset(v for v in G.vertices if chi.vertex_map(v) == om.true_vertex),
                    frozenset(e for e in G.edges if chi.edge_map(e) == om.true_edge))


def subgraphs(G: FinGraph, limit: Optional[int] = None) -> List[SubGraph]:
    return [SubGraph.from_subpresheaf(G, S) for S in subobjects(as_presheaf(G), limit=limit)]


def graph_homs(G: FinGraph, H: FinGraph, limit: Optional[int] = None) -> List[GraphMorphism]:
    return [GraphMorphism.from_morphism(m, G, H)
            for m in hom_presheaves(as_presheaf(G), as_presheaf(H), limit=limit)]


def subgraph_negation(S: SubGraph) -> SubGraph:
    return SubGraph.from_subpresheaf(S.parent, negate(S.to_subpresheaf()))


def subgraph_join(A: SubGraph, B: SubGraph) -> SubGraph:
    if A.parent != B.parent:
        raise ParentMismatch("subgraphs of different graphs")
    parent = as_presheaf(A.parent)
    return SubGraph.from_subpresheaf(A.parent, join(A.to_subpresheaf(parent), B.to_subpresheaf(parent)))


@dataclass(frozen=True, eq=False)
class GraphDiagram:
    shape: FinCategory
    graphs: Mapping[str, FinGraph]
    morphisms: Mapping[str, GraphMorphism]

    def as_presheaf_diagram(self) -> PresheafDiagram:
        return PresheafDiagram(self.shape,
                               {j: as_presheaf(G) for j, G in self.graphs.items()},
                               {a: m.as_morphism() for a, m in self.morphisms.items()})


def graph_limits(D: GraphDiagram, kind: str = "limit", limit: Optional[int] = None) -> FinGraph:
    """Limit or colimit of a diagram of graphs, computed stage by stage."""
    PD = D.as_presheaf_diagram()
    if kind == "limit":
        P, _ = presheaf_limit(PD, limit_cap=limit)
    elif kind == "colimit":
        P, _ = presheaf_colimit(PD)
    else:
        raise ValueError(f"kind must be 'limit' or 'colimit', got {kind}")
    logger.debug("graph %s has %d vertices and %d edges", kind, len(P.at("V")), len(P.at("E")))
    return from_presheaf(P, name=kind)


def graph_product(G: FinGraph, H: FinGraph) -> FinGraph:
    return graph_limits(GraphDiagram(FinCategory.discrete(["x", "y"]), {"x": G, "y": H}, {}))


def graph_coproduct(G: FinGraph, H: FinGraph) -> FinGraph:
    return graph_limits(GraphDiagram(FinCategory.discrete(["x", "y"]), {"x": G, "y": H}, {}),
                        kind="colimit")


def _quote(atom: str) -> str:
    return '"' + atom.replace('"', '\\"') + '"'


def to_dot(G: FinGraph, classification: Optional[GraphMorphism] = None) -> str:
    """Graphviz text; a classifying map labels each vertex and edge with its truth value."""
    lines = [f"digraph {_quote(G.name or 'G')} {{"]
    for v in G.vertices:
        label = v if classification is None else f"{v} [{classification.vertex_map(v)}]"
        lines.append(f"  {_quote(v)} [label={_quote(label)}];")
    for e in G.edges:
        label = e if classification is None else f"{e} [{classification.edge_map(e)}]"
        lines.append(f"  {_quote(G.src(e))} -> {_quote(G.tgt(e))} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines)

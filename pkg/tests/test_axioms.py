import itertools

import pytest

from src.axioms import (
    PRESHEAF_CHECKS,
    classifier_bijection,
    double_negation,
    heyting_adjunction,
    intervention_laws,
    potential_outcomes,
    run_suite,
    submodel_classification,
)
from src.errors import SizeLimit, UnknownObject
from src.fincat import FinCategory
from src.finset import FinFunction, FinSet
from src.graphtopos import FinGraph, as_presheaf
from src.presheaf import Presheaf


def interval_presheaves(largest):
    """Every presheaf on the interval with stages of at most ``largest`` elements."""
    C = FinCategory.interval()
    found = []
    for na, nb in itertools.product(range(largest + 1), repeat=2):
        A = FinSet("a", tuple(f"p{i}" for i in range(na)))
        B = FinSet("b", tuple(f"x{i}" for i in range(nb)))
        for images in itertools.product(A.elements, repeat=nb):
            u = FinFunction(B, A, dict(zip(B.elements, images)))
            found.append(Presheaf(C, {"a": A, "b": B}, {"u": u}, name=f"P({na},{nb}:{''.join(images)})"))
    return found


def small_graphs(largest):
    """Every graph with at most ``largest`` vertices and edges, up to edge naming."""
    found = []
    for n in range(largest + 1):
        vertices = [f"v{i}" for i in range(n)]
        ends = list(itertools.product(vertices, repeat=2))
        for k in range(largest + 1):
            for chosen in itertools.combinations_with_replacement(ends, k):
                edges = [(f"e{i}", s, t) for i, (s, t) in enumerate(chosen)]
                found.append(FinGraph.build(vertices, edges, name=f"G{n}:{chosen}"))
    return found


GENERATED = interval_presheaves(3) + [as_presheaf(G) for G in small_graphs(2)]


def subjects(reports):
    return [r.subject for r in reports]


@pytest.mark.parametrize("name", ["point", "collapse", "negation", "spare_value"])
def test_presheaf_suite_passes(corpus_ws, name):
    """Test that the topos laws hold for every interval presheaf of the corpus."""
    reports = run_suite(corpus_ws, name)
    assert subjects(reports) == list(PRESHEAF_CHECKS)
    assert all(r.ok for r in reports)


@pytest.mark.parametrize("name", ["chain", "binary", "pollution"])
def test_model_suite_passes(corpus_ws, name):
    """Test outcomes, intervention laws and submodel classification for each model."""
    reports = run_suite(corpus_ws, name)
    assert subjects(reports) == ["potential-outcomes", "intervention-laws", "submodel-classification"]
    assert all(r.ok for r in reports), [r.as_dict() for r in reports if not r.ok]


def test_graph_suite_includes_subgraph_round_trip(corpus_ws):
    """Test that graphs get the presheaf checks plus the subgraph round trip."""
    reports = run_suite(corpus_ws, "edge")
    assert subjects(reports) == list(PRESHEAF_CHECKS) + ["subgraph-round-trip"]
    assert all(r.ok for r in reports)


@pytest.mark.parametrize("name, expected", [
    ("vee", ["category"]),
    ("pullback_const", ["limit-universality", "colimit-universality"]),
    ("coequalizer_pq", ["limit-universality", "colimit-universality"]),
    ("vee_opens", ["topology"]),
])
def test_other_suites(corpus_ws, name, expected):
    """Test the suites for categories, diagrams and topologies."""
    reports = run_suite(corpus_ws, name)
    assert len(reports) == len(expected)
    assert all(r.ok for r in reports)


def test_no_suite_for_formulas(corpus_ws):
    """Test that objects without axioms are refused."""
    with pytest.raises(UnknownObject):
        run_suite(corpus_ws, "in_x")


def test_cap_stops_enumeration(corpus_ws):
    """Test that a small cap on subobjects raises SizeLimit."""
    with pytest.raises(SizeLimit):
        classifier_bijection(corpus_ws.presheaves["collapse"], limit=4)


def test_checks_on_a_fixture_model(binary_model):
    """Test the model checks directly on the binary model."""
    assert potential_outcomes(binary_model).ok
    assert intervention_laws(binary_model).ok
    assert submodel_classification(binary_model).ok


def test_enough_generated_presheaves():
    """Test that the generated presheaves cover both bases in quantity."""
    assert len(GENERATED) >= 20
    assert {P.base.name for P in GENERATED} == {"2", "graph"}


@pytest.mark.parametrize("X", GENERATED, ids=lambda P: P.name)
def test_classifier_bijection_on_small_presheaves(X):
    """Test that subobjects and maps to Omega correspond on every small presheaf."""
    report = classifier_bijection(X)
    assert report.ok, report.as_dict()


@pytest.mark.parametrize("name", ["point", "collapse", "negation", "spare_value", "edge", "loop", "path"])
def test_heyting_adjunction_on_named_presheaves(corpus_ws, name):
    """Test that implication is right adjoint to meet on interval and graph presheaves."""
    report = heyting_adjunction(corpus_ws.presheaves[name])
    assert report.ok, report.as_dict()


@pytest.mark.parametrize("X", interval_presheaves(2), ids=lambda P: P.name)
def test_heyting_laws_on_small_presheaves(X):
    """Test the adjunction and not-not on every presheaf with stages of at most two elements."""
    assert heyting_adjunction(X).ok
    assert double_negation(X).ok

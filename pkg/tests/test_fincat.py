import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import InvalidShape, NoFactorization, NotACone, SizeLimit
from src.fincat import (
    Arrow,
    Cone,
    ConeDirection,
    FinCategory,
    SetDiagram,
    colimit,
    constant_diagram,
    count_mediators,
    is_universal_cone,
    limit,
    limit_by_equalizer,
    mediating_morphism,
    validate_category,
    validate_diagram,
)
from src.finset import FinFunction, FinSet, coequalizer


@pytest.fixture
def ab():
    return FinSet("AB", ("a", "b"))


@pytest.fixture
def pullback_diagram(ab):
    Z = FinSet("Z", ("z",))
    const = FinFunction.constant(ab, Z, "z")
    return SetDiagram(FinCategory.cospan(), {"x": ab, "y": ab, "z": Z},
                      {"f": const, "g": const}, name="pb")


@pytest.mark.parametrize("shape", [
    FinCategory.interval(), FinCategory.cospan(), FinCategory.span(),
    FinCategory.parallel_pair(), FinCategory.discrete(["x", "y"]), FinCategory.empty(),
])
def test_named_shapes_are_categories(shape):
    """Test that every named shape passes the category axioms."""
    assert validate_category(shape).ok


def test_free_category_composites():
    """Test that the free category on a path adds the composite arrow."""
    C = FinCategory.free("path", ["a", "b", "c"], [("f", "a", "b"), ("g", "b", "c")])
    assert validate_category(C).ok
    assert C.compose("g", "f") == "g.f"
    assert C.hom("a", "c") == ("g.f",)


def test_free_category_rejects_cycles():
    """Test that a cyclic graph has no finite free category."""
    with pytest.raises(InvalidShape):
        FinCategory.free("loop", ["a"], [("f", "a", "a")])


def test_poset_category_is_transitive():
    """Test that a poset category contains the transitive arrow."""
    C = FinCategory.poset("chain", ["0", "1", "2"], [("0", "1"), ("1", "2")])
    assert validate_category(C).ok
    assert C.compose("1<=2", "0<=1") == "0<=2"


def test_missing_composite_is_reported():
    """Test that a table without a composite fails closure with a witness."""
    arrows = {"id_a": Arrow("id_a", "a", "a"), "id_b": Arrow("id_b", "b", "b"),
              "f": Arrow("f", "a", "b"), "g": Arrow("g", "b", "a")}
    composition = {("id_a", "id_a"): "id_a", ("id_b", "id_b"): "id_b",
                   ("id_b", "f"): "f", ("f", "id_a"): "f",
                   ("id_a", "g"): "g", ("g", "id_b"): "g"}
    C = FinCategory("bad", ("a", "b"), arrows, {"a": "id_a", "b": "id_b"}, composition)
    report = validate_category(C)
    assert not report.ok
    assert {v.axiom for v in report.violations} == {"closure"}
    assert any(v.witness == {"g": "g", "f": "f"} for v in report.violations)


def test_diagram_must_be_functorial(ab):
    """Test that a diagram sending an arrow to the wrong endpoints is reported."""
    D = SetDiagram(FinCategory.interval(), {"a": ab, "b": ab},
                   {"u": FinFunction.identity(FinSet("Z", ("z",)))})
    assert not validate_diagram(D).ok


def test_pullback_limit(pullback_diagram):
    """Test that constant maps to a point have four compatible tuples."""
    cone = limit(pullback_diagram)
    assert len(cone.apex) == 4
    assert cone.is_cone
    assert cone.as_nat_transformation().is_natural
    assert is_universal_cone(cone)


def test_limit_matches_equalizer_of_products(pullback_diagram):
    """Test that the limit agrees with the equalizer of two maps out of the product."""
    assert len(limit_by_equalizer(pullback_diagram)) == len(limit(pullback_diagram).apex)


def test_limit_respects_cap(pullback_diagram):
    """Test that an oversized limit aborts."""
    with pytest.raises(SizeLimit):
        limit(pullback_diagram, limit=2)


def test_duplicated_tuple_is_not_universal(pullback_diagram, ab):
    """Test that an apex repeating a compatible tuple admits two mediators."""
    cone = limit(pullback_diagram)
    extra = FinSet("X", tuple(cone.apex) + ("dup",))
    first = cone.apex.elements[0]
    legs = {j: FinFunction(extra, leg.cod, {**dict(leg.table), "dup": leg(first)})
            for j, leg in cone.legs.items()}
    bigger = Cone(pullback_diagram, extra, legs, ConeDirection.OVER)
    assert bigger.is_cone
    assert not is_universal_cone(bigger)


def test_missing_tuple_is_not_universal(pullback_diagram):
    """Test that an apex missing a compatible tuple leaves some cone without a mediator."""
    cone = limit(pullback_diagram)
    kept = cone.apex.elements[1:]
    smaller_apex = FinSet("S", kept)
    legs = {j: FinFunction(smaller_apex, leg.cod, {x: leg(x) for x in kept})
            for j, leg in cone.legs.items()}
    smaller = Cone(pullback_diagram, smaller_apex, legs, ConeDirection.OVER)
    assert smaller.is_cone
    assert not is_universal_cone(smaller)


def test_mediator_is_unique(pullback_diagram):
    """Test that a one-point cone factors through the limit exactly once."""
    cone = limit(pullback_diagram)
    point = FinSet("T", ("c",))
    candidate = Cone(pullback_diagram, point,
                     {j: FinFunction(point, leg.cod, {"c": leg("(a,b,z)")})
                      for j, leg in cone.legs.items()})
    assert count_mediators(cone, candidate) == 1
    assert mediating_morphism(cone, candidate)("c") == "(a,b,z)"


def test_mediator_rejects_non_cones(pullback_diagram, ab):
    """Test that a broken candidate is reported instead of factored."""
    cone = limit(pullback_diagram)
    point = FinSet("T", ("c",))
    broken = Cone(pullback_diagram, point, {"x": FinFunction(point, ab, {"c": "a"}),
                                            "y": FinFunction(point, ab, {"c": "b"})})
    with pytest.raises(NotACone):
        mediating_morphism(cone, broken)


def test_non_unique_mediator_raises(pullback_diagram):
    """Test that an ambiguous factorization is refused."""
    cone = limit(pullback_diagram)
    extra = FinSet("X", tuple(cone.apex) + ("dup",))
    legs = {j: FinFunction(extra, leg.cod, {**dict(leg.table), "dup": leg("(a,a,z)")})
            for j, leg in cone.legs.items()}
    bigger = Cone(pullback_diagram, extra, legs)
    point = FinSet("T", ("c",))
    candidate = Cone(pullback_diagram, point,
                     {j: FinFunction(point, leg.cod, {"c": leg("(a,a,z)")})
                      for j, leg in cone.legs.items()})
    with pytest.raises(NoFactorization):
        mediating_morphism(bigger, candidate)


def test_coequalizer_colimit_matches_finset():
    """Test that the colimit of a parallel pair matches the set coequalizer."""
    A = FinSet("A", ("a",))
    cod = FinSet("C", ("p", "q", "r"))
    f = FinFunction(A, cod, {"a": "p"})
    g = FinFunction(A, cod, {"a": "q"})
    D = SetDiagram(FinCategory.parallel_pair(), {"s": A, "t": cod}, {"f": f, "g": g}, name="coeq")
    cocone = colimit(D)
    assert len(cocone.apex) == len(coequalizer(f, g).quotient) == 2
    assert cocone.legs["t"]("p") == cocone.legs["t"]("q")
    assert is_universal_cone(cocone)


@pytest.mark.parametrize("name, size", [
    ("pullback_const", 4), ("equalizer_pq", 1), ("product_A2_P2", 4),
])
def test_corpus_limits(corpus_ws, name, size):
    """Test the limits of the corpus diagrams and their universality."""
    cone = limit(corpus_ws.diagrams[name])
    assert len(cone.apex) == size
    assert is_universal_cone(cone)


@pytest.mark.parametrize("name, size", [
    ("pushout_point", 3), ("coequalizer_pq", 2), ("coproduct_A2_A1", 3),
])
def test_corpus_colimits(corpus_ws, name, size):
    """Test the colimits of the corpus diagrams and their universality."""
    cocone = colimit(corpus_ws.diagrams[name])
    assert len(cocone.apex) == size
    assert is_universal_cone(cocone)


def test_colimit_over_identities_is_universal():
    """Test colimit universality on a diagram whose shape carries identity arrows."""
    A = FinSet("A", ("a0", "a1"))
    B = FinSet("B", ("b0",))
    D = SetDiagram(FinCategory.interval(), {"a": A, "b": B},
                   {"u": FinFunction.constant(A, B, "b0")}, name="collapse")
    assert is_universal_cone(colimit(D))
    assert is_universal_cone(colimit(constant_diagram(FinCategory.discrete(["x"]), A)))


def test_fixed_point_of_an_endo_arrow():
    """Test colimit universality when an endo-arrow fixes some elements."""
    C = FinCategory.build("loop", ["x"], [("e", "x", "x")], {("e", "e"): "e"})
    A = FinSet("A", ("p", "q"))
    D = SetDiagram(C, {"x": A}, {"e": FinFunction(A, A, {"p": "p", "q": "p"})}, name="idem")
    assert validate_diagram(D).ok
    cocone = colimit(D)
    assert len(cocone.apex) == 1
    assert is_universal_cone(cocone)


SHAPES = [
    FinCategory.interval(), FinCategory.cospan(), FinCategory.span(),
    FinCategory.parallel_pair(), FinCategory.discrete(["x", "y"]), FinCategory.empty(),
]


@st.composite
def diagrams(draw):
    shape = draw(st.sampled_from(SHAPES))
    sets = {}
    for j in shape.objects:
        n = draw(st.integers(min_value=1, max_value=3))
        sets[j] = FinSet(j, tuple(f"{j}{i}" for i in range(n)))
    maps = {}
    for name in shape.non_identity_arrows():
        a = shape.arrow(name)
        dom, cod = sets[a.src], sets[a.tgt]
        maps[name] = FinFunction(dom, cod, {x: draw(st.sampled_from(cod.elements)) for x in dom},
                                 name=name)
    return SetDiagram(shape, sets, maps, name=shape.name)


@settings(max_examples=60, deadline=None)
@given(D=diagrams())
def test_generated_limits_are_universal(D):
    """Test limit universality on small diagrams of every named shape."""
    cone = limit(D)
    assert cone.is_cone
    assert len(cone.apex) == len(limit_by_equalizer(D))
    assert is_universal_cone(cone, bound=2)


@settings(max_examples=60, deadline=None)
@given(D=diagrams())
def test_generated_colimits_are_universal(D):
    """Test colimit universality on small diagrams of every named shape."""
    cocone = colimit(D)
    assert cocone.is_cone
    assert is_universal_cone(cocone, bound=2)


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.name)
def test_every_shape_is_generated(shape):
    """Test that the identity diagram on each shape has universal limit and colimit."""
    D = constant_diagram(shape, FinSet("P", ("p0", "p1")))
    assert is_universal_cone(limit(D), bound=2)
    assert is_universal_cone(colimit(D), bound=2)

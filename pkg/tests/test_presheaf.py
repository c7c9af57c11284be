import pytest

from src.errors import SizeLimit
from src.fincat import FinCategory
from src.presheaf import (
    GrothendieckTopology,
    PresheafDiagram,
    SubPresheaf,
    check_topology,
    classify,
    full_subobject,
    heyting,
    hom_presheaves,
    identity_morphism,
    is_sheaf,
    maximal_sieve,
    omega,
    power_object,
    presheaf_equalizer,
    presheaf_limit,
    presheaf_pullback,
    psh_exponential,
    representable_element,
    sieve_pullback,
    sieves_on,
    subobjects,
    terminal_presheaf,
    trivial_topology,
    true_subobject,
    validate_presheaf,
    yoneda,
)


@pytest.fixture
def collapse(corpus_ws):
    return corpus_ws.presheaves["collapse"]


@pytest.fixture
def collapse_x(corpus_ws):
    return corpus_ws.subobjects["collapse_x"]


def test_sieves_on_interval(interval):
    """Test that a has two sieves and b has three."""
    assert [s.atom for s in sieves_on(interval, "a")] == ["{}", "{id_a}"]
    assert sorted(s.atom for s in sieves_on(interval, "b")) == ["{id_b,u}", "{u}", "{}"]


def test_sieve_pullback_of_maximal_is_maximal(interval):
    """Test that pulling the maximal sieve back along u gives the maximal sieve on a."""
    pulled = sieve_pullback(interval, "u", maximal_sieve(interval, "b"))
    assert pulled == maximal_sieve(interval, "a")


def test_omega_over_interval(interval):
    """Test the shape of Omega and its restriction along u."""
    om = omega(interval)
    assert len(om.presheaf.at("a")) == 2
    assert len(om.presheaf.at("b")) == 3
    assert validate_presheaf(om.presheaf).ok
    assert om.presheaf.act("u", "{u}") == "{id_a}"
    assert om.presheaf.act("u", "{}") == "{}"
    assert om.alias("b", "{u}") == "1/2"
    assert om.alias("b", "{id_b,u}") == "1"


def test_omega_heyting_operations(interval):
    """Test implication and negation on the middle truth value."""
    om = omega(interval)
    assert om.negate("b", "{u}") == "{}"
    assert om.negate("b", "{}") == "{id_b,u}"
    assert om.implies("b", "{u}", "{u}") == om.top("b")
    assert om.meet("b", "{u}", "{id_b,u}") == "{u}"


def test_yoneda_sets(interval):
    """Test the representable presheaves of the interval."""
    yb = yoneda(interval, "b")
    assert set(yb.at("a")) == {"u"}
    assert set(yb.at("b")) == {"id_b"}
    ya = yoneda(interval, "a")
    assert len(ya.at("b")) == 0


def test_representable_element_is_natural(collapse):
    """Test that an element of X(b) gives a natural map y(b) -> X."""
    m = representable_element(collapse, "b", "y")
    assert m.is_natural
    assert m("a", "u") == "p"


def test_classify_collapse_x(collapse, collapse_x):
    """Test the classifying map of a subobject with a partial element."""
    om = omega(collapse.base)
    chi = classify(collapse_x, om)
    assert chi.is_natural
    assert chi("b", "x") == om.top("b")
    assert chi("b", "y") == "{u}"
    assert chi("a", "p") == om.top("a")
    assert true_subobject(chi, om) == collapse_x


def test_subobjects_match_maps_into_omega(collapse):
    """Test that subobjects of X and maps X -> Omega are counted alike."""
    om = omega(collapse.base)
    subs = subobjects(collapse)
    assert len(subs) == 5
    assert len(hom_presheaves(collapse, om.presheaf)) == 5
    assert {classify(S, om) for S in subs} == set(hom_presheaves(collapse, om.presheaf))


def test_subobjects_respect_cap(collapse):
    """Test that too many candidate subobjects abort."""
    with pytest.raises(SizeLimit):
        subobjects(collapse, limit=4)


def test_excluded_middle_fails(collapse, collapse_x):
    """Test that a subobject joined with its negation need not be everything."""
    neg = heyting("not", collapse_x)
    assert neg == SubPresheaf(collapse, {})
    either = heyting("join", collapse_x, neg)
    assert either != full_subobject(collapse)
    assert "y" not in either.members["b"]
    assert heyting("not", neg) == full_subobject(collapse)


def test_heyting_implication_is_residual(collapse, collapse_x):
    """Test that A => A is everything and A meet (A => B) is below B."""
    empty = SubPresheaf(collapse, {})
    assert heyting("implies", collapse_x, collapse_x) == full_subobject(collapse)
    assert heyting("meet", collapse_x, heyting("implies", collapse_x, empty)).leq(empty)
    with pytest.raises(ValueError):
        heyting("meet", collapse_x)


def test_hom_presheaves_point_to_negation(corpus_ws):
    """Test that the global elements of the negation presheaf are the two swaps."""
    homs = hom_presheaves(corpus_ws.presheaves["point"], corpus_ws.presheaves["negation"])
    assert len(homs) == 2
    assert corpus_ws.morphisms["beta"] in homs


def test_flip_has_no_fixed_points(corpus_ws):
    """Test the equalizer of flip and the identity."""
    negation = corpus_ws.presheaves["negation"]
    eq = presheaf_equalizer(corpus_ws.morphisms["flip"], identity_morphism(negation))
    assert all(not m for m in eq.members.values())


def test_pullback_of_alpha_with_itself(corpus_ws):
    """Test that a mono pulls back along itself to its source."""
    alpha = corpus_ws.morphisms["alpha"]
    P, p1, p2 = presheaf_pullback(alpha, alpha)
    assert P.size() == 2
    assert p1 == p2


def test_presheaf_limit_stagewise(corpus_ws):
    """Test a pullback of presheaves computed one stage at a time."""
    point = corpus_ws.presheaves["point"]
    alpha = corpus_ws.morphisms["alpha"]
    D = PresheafDiagram(FinCategory.cospan(),
                        {"x": point, "y": point, "z": corpus_ws.presheaves["collapse"]},
                        {"f": alpha, "g": alpha})
    lim, cones = presheaf_limit(D)
    assert lim.size() == 2
    assert validate_presheaf(lim).ok
    assert set(cones) == {"a", "b"}


def test_exponential_of_terminal(collapse):
    """Test that maps out of the terminal presheaf look like the presheaf itself."""
    one = terminal_presheaf(collapse.base)
    expo = psh_exponential(one, collapse)
    assert len(expo.presheaf.at("a")) == 1
    assert len(expo.presheaf.at("b")) == 2
    assert validate_presheaf(expo.presheaf).ok
    assert expo.evaluation.is_natural


def test_power_object_of_terminal_is_omega(interval):
    """Test that the power object of 1 has the sizes of Omega."""
    power = power_object(terminal_presheaf(interval))
    assert len(power.presheaf.at("a")) == 2
    assert len(power.presheaf.at("b")) == 3


def test_trivial_topology_is_valid(interval):
    """Test that maximal sieves alone form a topology."""
    assert check_topology(trivial_topology(interval)).ok


def test_topology_without_maximal_sieve(interval):
    """Test that a topology missing a maximal sieve is reported."""
    J = GrothendieckTopology(interval, {"a": (maximal_sieve(interval, "a"),)}, name="broken")
    report = check_topology(J)
    assert not report.ok
    assert "maximal" in {v.axiom for v in report.violations}


def test_germs_form_a_sheaf(corpus_ws):
    """Test that sections over separated opens glue uniquely."""
    assert is_sheaf(corpus_ws.presheaves["germs"], corpus_ws.topologies["vee_opens"]).ok


def test_constant_presheaf_is_not_a_sheaf(corpus_ws):
    """Test that the constant presheaf has two sections over the empty open."""
    report = is_sheaf(corpus_ws.presheaves["constant_two"], corpus_ws.topologies["vee_opens"])
    assert not report.ok
    assert report.violations[0].witness["object"] == "empty"


def test_every_presheaf_is_a_sheaf_for_trivial_topology(corpus_ws, collapse):
    """Test the sheaf condition under the trivial topology."""
    assert is_sheaf(collapse, corpus_ws.topologies["interval_trivial"]).ok

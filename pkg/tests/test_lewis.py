import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import UnknownVariable, UnknownWorld, ValueOutOfDomain
from src.logic import terms as t
from src.logic.lewis import (
    NeighborhoodSystem,
    intervention_system,
    lewis_counterfactual,
    satisfies,
    split_world,
    truth_set,
    would,
)
from src.logic.parser import parse_formula
from src.tcm import Intervention


def atom(name):
    return t.Var(name, t.OMEGA)


@pytest.fixture
def weather(corpus_ws):
    return corpus_ws.neighborhoods["weather"]


@pytest.mark.parametrize("world, expected", [("w0", True), ("w1", True), ("w2", False)])
def test_rain_would_be_cold(weather, world, expected):
    """Test rain []-> cold at each world of the weather system."""
    phi = parse_formula("(boxright rain cold)", propositional=True)
    assert satisfies(weather, world, phi) is expected


def test_vacuous_counterfactual():
    """Test that an antecedent true nowhere around a world makes the conditional true."""
    W = NeighborhoodSystem.build(["w0", "w1"], {"w0": [["w0", "w1"]]},
                                 {"snow": [], "cold": ["w1"]})
    assert lewis_counterfactual(W, "w0", atom("snow"), atom("cold"))
    assert lewis_counterfactual(W, "w1", atom("cold"), atom("snow"))


def test_classical_connectives(weather):
    """Test that connectives are read classically at a world."""
    assert truth_set(weather, parse_formula("(or rain (not rain))", propositional=True)) == {"w0", "w1", "w2"}
    assert truth_set(weather, parse_formula("(and rain (not cold))", propositional=True)) == {"w2"}


def test_unknown_worlds_and_atoms(weather):
    """Test the errors for a missing world or an atom without a valuation."""
    with pytest.raises(UnknownWorld):
        satisfies(weather, "w9", atom("rain"))
    with pytest.raises(UnknownVariable):
        satisfies(weather, "w0", atom("hail"))
    with pytest.raises(ValueOutOfDomain):
        NeighborhoodSystem.build(["w0"], {"w0": [["w1"]]}, {})


def test_intervention_system_worlds(binary_model):
    """Test that worlds pair a regime with an exogenous tuple."""
    W = intervention_system(binary_model, [Intervention.of(B="1")])
    assert set(W.worlds) == {"(0)", "(1)", "do:B=1:(0)", "do:B=1:(1)"}
    assert W.valuation["obs"] == {"(0)", "(1)"}
    assert W.valuation["do:B=1"] == {"do:B=1:(0)", "do:B=1:(1)"}
    assert W.valuation["C=1"] == {"do:B=1:(1)"}
    assert W.around("(0)") == (frozenset({"(0)", "do:B=1:(0)"}),)


@pytest.mark.parametrize("u, value, expected", [
    ("(0)", "0", True), ("(1)", "0", False), ("(1)", "1", True),
])
def test_would(binary_model, u, value, expected):
    """Test do(B=1) []-> C=value against the potential outcome."""
    assert would(binary_model, Intervention.of(B="1"), "C", value, u) is expected


def test_nested_counterfactual(binary_model):
    """Test a counterfactual whose consequent is another counterfactual."""
    phi = parse_formula("(boxright do:A=1 (boxright do:B=1 C=1))", propositional=True)
    W = intervention_system(binary_model, [Intervention.of(A="1"), Intervention.of(B="1")])
    assert not satisfies(W, "(0)", phi)
    assert satisfies(W, "(1)", phi)


def test_split_world():
    """Test reading the regime and tuple back out of a world atom."""
    assert split_world("do:B=1:(0)") == ("do:B=1", "(0)")
    assert split_world("(1)") == ("", "(1)")


@st.composite
def systems(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    worlds = [f"w{i}" for i in range(n)]
    subsets = st.sets(st.sampled_from(worlds))
    hoods = {w: draw(st.lists(subsets, max_size=3)) for w in worlds}
    return NeighborhoodSystem.build(worlds, hoods, {"p": draw(subsets), "q": draw(subsets)})


def scan(W, u):
    p, q = W.valuation["p"], W.valuation["q"]
    hoods = W.around(u)
    if not any(N & p for N in hoods):
        return True
    return any(N & p and N & p <= q for N in hoods)


@settings(max_examples=200, deadline=None)
@given(W=systems())
def test_counterfactual_matches_neighborhood_scan(W):
    """Test p []-> q against a direct scan of every neighborhood."""
    for u in W.worlds:
        assert lewis_counterfactual(W, u, atom("p"), atom("q")) == scan(W, u)

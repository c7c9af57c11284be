import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.fincat import FinCategory
from src.graphtopos import FinGraph
from src.logic import terms as t
from src.logic.semantics import Topos
from src.tcm import CausalModel, solve
from src.workspace import load

CORPUS = ROOT / "corpus"
DATA = Path(__file__).resolve().parent / "data"


def _not(x: str) -> str:
    return "1" if x == "0" else "0"


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def data_path() -> Path:
    return DATA


@pytest.fixture(scope="session")
def corpus_ws():
    return load(CORPUS)


@pytest.fixture
def interval():
    return FinCategory.interval()


@pytest.fixture
def binary_model():
    """A = u, B = not A, C = A and B."""
    model = CausalModel.from_rules(
        "binary",
        {"U": ["0", "1"]},
        {"A": ["0", "1"], "B": ["0", "1"], "C": ["0", "1"]},
        {
            "A": (["U"], lambda u: u),
            "B": (["A"], _not),
            "C": (["A", "B"], lambda a, b: "1" if a == b == "1" else "0"),
        },
    )
    return solve(model)


@pytest.fixture
def chain_model():
    """A = u, B = not A."""
    model = CausalModel.from_rules(
        "chain",
        {"U": ["0", "1"]},
        {"A": ["0", "1"], "B": ["0", "1"]},
        {"A": (["U"], lambda u: u), "B": (["A"], _not)},
    )
    return solve(model)


@pytest.fixture
def edge_graph():
    return FinGraph.build(["v0", "v1"], [("e", "v0", "v1")], name="edge")


@pytest.fixture
def interval_topos(corpus_ws, binary_model):
    """The interval topos with the corpus presheaves, flip, collapse_x and the binary model."""
    topos = Topos(FinCategory.interval())
    for name in ("point", "collapse", "negation"):
        topos.add_type(name, corpus_ws.presheaves[name])
    negation = t.BaseType("negation")
    topos.add_arrow("flip", corpus_ws.morphisms["flip"], negation, negation)
    topos.add_predicate("collapse_x", corpus_ws.subobjects["collapse_x"], t.BaseType("collapse"))
    topos.add_model("binary", binary_model)
    return topos

import pytest
from unittest.mock import MagicMock

from src.errors import SizeLimit, UnknownCommand, UnknownObject
from src.nodes.command_runner import COMMANDS, CommandRunnerNode, build_topos, run_force
from src.workspace import load


@pytest.fixture
def state(corpus_ws):
    return {"workspace": corpus_ws, "command": "omega", "args": {"base": "interval"},
            "logs": [], "errors": []}


async def run(state, command, **args):
    state["command"] = command
    state["args"] = args
    return await CommandRunnerNode().run(state)


@pytest.mark.asyncio
async def test_dispatches_to_handler(state):
    """Test that the node calls the handler and stores result, traces and timing."""
    handler = MagicMock(return_value={"answer": 42, "traces": [{"clause": "atom"}]})
    new_state, next_node = await CommandRunnerNode({"omega": handler}).run(state)

    handler.assert_called_once_with(state["workspace"], {"base": "interval"})
    assert next_node == "report_writer"
    assert new_state["result"] == {"answer": 42}
    assert new_state["traces"] == [{"clause": "atom"}]
    assert "seconds" in new_state["timing"]
    assert new_state["logs"] == ["Ran omega"]


@pytest.mark.asyncio
async def test_unknown_command(state):
    """Test that an unknown command routes to the error handler."""
    new_state, next_node = await run(state, "frobnicate")
    assert next_node == "error_handler"
    assert isinstance(new_state["failure"], UnknownCommand)


@pytest.mark.asyncio
async def test_missing_workspace(state):
    """Test that running without a workspace fails."""
    del state["workspace"]
    new_state, next_node = await run(state, "omega")
    assert next_node == "error_handler"
    assert isinstance(new_state["failure"], UnknownObject)


@pytest.mark.asyncio
async def test_omega_of_interval(state):
    """Test the three truth values at b and how they restrict to a."""
    new_state, _ = await run(state, "omega", base="interval")
    result = new_state["result"]
    assert result["stages"]["b"]["size"] == 3
    assert sorted(result["stages"]["b"]["values"].values()) == ["0", "1", "1/2"]
    assert result["stages"]["b"]["true"] == "1"
    assert result["restrictions"]["u"] == {"0": "0", "1/2": "1", "1": "1"}


@pytest.mark.asyncio
async def test_omega_of_graphs(state):
    """Test the graph truth values by their labels."""
    new_state, _ = await run(state, "omega", base="graph")
    stages = new_state["result"]["stages"]
    assert stages["V"]["size"] == 2
    assert stages["E"]["size"] == 5


@pytest.mark.asyncio
async def test_limit_and_colimit(state):
    """Test the pullback over a point and the coequalizer of two points."""
    new_state, _ = await run(state, "limit", diagram="pullback_const", check=True)
    assert len(new_state["result"]["cone"]["apex"]) == 4
    assert new_state["result"]["universal"]

    new_state, _ = await run(state, "colimit", diagram="coequalizer_pq")
    assert len(new_state["result"]["cone"]["apex"]) == 2


@pytest.mark.asyncio
async def test_graph_product(state):
    """Test the product of two graphs with its Graphviz text."""
    new_state, _ = await run(state, "limit", graphs=["edge", "edge"], dot=True)
    result = new_state["result"]
    assert len(result["graph"]["vertices"]) == 4
    assert len(result["graph"]["edges"]) == 1
    assert result["dot"].startswith("digraph")


@pytest.mark.asyncio
async def test_graph_product_needs_two_names(state):
    """Test that three graph names are refused."""
    _, next_node = await run(state, "limit", graphs=["edge", "edge", "loop"])
    assert next_node == "error_handler"


@pytest.mark.asyncio
async def test_intervene(state):
    """Test the submodel square of do(B=1) on the chain."""
    new_state, _ = await run(state, "intervene", model="chain", do={"B": "1"})
    result = new_state["result"]
    assert result["intervention"] == "do:B=1"
    assert result["square"]["h"] == {"(0)": "do:B=1:(0)", "(1)": "do:B=1:(1)"}
    assert result["summary"]["U"] == {"1": 2, "1/2": 1, "0": 1}
    assert set(result["recovered"]["U"]) == {"do:B=1:(0)", "do:B=1:(1)"}


@pytest.mark.asyncio
async def test_outcome_with_would(state):
    """Test potential outcomes of C under do(B=1) with the counterfactual check."""
    new_state, _ = await run(state, "outcome", model="binary", variable="C", do={"B": "1"}, value="0")
    result = new_state["result"]
    assert result["outcomes"] == {"(0)": "0", "(1)": "1"}
    assert result["would"] == {"(0)": True, "(1)": False}


@pytest.mark.asyncio
async def test_classify(state):
    """Test classifying a subobject and a subgraph."""
    new_state, _ = await run(state, "classify", subobject="collapse_x")
    assert new_state["result"]["classifying_map"] == {"a": {"p": "1"}, "b": {"x": "1", "y": "1/2"}}

    new_state, _ = await run(state, "classify", subobject="edge_source")
    assert new_state["result"]["edges"] == {"e": "s"}
    assert new_state["result"]["vertices"] == {"v0": "V", "v1": "0_V"}


def test_force_at_representables(corpus_ws):
    """Test forcing excluded middle at every representable stage."""
    result = run_force(corpus_ws, {"formula": "in_x_or_not"})
    rows = {(r["stage"], r["env"]["x"]): r["forces"] for r in result["stages"]}
    assert rows == {("y(a)", "p"): True, ("y(b)", "x"): True, ("y(b)", "y"): False}
    assert all(r["forces"] == r["by_clauses"] for r in result["stages"])


def test_force_at_named_stage_with_trace(corpus_ws):
    """Test forcing at the point through alpha, with a trace."""
    result = run_force(corpus_ws, {"formula": "in_x", "stage": "point",
                                   "elements": ["alpha"], "trace": True})
    assert result["forces"] and result["by_clauses"]
    assert result["elements"] == {"x": "alpha"}
    assert len(result["traces"]) == 1


def test_force_propositional(corpus_ws):
    """Test counterfactual formulas against the model regimes and the weather system."""
    result = run_force(corpus_ws, {"formula": "do_b1_would_c0", "model": "binary"})
    assert result["truth"]["(0)"] and not result["truth"]["(1)"]
    assert result["worlds"]["do:B=1:(1)"] == {"regime": "do:B=1", "exogenous": "(1)"}
    assert result["worlds"]["(0)"] == {"regime": "obs", "exogenous": "(0)"}

    result = run_force(corpus_ws, {"formula": "wet_would_cold", "neighborhoods": "weather"})
    assert result["truth"] == {"w0": True, "w1": True, "w2": False}
    assert "worlds" not in result


def test_force_formula_file(corpus_path, data_path):
    """Test that a formula may come from a file next to the workspace."""
    result = run_force(load(corpus_path), {"formula": str(data_path / "extra_formula.json")})
    assert result["formula"] == "in_x_from_file"


def test_build_topos_picks_up_workspace_names(corpus_ws):
    """Test that only objects on the chosen base become types and arrows."""
    topos = build_topos(corpus_ws, corpus_ws.category("interval"))
    assert {"point", "collapse", "negation"} <= set(topos.types)
    assert "germs" not in topos.types


@pytest.mark.asyncio
async def test_sheaf_check(state):
    """Test that germs glue and the constant presheaf does not."""
    new_state, _ = await run(state, "sheaf-check", presheaf="germs", topology="vee_opens")
    assert new_state["result"]["is_sheaf"]
    new_state, _ = await run(state, "sheaf-check", presheaf="constant_two", topology="vee_opens")
    assert not new_state["result"]["is_sheaf"]


@pytest.mark.asyncio
async def test_axiom_check(state):
    """Test the axiom suite for a model."""
    new_state, _ = await run(state, "axiom-check", object="chain")
    assert new_state["result"]["ok"]
    assert len(new_state["result"]["axioms"]) == 3


@pytest.mark.asyncio
async def test_size_limit_is_a_failure(state):
    """Test that a small --max-enum stops an axiom check."""
    new_state, next_node = await run(state, "axiom-check", object="collapse", max_enum=2)
    assert next_node == "error_handler"
    assert isinstance(new_state["failure"], SizeLimit)


def test_every_command_is_registered():
    """Test the command table."""
    assert set(COMMANDS) == {"limit", "colimit", "intervene", "outcome", "classify", "force",
                             "omega", "sheaf-check", "axiom-check"}

import pytest
from unittest.mock import MagicMock

from src.errors import ValidationError
from src.nodes.workspace_loader import WorkspaceLoaderNode


@pytest.fixture
def state():
    return {"workspace_path": "corpus", "logs": [], "errors": []}


@pytest.mark.asyncio
async def test_loads_workspace(state, corpus_path):
    """Test loading the corpus directory into the state."""
    state["workspace_path"] = str(corpus_path)
    new_state, next_node = await WorkspaceLoaderNode().run(state)

    assert next_node == "command_runner"
    assert "binary" in new_state["workspace"].models
    assert new_state["logs"][0].startswith("Loaded ")
    assert new_state["errors"] == []


@pytest.mark.asyncio
async def test_uses_injected_loader(state):
    """Test that the loader callable receives the workspace path."""
    workspace = MagicMock(documents=[1, 2, 3])
    loader = MagicMock(return_value=workspace)
    new_state, next_node = await WorkspaceLoaderNode(loader=loader).run(state)

    loader.assert_called_once_with("corpus")
    assert next_node == "command_runner"
    assert new_state["workspace"] is workspace
    assert "Loaded 3 documents from corpus" in new_state["logs"]


@pytest.mark.asyncio
async def test_invalid_workspace_routes_to_error_handler(state, data_path):
    """Test that a validation failure is recorded and routed to the error handler."""
    state["workspace_path"] = str(data_path / "cyclic_scm.json")
    new_state, next_node = await WorkspaceLoaderNode().run(state)

    assert next_node == "error_handler"
    assert isinstance(new_state["failure"], ValidationError)
    assert "Workspace loading error" in new_state["errors"][0]
    assert "workspace" not in new_state


@pytest.mark.asyncio
async def test_missing_path(state):
    """Test that an empty path is an error."""
    state["workspace_path"] = ""
    new_state, next_node = await WorkspaceLoaderNode().run(state)

    assert next_node == "error_handler"
    assert "no workspace path given" in new_state["errors"][0]

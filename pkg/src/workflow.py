import asyncio
import logging
from typing import Any, Dict, List, Optional, Tuple, TypedDict

from langgraph.graph import END, StateGraph

from src.nodes.command_runner import CommandRunnerNode
from src.nodes.report_writer import ReportWriterNode
from src.nodes.workspace_loader import WorkspaceLoaderNode

logger = logging.getLogger(__name__)

NODE_NAMES = ("workspace_loader", "command_runner", "report_writer", "error_handler", "complete")


class CommandState(TypedDict, total=False):
    workspace_path: str
    command: str
    args: Dict[str, Any]
    output_path: Optional[str]
    include_timing: bool
    workspace: Any
    result: Dict[str, Any]
    traces: List[Dict[str, Any]]
    timing: Dict[str, float]
    report: str
    failure: Any
    next: str
    logs: List[str]
    errors: List[str]


def _step(node):
    """Adapt a node's ``(state, next)`` pair to a graph node that records ``next``."""

    async def run(state: CommandState) -> CommandState:
        new_state, nxt = await node.run(state)
        new_state["next"] = nxt
        return new_state

    return run


def _route(state: CommandState) -> str:
    return state.get("next", "error_handler")


async def create_workflow():
    """Creates the workflow graph that loads a workspace, runs one command and writes its report."""

    # Initialize nodes
    workspace_loader = WorkspaceLoaderNode()
    command_runner = CommandRunnerNode()
    report_writer = ReportWriterNode()

    workflow = StateGraph(CommandState)

    workflow.add_node("workspace_loader", _step(workspace_loader))
    workflow.add_node("command_runner", _step(command_runner))
    workflow.add_node("report_writer", _step(report_writer))

    async def error_handler(state: CommandState) -> CommandState:
        """Handles errors in the workflow."""
        logger.warning("command failed: %s", state.get("errors", []))
        state["logs"].append("Workflow stopped at error_handler")
        return state

    workflow.add_node("error_handler", error_handler)

    async def complete_handler(state: CommandState) -> CommandState:
        state["logs"].append("Workflow completed successfully")
        return state

    workflow.add_node("complete", complete_handler)

    # every step may hand over to any node; a node's answer picks the edge
    targets = {name: name for name in NODE_NAMES}
    for name in ("workspace_loader", "command_runner", "report_writer"):
        workflow.add_conditional_edges(name, _route, targets)
    workflow.add_edge("error_handler", END)
    workflow.add_edge("complete", END)

    workflow.set_entry_point("workspace_loader")

    return workflow.compile()


async def run_workflow(command: str, args: Optional[Dict[str, Any]] = None,
                       workspace_path: str = "corpus", output_path: Optional[str] = None,
                       include_timing: bool = False) -> Dict[str, Any]:
    """Runs one command against the workspace at ``workspace_path``."""
    try:
        workflow = await create_workflow()

        initial_state: CommandState = {
            "workspace_path": workspace_path,
            "command": command,
            "args": dict(args or {}),
            "output_path": output_path,
            "include_timing": include_timing,
            "logs": [],
            "errors": [],
        }

        return await workflow.ainvoke(initial_state)

    except Exception as e:
        logger.debug("workflow failed", exc_info=True)
        return {
            "workspace_path": workspace_path,
            "command": command,
            "errors": [str(e)],
            "logs": [f"Workflow failed: {e}"],
            "failure": e,
        }


if __name__ == "__main__":
    final = asyncio.run(run_workflow("omega", {"base": "interval"}))
    print(final.get("report") or final["errors"])

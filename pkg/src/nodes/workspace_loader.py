import logging
from typing import Any, Dict, Tuple

from src.workspace import Workspace, load

logger = logging.getLogger(__name__)


class WorkspaceLoaderNode:
    """Node for loading and validating the JSON documents of a workspace."""

    def __init__(self, loader=load):
        self.loader = loader

    async def run(self, state: Dict[str, Any]) -> Tuple[Dict[str, Any], str]:
        """Loads ``state["workspace_path"]`` into ``state["workspace"]``."""
        try:
            path = state["workspace_path"]
            if not path:
                raise ValueError("no workspace path given")
            workspace: Workspace = self.loader(path)
            state["workspace"] = workspace
            state["logs"].append(f"Loaded {len(workspace.documents)} documents from {path}")
            return state, "command_runner"

        except Exception as e:
            logger.debug("workspace loading failed", exc_info=True)
            state["errors"].append(f"Workspace loading error: {e}")
            state["logs"].append(f"Error loading workspace: {e}")
            state["failure"] = e
            return state, "error_handler"

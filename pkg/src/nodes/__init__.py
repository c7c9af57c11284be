"""LangGraph nodes for loading a workspace, running a command and writing its report."""
from .workspace_loader import WorkspaceLoaderNode
from .command_runner import COMMANDS, CommandRunnerNode
from .report_writer import CommandReport, ReportWriterNode

"""Finite presheaf toposes, topos causal models and their internal logic."""
from .workflow import create_workflow, run_workflow
from .workspace import Workspace, load, loads

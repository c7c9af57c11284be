import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)


class CommandReport(BaseModel):
    """What one command did: its inputs, its result and how it got there."""

    command: str
    inputs: Dict[str, Any]
    result: Dict[str, Any]
    traces: List[Dict[str, Any]] = Field(default_factory=list)
    logs: List[str] = Field(default_factory=list)
    timing: Optional[Dict[str, float]] = None

    def to_json(self) -> str:
        # sorted keys keep reports byte-identical across runs
        return json.dumps(self.model_dump(mode="json", exclude_none=True),
                          indent=2, sort_keys=True, ensure_ascii=False)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_jsonable(v) for v in value)
    return value


class ReportWriterNode:
    """Node for turning the command result into a deterministic JSON report."""

    async def run(self, state: Dict[str, Any]) -> Tuple[Dict[str, Any], str]:
        """Builds ``state["report"]`` and writes it to ``state["output_path"]`` if one is set."""
        try:
            report = CommandReport(
                command=state["command"],
                inputs=_jsonable(dict(state.get("args", {}))),
                result=_jsonable(state["result"]),
                traces=_jsonable(state.get("traces", [])),
                logs=list(state["logs"]),
                timing=state.get("timing") if state.get("include_timing") else None,
            )
            state["report"] = report.to_json()

            output_path = state.get("output_path")
            if output_path:
                path = Path(output_path)
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(state["report"] + "\n", encoding="utf-8")
                state["logs"].append(f"Report written to {output_path}")
            else:
                state["logs"].append("Report ready")
            return state, "complete"

        except Exception as e:
            logger.debug("report writing failed", exc_info=True)
            state["errors"].append(f"Report error: {e}")
            state["logs"].append(f"Error writing report: {e}")
            state["failure"] = e
            return state, "error_handler"

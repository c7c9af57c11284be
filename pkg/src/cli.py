"""Command-line entry point: ``python -m src.cli <command> [options]``.

Every command except ``schema`` and ``dump`` runs through the workflow graph
(load the workspace, run the command, write the report) and prints the JSON
report on stdout.
"""
import asyncio
import json
from contextlib import nullcontext
from typing import Any, Dict, Iterable, Optional

import click

from src.config import configure_logging, override_settings
from src.errors import ParseError, SizeLimit, ToposError, ValidationError
from src.workflow import run_workflow
from src.workspace import document_schemas, load

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_SIZE_LIMIT = 3


def exit_code(failure: Optional[BaseException]) -> int:
    if failure is None:
        return EXIT_OK
    if isinstance(failure, (ValidationError, ParseError)):
        return EXIT_INVALID
    if isinstance(failure, SizeLimit):
        return EXIT_SIZE_LIMIT
    return EXIT_ERROR


def parse_assignments(ctx, param, values: Iterable[str]) -> Dict[str, str]:
    """``X=x`` pairs of an intervention."""
    assignments = {}
    for item in values:
        var, sep, value = item.partition("=")
        if not sep or not var or not value:
            raise click.BadParameter(f"expected VAR=VALUE, got {item!r}")
        assignments[var.strip()] = value.strip()
    return assignments


def _error_details(failure: BaseException) -> Dict[str, Any]:
    details: Dict[str, Any] = {"type": type(failure).__name__, "message": str(failure)}
    report = getattr(failure, "report", None)
    if report is not None and hasattr(report, "as_dict"):
        details["report"] = report.as_dict()
    for attr in ("line", "column", "cycle"):
        if getattr(failure, attr, None) is not None:
            details[attr] = getattr(failure, attr)
    return details


def execute(ctx: click.Context, command: str, args: Dict[str, Any]) -> None:
    options = ctx.obj
    args = {k: v for k, v in args.items() if v not in (None, (), [], {}, False)}
    limit = options["max_enum"]
    with override_settings(max_enum=limit) if limit else nullcontext():
        final_state = asyncio.run(run_workflow(
            command, args,
            workspace_path=options["workspace"],
            output_path=options["output"],
            include_timing=options["timing"],
        ))
    failure = final_state.get("failure")
    if failure is None and final_state.get("errors"):
        failure = ToposError("; ".join(final_state["errors"]))
    if failure is not None:
        click.echo(json.dumps({"command": command, "error": _error_details(failure)},
                              indent=2, sort_keys=True, default=str), err=True)
        ctx.exit(exit_code(failure))
    if not options["output"]:
        click.echo(final_state["report"])


@click.group(name="toposcm")
@click.option("--workspace", "-w", default="corpus", show_default=True,
              type=click.Path(), help="JSON file or directory of JSON documents.")
@click.option("--max-enum", type=click.IntRange(min=1), default=None,
              help="Cap on any exhaustive enumeration (overrides TOPOS_MAX_ENUM).")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write the report to this file instead of stdout.")
@click.option("--timing", is_flag=True, help="Include wall-clock timing in the report.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def cli(ctx, workspace, max_enum, output, timing, verbose):
    """Finite presheaf toposes, causal models and their internal logic."""
    configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj.update(workspace=workspace, max_enum=max_enum, output=output, timing=timing)


def _universal_options(fn):
    fn = click.option("--dot", is_flag=True, help="Add Graphviz text for graph results.")(fn)
    fn = click.option("--check", is_flag=True, help="Also verify the universal property.")(fn)
    fn = click.option("--graphs", nargs=2, default=None, help="Two graph names instead of a diagram.")(fn)
    fn = click.option("--diagram", "-d", default=None, help="Diagram name.")(fn)
    return fn


@cli.command()
@_universal_options
@click.pass_context
def limit(ctx, diagram, graphs, check, dot):
    """Limit cone of a diagram, or the product of two graphs."""
    if not diagram and not graphs:
        raise click.UsageError("give --diagram or --graphs")
    execute(ctx, "limit", {"diagram": diagram, "graphs": list(graphs or []), "check": check, "dot": dot})


@cli.command()
@_universal_options
@click.pass_context
def colimit(ctx, diagram, graphs, check, dot):
    """Colimit cocone of a diagram, or the coproduct of two graphs."""
    if not diagram and not graphs:
        raise click.UsageError("give --diagram or --graphs")
    execute(ctx, "colimit", {"diagram": diagram, "graphs": list(graphs or []), "check": check, "dot": dot})


@cli.command()
@click.option("--model", "-m", required=True)
@click.option("--do", "do", multiple=True, callback=parse_assignments, metavar="VAR=VALUE")
@click.pass_context
def intervene(ctx, model, do):
    """Submodel M_x, its square into M and the classifying maps."""
    execute(ctx, "intervene", {"model": model, "do": do})


@cli.command()
@click.option("--model", "-m", required=True)
@click.option("--variable", "-y", required=True)
@click.option("--do", "do", multiple=True, callback=parse_assignments, metavar="VAR=VALUE")
@click.option("--u", "u", default=None, help="One exogenous tuple, e.g. (0,1).")
@click.option("--value", default=None, help="Also evaluate do(X=x) []-> Y=value.")
@click.pass_context
def outcome(ctx, model, variable, do, u, value):
    """Potential outcome Y_x(u)."""
    execute(ctx, "outcome", {"model": model, "variable": variable, "do": do, "u": u, "value": value})


@cli.command()
@click.option("--subobject", "-s", required=True, help="Subobject or subgraph name.")
@click.option("--dot", is_flag=True)
@click.pass_context
def classify(ctx, subobject, dot):
    """Classifying map of a subobject into Omega."""
    execute(ctx, "classify", {"subobject": subobject, "dot": dot})


@cli.command()
@click.option("--formula", "-f", required=True, help="Formula name or a JSON file holding one formula.")
@click.option("--stage", default=None, help="Presheaf used as the stage N.")
@click.option("--elem", "elements", multiple=True, metavar="[VAR=]MORPHISM")
@click.option("--topology", default=None, help="Use the site form of the clauses.")
@click.option("--epi-search", is_flag=True, help="Local clauses over jointly epic sieves.")
@click.option("--trace", is_flag=True, help="Include derivation traces.")
@click.option("--neighborhoods", default=None, help="Neighborhood system for propositional formulas.")
@click.option("--model", "-m", default=None, help="Causal model whose regimes are the worlds.")
@click.option("--world", default=None)
@click.pass_context
def force(ctx, formula, stage, elements, topology, epi_search, trace, neighborhoods, model, world):
    """Kripke-Joyal forcing, or truth in a neighborhood system."""
    execute(ctx, "force", {"formula": formula, "stage": stage, "elements": list(elements),
                           "topology": topology, "epi_search": epi_search, "trace": trace,
                           "neighborhoods": neighborhoods, "model": model, "world": world})


@cli.command()
@click.option("--base", "-b", default="interval", show_default=True)
@click.pass_context
def omega(ctx, base):
    """Truth values at every stage and their restriction tables."""
    execute(ctx, "omega", {"base": base})


@cli.command("sheaf-check")
@click.option("--presheaf", "-p", required=True)
@click.option("--topology", "-t", required=True)
@click.pass_context
def sheaf_check(ctx, presheaf, topology):
    """Topology axioms and the sheaf condition."""
    execute(ctx, "sheaf-check", {"presheaf": presheaf, "topology": topology})


@cli.command("axiom-check")
@click.option("--object", "obj", required=True, help="Any named workspace object.")
@click.pass_context
def axiom_check(ctx, obj):
    """Every axiom check that applies to the object."""
    execute(ctx, "axiom-check", {"object": obj})


@cli.command()
@click.option("--kind", default=None, help="Only this document kind.")
def schema(kind):
    """JSON schemas of the workspace documents."""
    schemas = document_schemas()
    if kind is not None:
        if kind not in schemas:
            raise click.BadParameter(f"unknown kind {kind!r}", param_hint="--kind")
        schemas = schemas[kind]
    click.echo(json.dumps(schemas, indent=2, sort_keys=True))


@cli.command()
@click.pass_context
def dump(ctx):
    """Reserialize the loaded workspace as one JSON list."""
    try:
        ws = load(ctx.obj["workspace"])
    except ToposError as e:
        click.echo(json.dumps({"command": "dump", "error": _error_details(e)},
                              indent=2, sort_keys=True, default=str), err=True)
        ctx.exit(exit_code(e))
    click.echo(ws.to_json())


def main() -> None:
    cli(obj={})


if __name__ == "__main__":
    main()

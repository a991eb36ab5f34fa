"""Command-line interface for cfaudit.

Exit codes: 0 when the command succeeded and reported nothing, 1 when it
reported findings (lint problems, audit violations, a dependent pair), 2 on
usage or input errors.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

import click

from cfaudit.cf_engine import check_cf
from cfaudit.config import DEFAULT_CONFIG_TOML, Config
from cfaudit.errors import CfauditError
from cfaudit.influence import (
    CPT,
    BINARY_OUTCOMES,
    DiagramNode,
    InfluenceDiagram,
    add_arc,
    add_node,
    delete_node,
    infer,
    missing_arc_table,
    noisy_or_cpt,
    remove_arc,
    set_cpt,
    to_joint,
)
from cfaudit.models import StaleReport
from cfaudit.oracle import Event, EvidenceSet, JointModel, audit_modularity
from cfaudit.parsers import (
    DiagramDocument,
    DiagramParser,
    RulebaseDocument,
    RulebaseParser,
    parse_event,
    parse_urn_spec,
    parser_for_path,
)
from cfaudit.parsers.base import read_source
from cfaudit.parsers.urn_parser import is_urn_spec
from cfaudit.rule_network import find_convergent_links, lint_rules, propagate

EXIT_FINDINGS = 1
EXIT_INPUT_ERROR = 2

_FORMATS = click.Choice(["text", "json"])


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package_logger = logging.getLogger("cfaudit")
    package_logger.handlers[:] = [handler]
    package_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _reports_errors(fn: Callable) -> Callable:
    """Turn cfaudit errors into ``Error: ...`` on stderr and exit code 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CfauditError as exc:
            click.echo(f"Error: {exc}", err=True)
            sys.exit(EXIT_INPUT_ERROR)

    return wrapper


def _config(ctx: click.Context) -> Config:
    return ctx.find_object(Config) or Config.load_from_cwd()


def _format(ctx: click.Context, fmt: str | None) -> str:
    return fmt or _config(ctx).output_format


def _emit_json(payload: Any) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _emit_output(text: str, output_file: str | None) -> None:
    """Write text to file or stdout."""
    if output_file:
        Path(output_file).write_text(text + "\n", encoding="utf-8")
        click.echo(f"Written to {output_file}", err=True)
    else:
        click.echo(text)


def _read_rulebase(path: str) -> RulebaseDocument:
    return RulebaseParser().parse_file(Path(path))


def _read_diagram(path: str) -> InfluenceDiagram:
    return DiagramParser().parse_file(Path(path)).to_diagram()


def _write_diagram(d: InfluenceDiagram, path: str) -> None:
    DiagramParser().dump_file(DiagramDocument.from_diagram(d), Path(path))


def _load_model(source: str, config: Config) -> JointModel:
    """A joint model from a ``urn:`` spec or an influence-diagram file."""
    if is_urn_spec(source):
        return parse_urn_spec(source).model(max_assignments=config.max_assignments)
    if not Path(source).is_file():
        raise click.BadParameter(f"no such file: {source}", param_hint="MODEL")
    return to_joint(
        _read_diagram(source),
        tolerance=config.equality_tolerance,
        max_assignments=config.max_assignments,
    )


def _parse_assignments(values: tuple[str, ...], option: str) -> dict[str, str]:
    """``name=value`` pairs from a repeated option."""
    result: dict[str, str] = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise click.BadParameter(f"expected name=value, got {item!r}", param_hint=option)
        result[name.strip()] = value.strip()
    return result


def _parse_probability_options(values: tuple[str, ...], option: str) -> dict[str, float]:
    result: dict[str, float] = {}
    for name, value in _parse_assignments(values, option).items():
        try:
            result[name] = float(value)
        except ValueError:
            raise click.BadParameter(f"{name}: {value!r} is not a number", param_hint=option) from None
    return result


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr")
@click.pass_context
def main(ctx: click.Context, verbose: bool):
    """cfaudit: certainty-factor rule bases, modularity audits and influence diagrams."""
    _configure_logging(verbose)
    ctx.obj = Config.load_from_cwd()


# --------------------------------------------------------------------------- #
# init
# --------------------------------------------------------------------------- #

@main.command()
@click.option("--path", default=".", help="Project root directory")
def init(path: str):
    """Initialise .cfaudit/ with the default configuration."""
    root = Path(path).resolve()
    config_dir = root / ".cfaudit"
    config_file = config_dir / "config.toml"

    if config_dir.exists():
        click.echo(f"Already initialised at {config_dir}")
    else:
        config_dir.mkdir(parents=True)
        click.echo(f"Created {config_dir}")

    if not config_file.exists():
        config_file.write_text(DEFAULT_CONFIG_TOML)
        click.echo(f"Created {config_file}")
    else:
        click.echo(f"Config already exists: {config_file}")


# --------------------------------------------------------------------------- #
# propagate
# --------------------------------------------------------------------------- #

@main.command("propagate")
@click.argument("rulebase", type=click.Path(exists=True, dir_okay=False))
@click.option("--evidence", "-e", multiple=True, help="Leaf CF as name=cf (overrides the file)")
@click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")
@click.pass_context
@_reports_errors
def propagate_cmd(ctx: click.Context, rulebase: str, evidence: tuple[str, ...], fmt: str | None):
    """Propagate evidence CFs through a rule base."""
    doc = _read_rulebase(rulebase)
    asserted = dict(doc.evidence)
    for name, value in _parse_probability_options(evidence, "--evidence").items():
        try:
            asserted[name] = check_cf(value, f"evidence CF for {name}")
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--evidence") from None

    net = doc.network()
    values = propagate(net, asserted)
    hypotheses = {h: values[h] for h in net.hypotheses}

    if _format(ctx, fmt) == "json":
        _emit_json({"evidence": asserted, "hypotheses": hypotheses})
        return

    precision = _config(ctx).precision
    width = max([len("hypothesis"), *(len(h) for h in hypotheses)])
    click.echo(f"{'hypothesis':<{width}}  CF")
    click.echo("-" * (width + 12))
    for name in sorted(hypotheses):
        click.echo(f"{name:<{width}}  {hypotheses[name]:.{precision}g}")


# --------------------------------------------------------------------------- #
# lint
# --------------------------------------------------------------------------- #

@main.command()
@click.argument("rulebase", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")
@click.pass_context
@_reports_errors
def lint(ctx: click.Context, rulebase: str, fmt: str | None):
    """Check a rule base for divergent links and cycles."""
    doc = _read_rulebase(rulebase)
    findings = lint_rules(doc.rules)
    blocking = [f for f in findings if not f.exempt]
    convergent = {} if any(f.kind == "cycle" for f in findings) else find_convergent_links(doc.network())

    if _format(ctx, fmt) == "json":
        _emit_json(
            {
                "findings": [f.to_dict() for f in findings],
                "convergent": {h: list(e) for h, e in convergent.items()},
            }
        )
    else:
        for finding in findings:
            label = "info" if finding.exempt else "error"
            click.echo(f"{label}: {finding.kind} {' -> '.join(finding.subjects)}")
            click.echo(f"    {finding.message}")
        for hypothesis, sources in convergent.items():
            click.echo(
                f"info: convergent links into {hypothesis} from {', '.join(sources)}; "
                "their evidence must be conditionally independent given the hypothesis"
            )
        if not findings:
            click.echo("No divergent links or cycles.")

    if blocking:
        sys.exit(EXIT_FINDINGS)


# --------------------------------------------------------------------------- #
# audit
# --------------------------------------------------------------------------- #

def _default_urn_evidence(model: JointModel) -> list[Event]:
    """One member per draw: the draw shows the first colour."""
    return [
        Event.where(name, outcomes[0])
        for name, outcomes in model.variables
        if name.startswith("draw")
    ]


@main.command()
@click.argument("model")
@click.option("--hypothesis", "-H", required=True, help="Hypothesis event, e.g. urn=1")
@click.option("--evidence", "-e", multiple=True, help="Evidence event (repeatable)")
@click.option(
    "--network",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Rule base whose paths exclude contexts upstream of the evidence",
)
@click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")
@click.pass_context
@_reports_errors
def audit(
    ctx: click.Context,
    model: str,
    hypothesis: str,
    evidence: tuple[str, ...],
    network: str | None,
    fmt: str | None,
):
    """Audit CF(H, E, e) = CF(H, E, {}) over every context of the evidence.

    MODEL is an influence-diagram file or an urn problem written as
    urn:<urns>[;draws=N][;replace=true|false][;priors=p1,p2,...], where each
    urn lists ball counts per colour, e.g. urn:1W2B,2W1B;draws=2;replace=false.
    Without --evidence an urn audit uses "drawK = first colour" for each draw.
    """
    config = _config(ctx)
    joint = _load_model(model, config)
    h = parse_event(hypothesis, "--hypothesis")
    members = [parse_event(e, "--evidence") for e in evidence]
    if not members:
        if not is_urn_spec(model):
            raise click.UsageError("--evidence is required for diagram models")
        members = _default_urn_evidence(joint)
    net = _read_rulebase(network).network() if network else None

    report = audit_modularity(
        joint,
        h,
        EvidenceSet(tuple(members)),
        net=net,
        tolerance=config.violation_tolerance,
    )

    if _format(ctx, fmt) == "json":
        _emit_json(report.to_dict())
    else:
        precision = config.precision
        click.echo(f"Audit of {h}: {report.sites_checked} contexts checked")
        for finding in report.findings:
            click.echo(f"{finding.kind}: evidence {finding.evidence} in context {finding.context}")
            if finding.baseline and finding.contextual:
                click.echo(
                    f"    CF {finding.baseline.cf:.{precision}g} alone, "
                    f"{finding.contextual.cf:.{precision}g} in context "
                    f"(lambda {finding.baseline.likelihood_ratio} vs "
                    f"{finding.contextual.likelihood_ratio})"
                )
            else:
                click.echo(f"    {finding.message}")
        if not report.has_violations:
            click.echo("No modularity violations.")

    if report.has_violations:
        sys.exit(EXIT_FINDINGS)


# --------------------------------------------------------------------------- #
# infer / check-ci
# --------------------------------------------------------------------------- #

@main.command("infer")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.option("--query", "-q", required=True, help="Query event, e.g. Burglary=true")
@click.option("--given", "-g", default="*", help="Conditioning event")
@click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")
@click.pass_context
@_reports_errors
def infer_cmd(ctx: click.Context, diagram: str, query: str, given: str, fmt: str | None):
    """Compute p(query | given) on an influence diagram."""
    d = _read_diagram(diagram)
    q = parse_event(query, "--query")
    g = parse_event(given, "--given")
    p = infer(d, q, g)

    if _format(ctx, fmt) == "json":
        _emit_json({"query": str(q), "given": str(g), "probability": p})
    else:
        click.echo(f"p({q} | {g}) = {p:.{_config(ctx).precision}g}")


@main.command("check-ci")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.option("--a", "node_a", required=True, help="First node")
@click.option("--b", "node_b", required=True, help="Second node")
@click.option("--given", "-g", default="*", help="Mediating event")
@click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")
@click.pass_context
@_reports_errors
def check_ci(ctx: click.Context, diagram: str, node_a: str, node_b: str, given: str, fmt: str | None):
    """Check the independence a missing arc between two nodes asserts."""
    config = _config(ctx)
    d = _read_diagram(diagram)
    g = parse_event(given, "--given")
    table = missing_arc_table(d, node_a, node_b, g)
    independent = all(abs(t - p) <= config.equality_tolerance for _, _, t, p in table)

    if _format(ctx, fmt) == "json":
        _emit_json(
            {
                "a": node_a,
                "b": node_b,
                "given": str(g),
                "independent": independent,
                "rows": [
                    {"a": x, "b": y, "joint": t, "product": p} for x, y, t, p in table
                ],
            }
        )
    else:
        precision = config.precision
        for x, y, together, apart in table:
            click.echo(
                f"p({node_a}={x}, {node_b}={y} | {g}) = {together:.{precision}g}   "
                f"product of marginals = {apart:.{precision}g}"
            )
        verdict = "independent" if independent else "dependent"
        click.echo(f"{node_a} and {node_b} are {verdict} given {g}")

    if not independent:
        sys.exit(EXIT_FINDINGS)


# --------------------------------------------------------------------------- #
# render
# --------------------------------------------------------------------------- #

@main.command()
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--values", "with_values", is_flag=True, help="Show propagated CFs on a rule base")
@click.option("--output", "-o", "output_file", type=click.Path(), default=None, help="Write output to file")
@click.pass_context
@_reports_errors
def render(ctx: click.Context, document: str, with_values: bool, output_file: str | None):
    """Render a rule base (.cfr) or influence diagram (.idg) as a Mermaid flowchart."""
    from cfaudit.diagrams import mermaid_influence_diagram, mermaid_network

    path = Path(document)
    parser = parser_for_path(path)
    if parser is None:
        raise click.BadParameter(f"unknown document type {path.suffix!r}", param_hint="DOCUMENT")
    doc = parser.parse_file(path)
    if isinstance(doc, RulebaseDocument):
        net = doc.network()
        values = propagate(net, doc.evidence) if with_values else None
        text = mermaid_network(net, values, precision=_config(ctx).precision)
    else:
        text = mermaid_influence_diagram(doc.to_diagram())
    _emit_output(text, output_file)


# --------------------------------------------------------------------------- #
# edit
# --------------------------------------------------------------------------- #

@main.group()
def edit():
    """Edit an influence diagram; only nodes whose parents change go stale."""


def _finish_edit(ctx: click.Context, d: InfluenceDiagram, report: StaleReport, target: str, fmt: str | None) -> None:
    _write_diagram(d, target)
    if _format(ctx, fmt) == "json":
        _emit_json({**report.to_dict(), "output": target, "stale": sorted(d.stale)})
        return
    click.echo(f"{report.edited}: wrote {target}")
    click.echo(f"  reassess: {', '.join(sorted(report.stale_nodes)) or 'nothing'}")
    click.echo(f"  unchanged: {', '.join(sorted(report.untouched_nodes)) or 'nothing'}")


def _edit_options(fn: Callable) -> Callable:
    fn = click.option("--format", "fmt", type=_FORMATS, default=None, help="Output format")(fn)
    fn = click.option(
        "--output", "-o", "output_file", type=click.Path(), default=None,
        help="Write the edited diagram here (default: overwrite DIAGRAM)",
    )(fn)
    return fn


@edit.command("add-node")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("name")
@click.option("--outcomes", default=",".join(BINARY_OUTCOMES), help="Comma-separated outcome labels")
@click.option("--parent", "parents", multiple=True, help="Add an arc parent -> NAME")
@click.option("--child", "children", multiple=True, help="Add an arc NAME -> child")
@_edit_options
@click.pass_context
@_reports_errors
def edit_add_node(
    ctx: click.Context,
    diagram: str,
    name: str,
    outcomes: str,
    parents: tuple[str, ...],
    children: tuple[str, ...],
    output_file: str | None,
    fmt: str | None,
):
    """Add a proposition NAME with its arcs."""
    d = _read_diagram(diagram)
    node = DiagramNode(name, tuple(o.strip() for o in outcomes.split(",") if o.strip()))
    arcs = [(p, name) for p in parents] + [(name, c) for c in children]
    d, report = add_node(d, node, arcs)
    _finish_edit(ctx, d, report, output_file or diagram, fmt)


@edit.command("delete-node")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("name")
@_edit_options
@click.pass_context
@_reports_errors
def edit_delete_node(ctx: click.Context, diagram: str, name: str, output_file: str | None, fmt: str | None):
    """Delete the proposition NAME and its arcs."""
    d, report = delete_node(_read_diagram(diagram), name)
    _finish_edit(ctx, d, report, output_file or diagram, fmt)


@edit.command("add-arc")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("parent")
@click.argument("child")
@_edit_options
@click.pass_context
@_reports_errors
def edit_add_arc(ctx: click.Context, diagram: str, parent: str, child: str, output_file: str | None, fmt: str | None):
    """Add the arc PARENT -> CHILD."""
    d, report = add_arc(_read_diagram(diagram), parent, child)
    _finish_edit(ctx, d, report, output_file or diagram, fmt)


@edit.command("remove-arc")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("parent")
@click.argument("child")
@_edit_options
@click.pass_context
@_reports_errors
def edit_remove_arc(ctx: click.Context, diagram: str, parent: str, child: str, output_file: str | None, fmt: str | None):
    """Remove the arc PARENT -> CHILD."""
    d, report = remove_arc(_read_diagram(diagram), parent, child)
    _finish_edit(ctx, d, report, output_file or diagram, fmt)


def _install_cpt(ctx: click.Context, d: InfluenceDiagram, cpt: CPT, target: str, fmt: str | None) -> None:
    d = set_cpt(d, cpt, tolerance=_config(ctx).equality_tolerance)
    report = StaleReport(
        edited=f"set cpt {cpt.node}",
        stale_nodes=frozenset(),
        untouched_nodes=frozenset(d.names),
    )
    _finish_edit(ctx, d, report, target, fmt)
    if _format(ctx, fmt) == "text" and d.stale:
        click.echo(f"  still stale: {', '.join(sorted(d.stale))}")


@edit.command("set-cpt")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("node")
@click.option(
    "--cpt-file",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help='JSON object {"parents": [...], "rows": {...}} in the diagram file format',
)
@_edit_options
@click.pass_context
@_reports_errors
def edit_set_cpt(ctx: click.Context, diagram: str, node: str, cpt_file: str, output_file: str | None, fmt: str | None):
    """Install a reassessed distribution for NODE."""
    d = _read_diagram(diagram)
    path = Path(cpt_file)
    cpt = DiagramParser().parse_cpt(node, read_source(path), d, source=str(path))
    _install_cpt(ctx, d, cpt, output_file or diagram, fmt)


@edit.command("noisy-or")
@click.argument("diagram", type=click.Path(exists=True, dir_okay=False))
@click.argument("node")
@click.option("--q", "inhibitors", multiple=True, required=True, help="cause=p(~NODE | only cause present)")
@click.option("--leak", type=float, default=1.0, show_default=True, help="p(~NODE | no cause present)")
@click.option("--strict-leak", is_flag=True, help="Multiply the leak into every row")
@_edit_options
@click.pass_context
@_reports_errors
def edit_noisy_or(
    ctx: click.Context,
    diagram: str,
    node: str,
    inhibitors: tuple[str, ...],
    leak: float,
    strict_leak: bool,
    output_file: str | None,
    fmt: str | None,
):
    """Build NODE's distribution as a noisy-OR of its parents.

    The first outcome of NODE and of each parent is the "present" state.
    """
    d = _read_diagram(diagram)
    target = d.node(node)
    q = _parse_probability_options(inhibitors, "--q")
    causes = d.parents(node)
    unknown = sorted(set(q) - set(causes))
    if unknown:
        raise click.BadParameter(f"not parents of {node}: {', '.join(unknown)}", param_hint="--q")
    cpt = noisy_or_cpt(
        target,
        causes,
        q,
        leak=leak,
        strict_leak=strict_leak,
        cause_outcomes={c: d.node(c).outcomes for c in causes},
    )
    _install_cpt(ctx, d, cpt, output_file or diagram, fmt)

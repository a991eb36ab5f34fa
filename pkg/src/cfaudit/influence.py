"""Influence diagrams with chance nodes only.

The upper level is a DAG of propositions; the lower level holds one
conditional probability table per node, conditioned on the node's parents.
Inference enumerates the factored joint through :mod:`cfaudit.oracle`.

Diagrams are immutable values.  Structural edits return a new diagram plus a
:class:`StaleReport`: only nodes whose incoming arcs changed lose their CPT
and become stale, every other CPT object is carried over as is.  A diagram
with stale nodes refuses inference until the stale CPTs are reassessed with
:func:`set_cpt`.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx

from cfaudit.cf_engine import EQUALITY_TOLERANCE
from cfaudit.errors import DiagramError, IncompleteDiagramError
from cfaudit.models import StaleReport, ValidationFinding
from cfaudit.oracle import MAX_ASSIGNMENTS, UNIVERSAL_EVENT, Event, JointModel

logger = logging.getLogger(__name__)

Arc = tuple[str, str]
BINARY_OUTCOMES: tuple[str, str] = ("true", "false")


@dataclass(frozen=True)
class DiagramNode:
    name: str
    outcomes: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if len(self.outcomes) < 2:
            raise DiagramError(f"node {self.name!r} needs at least two outcomes")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise DiagramError(f"node {self.name!r} repeats an outcome label")


@dataclass(frozen=True, eq=True)
class CPT:
    """p(node | parents).

    ``rows`` maps each parent-outcome tuple (parents in canonical, i.e.
    lexicographic, order) to a probability vector over the node's outcomes.
    A node without parents has the single row ``()``.
    """

    node: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], tuple[float, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(
            self,
            "rows",
            {tuple(k): tuple(float(p) for p in v) for k, v in self.rows.items()},
        )

    __hash__ = None  # type: ignore[assignment]

    def probability(self, outcome_index: int, parent_outcomes: tuple[str, ...]) -> float:
        return self.rows[parent_outcomes][outcome_index]


@dataclass(frozen=True)
class InfluenceDiagram:
    nodes: tuple[DiagramNode, ...] = ()
    arcs: frozenset[Arc] = frozenset()
    cpts: Mapping[str, CPT] = field(default_factory=dict)
    stale: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.name)))
        object.__setattr__(self, "arcs", frozenset(tuple(a) for a in self.arcs))
        object.__setattr__(self, "cpts", dict(self.cpts))
        object.__setattr__(self, "stale", frozenset(self.stale))

    __hash__ = None  # type: ignore[assignment]

    # --- structure ---
    @cached_property
    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(n.name for n in self.nodes)
        graph.add_edges_from(self.arcs)
        return graph

    @cached_property
    def _by_name(self) -> dict[str, DiagramNode]:
        return {n.name: n for n in self.nodes}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    def node(self, name: str) -> DiagramNode:
        try:
            return self._by_name[name]
        except KeyError:
            raise DiagramError(f"unknown node {name!r}") from None

    def parents(self, name: str) -> tuple[str, ...]:
        """Incoming-arc sources in canonical order."""
        return tuple(sorted(p for p, c in self.arcs if c == name))

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(sorted(c for p, c in self.arcs if p == name))

    @property
    def is_complete(self) -> bool:
        return not self.stale


def parent_configurations(d: InfluenceDiagram, parents: Sequence[str]) -> list[tuple[str, ...]]:
    return list(itertools.product(*(d.node(p).outcomes for p in parents)))


# ---------------------------------------------------------------------- #
# Validation
# ---------------------------------------------------------------------- #


def _cpt_findings(
    d: InfluenceDiagram,
    cpt: CPT,
    tolerance: float = EQUALITY_TOLERANCE,
) -> list[ValidationFinding]:
    name = cpt.node
    node = d.node(name)
    findings: list[ValidationFinding] = []
    expected_parents = d.parents(name)
    if cpt.parents != expected_parents:
        findings.append(
            ValidationFinding(
                "parent-mismatch",
                name,
                f"CPT parents {list(cpt.parents)} do not match incoming arcs {list(expected_parents)}",
            )
        )
        return findings

    expected = set(parent_configurations(d, cpt.parents))
    for config in sorted(expected - set(cpt.rows)):
        findings.append(
            ValidationFinding("missing-row", name, f"missing parent configuration {','.join(config)}")
        )
    for config in sorted(set(cpt.rows) - expected):
        findings.append(
            ValidationFinding("extra-row", name, f"unknown parent configuration {','.join(config)}")
        )
    for config in sorted(set(cpt.rows) & expected):
        row = cpt.rows[config]
        label = ",".join(config) or "(prior)"
        if len(row) != len(node.outcomes):
            findings.append(
                ValidationFinding(
                    "row-length",
                    name,
                    f"row {label} has {len(row)} entries for {len(node.outcomes)} outcomes",
                )
            )
            continue
        if any(math.isnan(p) or not 0.0 <= p <= 1.0 for p in row):
            findings.append(ValidationFinding("out-of-range", name, f"row {label} has entries outside [0, 1]"))
        total = math.fsum(row)
        if abs(total - 1.0) > tolerance:
            findings.append(
                ValidationFinding("not-normalized", name, f"row {label} sums to {total!r}")
            )
    return findings


def validate(d: InfluenceDiagram, tolerance: float = EQUALITY_TOLERANCE) -> list[ValidationFinding]:
    """Structural and numerical problems with *d*; empty when it is usable."""
    findings: list[ValidationFinding] = []
    names = set(d.names)

    for parent, child in sorted(d.arcs):
        for end in (parent, child):
            if end not in names:
                findings.append(
                    ValidationFinding("unknown-node", end, f"arc {parent}->{child} references unknown node {end!r}")
                )
    if findings:
        return findings

    for cycle in sorted(sorted(c) for c in nx.simple_cycles(d.graph)):
        findings.append(ValidationFinding("cycle", cycle[0], "arcs form a cycle through " + ", ".join(cycle)))

    for name in sorted(set(d.cpts) - names):
        findings.append(ValidationFinding("unknown-node", name, f"CPT for unknown node {name!r}"))

    for name in d.names:
        if name in d.stale:
            findings.append(ValidationFinding("stale", name, "distribution awaits reassessment"))
            continue
        cpt = d.cpts.get(name)
        if cpt is None:
            findings.append(ValidationFinding("missing-cpt", name, "no distribution for node"))
            continue
        findings.extend(_cpt_findings(d, cpt, tolerance))
    return findings


# ---------------------------------------------------------------------- #
# Inference
# ---------------------------------------------------------------------- #


def to_joint(
    d: InfluenceDiagram,
    tolerance: float = EQUALITY_TOLERANCE,
    max_assignments: int = MAX_ASSIGNMENTS,
) -> JointModel:
    """Factored joint: each assignment weighs the product of its CPT entries."""
    if d.stale:
        raise IncompleteDiagramError(f"diagram incomplete: stale nodes {', '.join(sorted(d.stale))}")
    problems = validate(d, tolerance)
    if problems:
        raise DiagramError("invalid diagram: " + "; ".join(f.message for f in problems))

    index = {n.name: {o: i for i, o in enumerate(n.outcomes)} for n in d.nodes}
    factors = [(name, d.parents(name), d.cpts[name]) for name in d.names]

    def weight(assignment: Mapping[str, str]) -> float:
        p = 1.0
        for name, parents, cpt in factors:
            key = tuple(assignment[q] for q in parents)
            p *= cpt.probability(index[name][assignment[name]], key)
            if p == 0:
                return 0.0
        return p

    variables = [(n.name, n.outcomes) for n in d.nodes]
    # each row may be off by the tolerance, and the errors add up across factors
    return JointModel.from_function(
        variables,
        weight,
        tolerance=tolerance * max(1, len(d.nodes)),
        max_assignments=max_assignments,
    )


def infer(d: InfluenceDiagram, query: Event, given: Event = UNIVERSAL_EVENT) -> float:
    """p(query | given) by enumeration of the factored joint."""
    return to_joint(d).conditional(query, given)


def missing_arc_table(
    d: InfluenceDiagram,
    a: str,
    b: str,
    mediators: Event = UNIVERSAL_EVENT,
) -> list[tuple[str, str, float, float]]:
    """``(x, y, p(a=x, b=y | m), p(a=x | m) * p(b=y | m))`` for every outcome pair."""
    d.node(a)
    d.node(b)
    if (a, b) in d.arcs or (b, a) in d.arcs:
        raise DiagramError(f"not a missing-arc pair: {a} and {b} are connected")
    joint = to_joint(d)
    table = []
    for x in d.node(a).outcomes:
        for y in d.node(b).outcomes:
            ex, ey = Event.where(a, x), Event.where(b, y)
            together = joint.conditional(ex & ey, mediators)
            apart = joint.conditional(ex, mediators) * joint.conditional(ey, mediators)
            table.append((x, y, together, apart))
    return table


def check_missing_arc_ci(
    d: InfluenceDiagram,
    a: str,
    b: str,
    mediators: Event = UNIVERSAL_EVENT,
    tolerance: float = EQUALITY_TOLERANCE,
) -> bool:
    """Do *a* and *b* factorise given *mediators*, as the missing arc asserts?"""
    for x, y, together, apart in missing_arc_table(d, a, b, mediators):
        if abs(together - apart) > tolerance:
            logger.debug("%s=%s, %s=%s: %.6g vs %.6g", a, x, b, y, together, apart)
            return False
    return True


# ---------------------------------------------------------------------- #
# Weak-modularity edits
# ---------------------------------------------------------------------- #


def _incoming(arcs: Iterable[Arc]) -> dict[str, frozenset[str]]:
    incoming: dict[str, set[str]] = {}
    for parent, child in arcs:
        incoming.setdefault(child, set()).add(parent)
    return {k: frozenset(v) for k, v in incoming.items()}


def _rebuild(
    d: InfluenceDiagram,
    nodes: Sequence[DiagramNode],
    arcs: frozenset[Arc],
    description: str,
    fresh: Iterable[str] = (),
) -> tuple[InfluenceDiagram, StaleReport]:
    names = {n.name for n in nodes}
    graph = nx.DiGraph()
    graph.add_nodes_from(names)
    graph.add_edges_from(arcs)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = [u for u, _ in nx.find_cycle(graph)]
        raise DiagramError(f"{description} would create a cycle through {', '.join(cycle)}")

    before, after = _incoming(d.arcs), _incoming(arcs)
    changed = {
        name for name in names if before.get(name, frozenset()) != after.get(name, frozenset())
    }
    changed |= set(fresh)
    cpts = {name: cpt for name, cpt in d.cpts.items() if name in names and name not in changed}
    stale = (set(d.stale) & names) | changed
    diagram = InfluenceDiagram(nodes=tuple(nodes), arcs=arcs, cpts=cpts, stale=frozenset(stale))
    report = StaleReport(
        edited=description,
        stale_nodes=frozenset(changed),
        untouched_nodes=frozenset(names - changed),
    )
    logger.info("%s: stale %s", description, ", ".join(sorted(changed)) or "none")
    return diagram, report


def add_node(
    d: InfluenceDiagram,
    node: DiagramNode,
    new_arcs: Iterable[Arc] = (),
) -> tuple[InfluenceDiagram, StaleReport]:
    """Add *node* and *new_arcs*; the node and every child gaining a parent go stale."""
    if node.name in d.names:
        raise DiagramError(f"node {node.name!r} already exists")
    new_arcs = frozenset(tuple(a) for a in new_arcs)
    known = set(d.names) | {node.name}
    for parent, child in new_arcs:
        for end in (parent, child):
            if end not in known:
                raise DiagramError(f"arc {parent}->{child} references unknown node {end!r}")
    return _rebuild(
        d,
        d.nodes + (node,),
        d.arcs | new_arcs,
        f"add node {node.name}",
        fresh=(node.name,),
    )


def delete_node(d: InfluenceDiagram, name: str) -> tuple[InfluenceDiagram, StaleReport]:
    """Remove *name* and its arcs; its former children go stale."""
    d.node(name)
    nodes = tuple(n for n in d.nodes if n.name != name)
    arcs = frozenset(a for a in d.arcs if name not in a)
    return _rebuild(d, nodes, arcs, f"delete node {name}")


def add_arc(d: InfluenceDiagram, parent: str, child: str) -> tuple[InfluenceDiagram, StaleReport]:
    d.node(parent)
    d.node(child)
    if (parent, child) in d.arcs:
        raise DiagramError(f"arc {parent}->{child} already exists")
    return _rebuild(d, d.nodes, d.arcs | {(parent, child)}, f"add arc {parent}->{child}")


def remove_arc(d: InfluenceDiagram, parent: str, child: str) -> tuple[InfluenceDiagram, StaleReport]:
    if (parent, child) not in d.arcs:
        raise DiagramError(f"no arc {parent}->{child}")
    return _rebuild(d, d.nodes, d.arcs - {(parent, child)}, f"remove arc {parent}->{child}")


def set_cpt(d: InfluenceDiagram, cpt: CPT, tolerance: float = EQUALITY_TOLERANCE) -> InfluenceDiagram:
    """Install a reassessed distribution and clear the node's stale flag."""
    d.node(cpt.node)
    if cpt.parents != d.parents(cpt.node):
        raise DiagramError(
            f"CPT does not match incoming arcs: {list(cpt.parents)} vs {list(d.parents(cpt.node))}"
        )
    problems = _cpt_findings(d, cpt, tolerance)
    if problems:
        raise DiagramError("; ".join(f.message for f in problems))
    if cpt.node not in d.stale and d.cpts.get(cpt.node) == cpt:
        return d
    cpts = dict(d.cpts)
    cpts[cpt.node] = cpt
    logger.info("installed CPT for %s", cpt.node)
    return InfluenceDiagram(nodes=d.nodes, arcs=d.arcs, cpts=cpts, stale=d.stale - {cpt.node})


# ---------------------------------------------------------------------- #
# Noisy-OR
# ---------------------------------------------------------------------- #


def noisy_or_cpt(
    node: DiagramNode,
    causes: Sequence[str],
    q: Mapping[str, float],
    leak: float = 1.0,
    strict_leak: bool = False,
    cause_outcomes: Mapping[str, Sequence[str]] | None = None,
) -> CPT:
    """Build a binary node's CPT from single-cause inhibition probabilities.

    ``q[c]`` is p(~node | only c active) and ``leak`` is p(~node | no cause
    active).  For an active set S, p(~node | S) is the product of q over S;
    the leak enters only the all-inactive row unless *strict_leak*, which
    multiplies it into every row.  Without *strict_leak* every q must be at
    most the leak, so activating a cause never lowers p(node).  The first
    outcome of the node and of each cause is the "present" state.
    """
    if len(node.outcomes) != 2:
        raise DiagramError(f"noisy-OR needs a binary node, {node.name!r} has {len(node.outcomes)} outcomes")
    if len(set(causes)) != len(causes):
        raise DiagramError("causes must be distinct")
    for cause in causes:
        if cause not in q:
            raise DiagramError(f"no inhibition probability for cause {cause!r}")
    for label, value in [*((f"q[{c}]", q[c]) for c in causes), ("leak", leak)]:
        if math.isnan(value) or not 0.0 <= value <= 1.0:
            raise DiagramError(f"{label} must lie in [0, 1], got {value!r}")
    if not strict_leak:
        for cause in causes:
            if q[cause] > leak:
                raise DiagramError(
                    f"q[{cause}] = {q[cause]!r} exceeds leak = {leak!r}: "
                    f"activating {cause!r} would make {node.name!r} less likely"
                )

    cause_outcomes = cause_outcomes or {}
    parents = tuple(sorted(causes))
    domains = [tuple(cause_outcomes.get(c, BINARY_OUTCOMES)) for c in parents]
    for cause, domain in zip(parents, domains):
        if len(domain) != 2:
            raise DiagramError(f"cause {cause!r} must be binary")

    rows: dict[tuple[str, ...], tuple[float, float]] = {}
    for config in itertools.product(*domains):
        active = [c for c, value, domain in zip(parents, config, domains) if value == domain[0]]
        absent = math.prod(q[c] for c in active)
        if strict_leak or not active:
            absent *= leak
        rows[config] = (1.0 - absent, absent)
    return CPT(node=node.name, parents=parents, rows=rows)

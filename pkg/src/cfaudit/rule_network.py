"""Inference networks: CF-weighted IF/THEN rules over binary propositions.

A network is the directed graph whose arcs run from every proposition in a
rule's antecedent to the rule's consequent.  Propagation walks that graph in
topological order; the lints flag structures on which modular CF propagation
cannot be consistent.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Mapping, Sequence, Union

import networkx as nx

from cfaudit.cf_engine import (
    CertaintyFactor,
    chain_sequential,
    check_cf,
    combine_all,
    combine_antecedent,
)
from cfaudit.errors import ContradictionError, CycleError, NetworkError
from cfaudit.models import TopologyFinding

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------- #
# Antecedent expressions
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Compound:
    op: Literal["and", "or"]
    parts: tuple["Expr", ...]

    def __post_init__(self) -> None:
        if self.op not in ("and", "or"):
            raise NetworkError(f"unknown connective {self.op!r}")
        if len(self.parts) < 2:
            raise NetworkError("a compound antecedent needs at least two parts")

    def __str__(self) -> str:
        joiner = f" {self.op.upper()} "
        return joiner.join(
            f"({p})" if isinstance(p, Compound) else str(p) for p in self.parts
        )


Expr = Union[Atom, Compound]


def propositions_in(expr: Expr) -> tuple[str, ...]:
    """Proposition names in *expr*, first occurrence order, no duplicates."""
    seen: dict[str, None] = {}
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            seen.setdefault(node.name, None)
        else:
            stack.extend(reversed(node.parts))
    return tuple(seen)


def evaluate(expr: Expr, values: Mapping[str, CertaintyFactor]) -> CertaintyFactor:
    if isinstance(expr, Atom):
        return values.get(expr.name, 0.0)
    return combine_antecedent(expr.op, [evaluate(p, values) for p in expr.parts])


# ---------------------------------------------------------------------- #
# Rules and networks
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class Rule:
    """IF antecedent THEN consequent, with CF attached."""

    id: str
    antecedent: Expr
    consequent: str
    cf: CertaintyFactor

    def __post_init__(self) -> None:
        try:
            check_cf(self.cf, f"CF of rule {self.id}")
        except ValueError as exc:
            raise NetworkError(str(exc)) from exc
        if self.consequent in propositions_in(self.antecedent):
            raise NetworkError(
                f"rule {self.id}: consequent {self.consequent!r} appears in its own antecedent"
            )

    @property
    def evidence(self) -> tuple[str, ...]:
        return propositions_in(self.antecedent)

    def __str__(self) -> str:
        return f"{self.id}: IF {self.antecedent} THEN {self.consequent} CF {self.cf!r}"


def _rule_graph(rules: Iterable[Rule]) -> nx.DiGraph:
    graph = nx.DiGraph()
    for rule in rules:
        graph.add_node(rule.consequent)
        for prop in rule.evidence:
            graph.add_node(prop)
            if graph.has_edge(prop, rule.consequent):
                graph.edges[prop, rule.consequent]["rules"].append(rule.id)
            else:
                graph.add_edge(prop, rule.consequent, rules=[rule.id])
    return graph


@dataclass(frozen=True)
class InferenceNetwork:
    rules: tuple[Rule, ...]
    graph: nx.DiGraph = field(compare=False, repr=False)

    @property
    def propositions(self) -> tuple[str, ...]:
        return tuple(sorted(self.graph.nodes))

    @property
    def hypotheses(self) -> tuple[str, ...]:
        """Propositions with at least one rule pointing into them."""
        return tuple(sorted(n for n in self.graph.nodes if self.graph.in_degree(n) > 0))

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(sorted(n for n in self.graph.nodes if self.graph.in_degree(n) == 0))

    @cached_property
    def _rules_by_consequent(self) -> dict[str, list[Rule]]:
        index: dict[str, list[Rule]] = defaultdict(list)
        for rule in sorted(self.rules, key=lambda r: r.id):
            index[rule.consequent].append(rule)
        return index

    def rules_into(self, proposition: str) -> list[Rule]:
        return list(self._rules_by_consequent.get(proposition, []))

    def rules_from(self, proposition: str) -> list[Rule]:
        return sorted((r for r in self.rules if proposition in r.evidence), key=lambda r: r.id)

    def topological_order(self) -> list[str]:
        return list(nx.lexicographical_topological_sort(self.graph))

    def has_path(self, source: str, target: str) -> bool:
        if source not in self.graph or target not in self.graph:
            return False
        return nx.has_path(self.graph, source, target)


def build_network(rules: Sequence[Rule]) -> InferenceNetwork:
    """Validate *rules* and assemble them into an acyclic network."""
    seen: set[str] = set()
    for rule in rules:
        if rule.id in seen:
            raise NetworkError(f"duplicate rule id {rule.id!r}")
        seen.add(rule.id)

    graph = _rule_graph(rules)
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        raise CycleError([u for u, _ in cycle] + [cycle[0][0]])

    logger.debug("built network: %d rules, %d propositions", len(rules), graph.number_of_nodes())
    return InferenceNetwork(rules=tuple(rules), graph=graph)


# ---------------------------------------------------------------------- #
# Propagation
# ---------------------------------------------------------------------- #


def propagate(
    net: InferenceNetwork,
    evidence: Mapping[str, CertaintyFactor],
) -> dict[str, CertaintyFactor]:
    """Propagate leaf CFs to every proposition of *net*.

    Each rule contributes ``chain_sequential(rule.cf, antecedent CF)``; the
    contributions into one consequent are merged with the parallel
    combination.  Propositions nothing bears on keep CF 0.
    """
    leaves = set(net.leaves)
    for name, cf in evidence.items():
        if name not in net.graph:
            raise NetworkError(f"evidence names unknown proposition {name!r}")
        if name not in leaves:
            raise NetworkError(f"evidence asserted on derived proposition {name!r}")
        check_cf(cf, f"evidence CF for {name}")

    values: dict[str, CertaintyFactor] = {}
    for node in net.topological_order():
        if node in leaves:
            values[node] = float(evidence.get(node, 0.0))
            continue
        contributions = []
        for rule in net.rules_into(node):
            antecedent_cf = evaluate(rule.antecedent, values)
            contribution = chain_sequential(rule.cf, antecedent_cf)
            logger.debug("rule %s: antecedent %.6g -> %.6g", rule.id, antecedent_cf, contribution)
            contributions.append(contribution)
        try:
            values[node] = combine_all(contributions)
        except ContradictionError as exc:
            raise ContradictionError(f"{exc} for hypothesis {node!r}") from exc
    return values


# ---------------------------------------------------------------------- #
# Topology lints
# ---------------------------------------------------------------------- #


def _divergent_message(evidence: str, targets: Sequence[str], crowded: Sequence[str]) -> str:
    if not crowded:
        return (
            f"{evidence!r} bears on {', '.join(targets)}; no other rules bear on "
            "these hypotheses, so the rules can still be propagated consistently"
        )
    return (
        f"{evidence!r} bears on several hypotheses ({', '.join(targets)}) while other rules "
        f"also bear on {', '.join(crowded)}. Once the other evidence is known it changes how "
        f"much {evidence!r} supports each hypothesis, so no fixed CF on these rules can be "
        "propagated consistently"
    )


def find_divergent_links(net: InferenceNetwork) -> list[TopologyFinding]:
    """One finding per proposition whose rules reach two or more consequents."""
    findings: list[TopologyFinding] = []
    for evidence in net.propositions:
        outgoing = net.rules_from(evidence)
        targets = sorted({r.consequent for r in outgoing})
        if len(targets) < 2:
            continue
        own_ids = {r.id for r in outgoing}
        crowded = [
            t for t in targets if any(r.id not in own_ids for r in net.rules_into(t))
        ]
        findings.append(
            TopologyFinding(
                kind="divergent-link",
                subjects=(evidence, *targets),
                exempt=not crowded,
                message=_divergent_message(evidence, targets, crowded),
            )
        )
    return findings


def find_convergent_links(net: InferenceNetwork) -> dict[str, tuple[str, ...]]:
    """Hypotheses with more than one rule bearing on them, with their evidence.

    Propagation here is consistent only if the evidence is conditionally
    independent given the hypothesis and its negation; the oracle checks that.
    """
    result: dict[str, tuple[str, ...]] = {}
    for hypothesis in net.hypotheses:
        rules = net.rules_into(hypothesis)
        if len(rules) < 2:
            continue
        sources: dict[str, None] = {}
        for rule in rules:
            for prop in rule.evidence:
                sources.setdefault(prop, None)
        result[hypothesis] = tuple(sources)
        logger.info("convergent links into %s from %s", hypothesis, ", ".join(sources))
    return result


def lint_rules(rules: Sequence[Rule]) -> list[TopologyFinding]:
    """Lint a rule set without requiring it to form a valid network.

    Cycles are reported as findings; divergent links are only checked on an
    acyclic rule set.
    """
    graph = _rule_graph(rules)
    cycles = sorted(sorted(c) for c in nx.simple_cycles(graph))
    if cycles:
        return [
            TopologyFinding(
                kind="cycle",
                subjects=tuple(cycle),
                exempt=False,
                message="rules form a cycle through " + ", ".join(cycle),
            )
            for cycle in cycles
        ]
    return find_divergent_links(build_network(rules))

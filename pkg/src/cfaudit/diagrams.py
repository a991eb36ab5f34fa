"""Mermaid flowcharts for inference networks and influence diagrams."""

from __future__ import annotations

import hashlib
import re
from typing import Mapping

from cfaudit.cf_engine import CertaintyFactor
from cfaudit.influence import InfluenceDiagram
from cfaudit.rule_network import InferenceNetwork, find_divergent_links

DIVERGENT_STYLE = "fill:#f96,stroke:#333,stroke-width:2px"
EXEMPT_STYLE = "fill:#ffd,stroke:#333,stroke-dasharray:4"
STALE_STYLE = "fill:#ddd,stroke:#c00,stroke-dasharray:4"


def _sanitize_id(name: str) -> str:
    """Mermaid-safe node id, with a short stable digest to keep ids distinct."""
    base = re.sub(r"[^a-zA-Z0-9_]", "_", name)
    digest = hashlib.sha1(name.encode("utf-8")).hexdigest()[:4]
    return f"{base}_{digest}"


def _label(text: str) -> str:
    return text.replace('"', "#quot;")


# ---------------------------------------------------------------------- #
# Inference networks
# ---------------------------------------------------------------------- #


def mermaid_network(
    net: InferenceNetwork,
    values: Mapping[str, CertaintyFactor] | None = None,
    precision: int = 6,
) -> str:
    """Flowchart of *net*: one arc per rule, labelled with the rule's CF.

    Evidence with divergent links is highlighted; exempt cases get a lighter
    style.  With *values* each proposition also shows its propagated CF.
    """
    lines = ["flowchart LR"]
    for prop in net.propositions:
        label = prop
        if values is not None and prop in values:
            label = f"{prop}<br/>CF {values[prop]:.{precision}g}"
        lines.append(f'    {_sanitize_id(prop)}["{_label(label)}"]')

    for rule in sorted(net.rules, key=lambda r: r.id):
        for prop in rule.evidence:
            lines.append(
                f'    {_sanitize_id(prop)} -->|"{_label(rule.id)}: {rule.cf:g}"| '
                f"{_sanitize_id(rule.consequent)}"
            )

    for finding in find_divergent_links(net):
        style = EXEMPT_STYLE if finding.exempt else DIVERGENT_STYLE
        lines.append(f"    style {_sanitize_id(finding.subjects[0])} {style}")

    return "\n".join(lines)


# ---------------------------------------------------------------------- #
# Influence diagrams
# ---------------------------------------------------------------------- #


def mermaid_influence_diagram(d: InfluenceDiagram) -> str:
    """Flowchart of *d*'s arcs; nodes whose distribution is stale are marked."""
    lines = ["flowchart LR"]
    for node in d.nodes:
        label = f"{node.name}<br/>{' / '.join(node.outcomes)}"
        lines.append(f'    {_sanitize_id(node.name)}["{_label(label)}"]')
    for parent, child in sorted(d.arcs):
        lines.append(f"    {_sanitize_id(parent)} --> {_sanitize_id(child)}")
    for name in sorted(d.stale):
        lines.append(f"    style {_sanitize_id(name)} {STALE_STYLE}")
    return "\n".join(lines)

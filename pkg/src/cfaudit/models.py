"""Shared finding and report models used across the cfaudit package."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

from cfaudit.cf_engine import CertaintyFactor, LikelihoodRatio

if TYPE_CHECKING:
    from cfaudit.oracle import Event


TopologyKind = Literal["divergent-link", "cycle"]
AuditKind = Literal["modularity-violation", "ci-violation", "undefined-context"]
ValidationKind = Literal[
    "cycle",
    "unknown-node",
    "missing-cpt",
    "parent-mismatch",
    "missing-row",
    "extra-row",
    "row-length",
    "out-of-range",
    "not-normalized",
    "stale",
]

# Sites are (evidence, context) rendered as text so they sort deterministically.
Site = tuple[str, str]


def ratio_to_json(ratio: LikelihoodRatio) -> float | str:
    """Finite ratios as numbers, infinity as the ``inf`` token."""
    if ratio.undefined:
        return "undefined"
    if ratio.is_infinite:
        return "inf"
    return ratio.value


# ---------------------------------------------------------------------- #
# Rule-network lint
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class TopologyFinding:
    """A structural problem in an inference network."""

    kind: TopologyKind
    subjects: tuple[str, ...]
    exempt: bool
    message: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "subjects": list(self.subjects),
            "exempt": self.exempt,
            "message": self.message,
        }


# ---------------------------------------------------------------------- #
# Modularity audit
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class ContextualCF:
    """CF(H, E, e): the change in belief in H from E when e is already known."""

    hypothesis: Event
    evidence: Event
    context: Event
    likelihood_ratio: LikelihoodRatio
    cf: CertaintyFactor

    def to_dict(self) -> dict:
        return {
            "hypothesis": str(self.hypothesis),
            "evidence": str(self.evidence),
            "context": str(self.context),
            "lambda": ratio_to_json(self.likelihood_ratio),
            "cf": self.cf,
        }


@dataclass(frozen=True)
class AuditFinding:
    kind: AuditKind
    hypothesis: Event
    evidence: Event
    context: Event
    baseline: ContextualCF | None
    contextual: ContextualCF | None
    message: str

    @property
    def site(self) -> Site:
        return (str(self.evidence), str(self.context))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hypothesis": str(self.hypothesis),
            "evidence": str(self.evidence),
            "context": str(self.context),
            "baseline": self.baseline.to_dict() if self.baseline else None,
            "contextual": self.contextual.to_dict() if self.contextual else None,
            "message": self.message,
        }


@dataclass(frozen=True)
class AuditReport:
    hypothesis: Event
    findings: tuple[AuditFinding, ...] = ()
    sites_checked: int = 0
    # sites flagged by exactly one of the two criteria
    equivalence_mismatches: tuple[Site, ...] = ()

    def by_kind(self, kind: AuditKind) -> list[AuditFinding]:
        return [f for f in self.findings if f.kind == kind]

    def sites(self, kind: AuditKind) -> set[Site]:
        return {f.site for f in self.findings if f.kind == kind}

    @property
    def has_violations(self) -> bool:
        return any(f.kind != "undefined-context" for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "hypothesis": str(self.hypothesis),
            "sites_checked": self.sites_checked,
            "findings": [f.to_dict() for f in self.findings],
            "equivalence_mismatches": [list(s) for s in self.equivalence_mismatches],
        }


# ---------------------------------------------------------------------- #
# Influence diagrams
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class ValidationFinding:
    kind: ValidationKind
    node: str | None
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "node": self.node, "message": self.message}


@dataclass(frozen=True)
class StaleReport:
    """Which distributions an edit invalidated and which it left intact."""

    edited: str
    stale_nodes: frozenset[str] = field(default_factory=frozenset)
    untouched_nodes: frozenset[str] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "edited": self.edited,
            "stale_nodes": sorted(self.stale_nodes),
            "untouched_nodes": sorted(self.untouched_nodes),
        }

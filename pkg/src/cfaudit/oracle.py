"""Ground-truth probabilistic oracle.

An explicit discrete joint distribution answers every probability the CF
model talks about.  From it we compute contextual likelihood ratios and
certainty factors CF(H, E, e), test conditional independence of evidence
given a hypothesis and its negation, and audit whether a set of rules could
be semantically modular, i.e. whether CF(H, E, e) == CF(H, E, {}) for every
context e drawn from the other evidence.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Iterator, Mapping, Sequence

from cfaudit.cf_engine import (
    EQUALITY_TOLERANCE,
    LikelihoodRatio,
    cf_from_lambda,
)
from cfaudit.errors import (
    ConsistencyError,
    EventError,
    ImpossibleConditionError,
    ModelError,
    UndefinedRatioError,
)
from cfaudit.models import AuditFinding, AuditReport, ContextualCF

if TYPE_CHECKING:
    from cfaudit.rule_network import InferenceNetwork

logger = logging.getLogger(__name__)

#: |delta CF| above which a context counts as a modularity violation.
VIOLATION_TOLERANCE: float = 1e-6
#: Largest joint distribution we are willing to enumerate.
MAX_ASSIGNMENTS: int = 1_000_000

Assignment = Mapping[str, str]


# ---------------------------------------------------------------------- #
# Events
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class Event:
    """A set of full assignments.

    Satisfied when every constraint holds (variable takes one of the listed
    outcomes) and none of the ``negated`` sub-events holds.  Conjunction
    merges constraints; negation wraps the event, so any boolean combination
    is expressible.  The event with neither part is the universal event.
    """

    constraints: tuple[tuple[str, frozenset[str]], ...] = ()
    negated: tuple["Event", ...] = ()

    def __post_init__(self) -> None:
        merged: dict[str, frozenset[str]] = {}
        for variable, outcomes in self.constraints:
            outcomes = frozenset(outcomes)
            if not outcomes:
                raise EventError(f"empty outcome set for {variable!r}")
            merged[variable] = merged[variable] & outcomes if variable in merged else outcomes
        if any(not outs for outs in merged.values()):
            # contradictory constraints collapse to the impossible event
            object.__setattr__(self, "constraints", ())
            object.__setattr__(self, "negated", (UNIVERSAL_EVENT,))
            return
        object.__setattr__(self, "constraints", tuple(sorted(merged.items())))
        object.__setattr__(self, "negated", tuple(sorted(set(self.negated), key=str)))

    # --- construction ---
    @classmethod
    def where(cls, variable: str, *outcomes: str) -> "Event":
        return cls(constraints=((variable, frozenset(outcomes)),))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str | Iterable[str]]) -> "Event":
        items = []
        for variable, outcomes in mapping.items():
            if isinstance(outcomes, str):
                outcomes = (outcomes,)
            items.append((variable, frozenset(outcomes)))
        return cls(constraints=tuple(items))

    def __and__(self, other: "Event") -> "Event":
        return Event(
            constraints=self.constraints + other.constraints,
            negated=self.negated + other.negated,
        )

    def __invert__(self) -> "Event":
        if not self.constraints and len(self.negated) == 1:
            return self.negated[0]
        return Event(negated=(self,))

    # --- queries ---
    @property
    def is_universal(self) -> bool:
        return not self.constraints and not self.negated

    def variables(self) -> set[str]:
        names = {variable for variable, _ in self.constraints}
        for part in self.negated:
            names |= part.variables()
        return names

    def satisfied_by(self, assignment: Assignment) -> bool:
        for variable, outcomes in self.constraints:
            if assignment[variable] not in outcomes:
                return False
        return not any(part.satisfied_by(assignment) for part in self.negated)

    def __str__(self) -> str:
        if self.is_universal:
            return "*"
        parts = [f"{v}={'|'.join(sorted(o))}" for v, o in self.constraints]
        for part in self.negated:
            simple = not part.negated and len(part.constraints) == 1
            if simple and len(part.constraints[0][1]) == 1:
                variable, outcomes = part.constraints[0]
                parts.append(f"{variable}!={next(iter(outcomes))}")
            else:
                parts.append(f"~({part})")
        return ",".join(parts)


UNIVERSAL_EVENT = Event()
IMPOSSIBLE_EVENT = Event(negated=(UNIVERSAL_EVENT,))


# ---------------------------------------------------------------------- #
# Joint model
# ---------------------------------------------------------------------- #


class JointModel:
    """Explicit joint distribution over finitely many discrete variables."""

    def __init__(
        self,
        variables: Sequence[tuple[str, Sequence[str]]],
        weights: Mapping[tuple[str, ...], float],
        tolerance: float = EQUALITY_TOLERANCE,
        max_assignments: int = MAX_ASSIGNMENTS,
    ):
        self._variables: tuple[tuple[str, tuple[str, ...]], ...] = tuple(
            (name, tuple(outcomes)) for name, outcomes in variables
        )
        self._domains = dict(self._variables)
        self.tolerance = tolerance
        self._size = self._validate_variables(max_assignments)

        names = self.names
        rows: list[tuple[dict[str, str], float]] = []
        total = 0.0
        for key, weight in weights.items():
            key = tuple(key)
            if len(key) != len(names):
                raise ModelError(f"assignment {key} does not cover all {len(names)} variables")
            for name, outcome in zip(names, key):
                if outcome not in self._domains[name]:
                    raise ModelError(f"unknown outcome {outcome!r} for variable {name!r}")
            if weight < 0 or math.isnan(weight):
                raise ModelError(f"negative weight {weight!r} for {key}")
            total += weight
            if weight > 0:
                rows.append((dict(zip(names, key)), float(weight)))
        if abs(total - 1.0) > tolerance:
            raise ModelError(f"weights sum to {total!r}, expected 1")
        self._rows = rows
        self._cache: dict[Event, float] = {}

    def _validate_variables(self, max_assignments: int) -> int:
        if len(self._domains) != len(self._variables):
            raise ModelError("variable names must be unique")
        size = 1
        for name, outcomes in self._variables:
            if not outcomes:
                raise ModelError(f"variable {name!r} has no outcomes")
            if len(set(outcomes)) != len(outcomes):
                raise ModelError(f"variable {name!r} repeats an outcome label")
            size *= len(outcomes)
        if size > max_assignments:
            raise ModelError(f"joint has {size} assignments, limit is {max_assignments}")
        return size

    @classmethod
    def from_function(
        cls,
        variables: Sequence[tuple[str, Sequence[str]]],
        weight: Callable[[Assignment], float],
        normalize: bool = False,
        **kwargs,
    ) -> "JointModel":
        """Build a model by evaluating *weight* on every full assignment."""
        names = [name for name, _ in variables]
        weights = {}
        for key in itertools.product(*(outcomes for _, outcomes in variables)):
            weights[key] = weight(dict(zip(names, key)))
        if normalize:
            total = sum(weights.values())
            if total <= 0:
                raise ModelError("all weights are zero")
            weights = {k: w / total for k, w in weights.items()}
        return cls(variables, weights, **kwargs)

    # --- structure ---
    @property
    def variables(self) -> tuple[tuple[str, tuple[str, ...]], ...]:
        return self._variables

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._variables)

    def outcomes(self, name: str) -> tuple[str, ...]:
        try:
            return self._domains[name]
        except KeyError:
            raise EventError(f"unknown variable {name!r}") from None

    @property
    def is_strictly_positive(self) -> bool:
        """Every full assignment has positive weight."""
        return len(self._rows) == self._size

    def assignments(self) -> Iterator[dict[str, str]]:
        """Every full assignment, including zero-weight ones."""
        names = self.names
        for key in itertools.product(*(outcomes for _, outcomes in self._variables)):
            yield dict(zip(names, key))

    def check_event(self, event: Event) -> None:
        for variable, outcomes in event.constraints:
            domain = self.outcomes(variable)
            unknown = sorted(outcomes - set(domain))
            if unknown:
                raise EventError(f"unknown outcome(s) {', '.join(unknown)} for {variable!r}")
        for part in event.negated:
            self.check_event(part)

    # --- probability ---
    def probability(self, event: Event) -> float:
        """Sum of weights over assignments satisfying *event*."""
        cached = self._cache.get(event)
        if cached is not None:
            return cached
        self.check_event(event)
        total = math.fsum(w for a, w in self._rows if event.satisfied_by(a))
        total = min(1.0, total)
        self._cache[event] = total
        return total

    def conditional(self, event: Event, given: Event) -> float:
        denominator = self.probability(given)
        if denominator == 0:
            raise ImpossibleConditionError(f"conditioning on impossible event {given}")
        return self.probability(event & given) / denominator

    def marginal(self, name: str) -> dict[str, float]:
        return {o: self.probability(Event.where(name, o)) for o in self.outcomes(name)}

    def entails(self, a: Event, b: Event) -> bool:
        """True if every assignment satisfying *a* satisfies *b*."""
        return all(b.satisfied_by(x) for x in self.assignments() if a.satisfied_by(x))


# ---------------------------------------------------------------------- #
# Urn models
# ---------------------------------------------------------------------- #


def urn_model(
    urns: Sequence[Mapping[str, int]],
    draws: int = 2,
    replace: bool = True,
    priors: Sequence[float] | None = None,
    max_assignments: int = MAX_ASSIGNMENTS,
) -> JointModel:
    """Joint model over ``urn`` and ``draw1`` .. ``drawN`` for an urn problem.

    Urns are named ``"1"``, ``"2"``, ... in the given order; colours keep the
    order of their first appearance.  Without replacement each draw removes
    the ball drawn.
    """
    if not urns:
        raise ModelError("at least one urn is required")
    if draws < 1:
        raise ModelError("at least one draw is required")
    if priors is None:
        priors = [1.0 / len(urns)] * len(urns)
    if len(priors) != len(urns):
        raise ModelError("one prior per urn is required")

    colours: list[str] = []
    for urn in urns:
        for colour, count in urn.items():
            if count < 0:
                raise ModelError(f"negative ball count for colour {colour!r}")
            if colour not in colours:
                colours.append(colour)
    for index, urn in enumerate(urns, start=1):
        total = sum(urn.values())
        if total == 0:
            raise ModelError(f"urn {index} is empty")
        if not replace and draws > total:
            raise ModelError(f"urn {index} has {total} balls, cannot draw {draws} without replacement")

    urn_names = [str(i) for i in range(1, len(urns) + 1)]
    variables = [("urn", urn_names)] + [(f"draw{k}", colours) for k in range(1, draws + 1)]

    def weight(assignment: Assignment) -> float:
        index = int(assignment["urn"]) - 1
        remaining = {c: urns[index].get(c, 0) for c in colours}
        p = priors[index]
        for k in range(1, draws + 1):
            colour = assignment[f"draw{k}"]
            total = sum(remaining.values())
            p *= remaining[colour] / total
            if p == 0:
                return 0.0
            if not replace:
                remaining[colour] -= 1
        return p

    logger.debug("urn model: %d urns, %d draws, replace=%s", len(urns), draws, replace)
    return JointModel.from_function(variables, weight, max_assignments=max_assignments)


# ---------------------------------------------------------------------- #
# Likelihood ratios and contextual CFs
# ---------------------------------------------------------------------- #


def likelihood_ratio(m: JointModel, h: Event, e_new: Event, context: Event = UNIVERSAL_EVENT) -> LikelihoodRatio:
    """lambda(H, E, e) = p(E | H, e) / p(E | ~H, e)."""
    with_h = h & context
    without_h = ~h & context
    if m.probability(with_h) == 0:
        raise ImpossibleConditionError(f"p({h} | {context}) = 0: hypothesis side is empty")
    if m.probability(without_h) == 0:
        raise ImpossibleConditionError(f"p(~({h}) | {context}) = 0: negated-hypothesis side is empty")
    numerator = m.conditional(e_new, with_h)
    denominator = m.conditional(e_new, without_h)
    return LikelihoodRatio.of(numerator, denominator)


def contextual_cf(m: JointModel, h: Event, e_new: Event, context: Event = UNIVERSAL_EVENT) -> ContextualCF:
    lam = likelihood_ratio(m, h, e_new, context)
    return ContextualCF(
        hypothesis=h,
        evidence=e_new,
        context=context,
        likelihood_ratio=lam,
        cf=cf_from_lambda(lam),
    )


def ci_given(
    m: JointModel,
    h: Event,
    target: Event,
    context: Event,
    tolerance: float = EQUALITY_TOLERANCE,
) -> bool | None:
    """Is *target* independent of *context* given *h* and given its negation?

    Returns None (vacuous) when either side conditions on an impossible event.
    """
    sides = []
    for side in (h, ~h):
        if m.probability(side) == 0 or m.probability(side & context) == 0:
            return None
        sides.append((m.conditional(target, side & context), m.conditional(target, side)))
    return all(abs(with_ctx - without) <= tolerance for with_ctx, without in sides)


# ---------------------------------------------------------------------- #
# Modularity audit
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class EvidenceSet:
    """Pieces of evidence bearing on one hypothesis."""

    members: tuple[Event, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))

    def check_distinct(self, m: JointModel) -> None:
        for i, a in enumerate(self.members):
            m.check_event(a)
            for j, b in enumerate(self.members):
                if i != j and m.entails(a, b):
                    raise ModelError(
                        f"evidence members are not logically distinct: {a} entails {b}"
                    )

    def contexts_for(self, index: int) -> Iterator[Event]:
        """Every conjunction of truth values over a non-empty subset of the other members."""
        others = [e for k, e in enumerate(self.members) if k != index]
        for size in range(1, len(others) + 1):
            for subset in itertools.combinations(others, size):
                for signs in itertools.product((True, False), repeat=size):
                    context = UNIVERSAL_EVENT
                    for member, sign in zip(subset, signs):
                        context = context & (member if sign else ~member)
                    yield context


def _on_directed_path(net: InferenceNetwork, context: Event, evidence: Event, h: Event) -> bool:
    """True if *evidence* lies on a directed path from some part of *context* to *h*."""
    for source in context.variables():
        for middle in evidence.variables():
            if source == middle or not net.has_path(source, middle):
                continue
            if any(net.has_path(middle, target) for target in h.variables()):
                return True
    return False


def _site_key(finding: AuditFinding) -> tuple[str, str, str]:
    return (*finding.site, finding.kind)


def audit_modularity(
    m: JointModel,
    h: Event,
    evidence_set: EvidenceSet,
    net: InferenceNetwork | None = None,
    tolerance: float = VIOLATION_TOLERANCE,
    check_equivalence: bool = True,
) -> AuditReport:
    """Compare CF(h, Ei, e) with CF(h, Ei, {}) over every admissible context.

    Without a network the evidence is treated as converging on *h*, where
    modularity holds in every context exactly when conditional independence
    does on a strictly positive model; there, with *check_equivalence*, a
    report in which only one criterion finds violations raises
    :class:`ConsistencyError`.  Single sites flagged by one
    criterion only are listed in ``equivalence_mismatches``.  With a network,
    contexts from which the evidence lies on a directed path to *h* are skipped.
    """
    m.check_event(h)
    evidence_set.check_distinct(m)

    findings: list[AuditFinding] = []
    sites_checked = 0
    for index, member in enumerate(evidence_set.members):
        try:
            baseline = contextual_cf(m, h, member)
        except (UndefinedRatioError, ImpossibleConditionError) as exc:
            findings.append(
                AuditFinding("undefined-context", h, member, UNIVERSAL_EVENT, None, None, str(exc))
            )
            continue

        for context in evidence_set.contexts_for(index):
            if net is not None and _on_directed_path(net, context, member, h):
                logger.debug("skipping context %s for %s: evidence on a path to %s", context, member, h)
                continue
            sites_checked += 1
            try:
                contextual = contextual_cf(m, h, member, context)
            except (UndefinedRatioError, ImpossibleConditionError) as exc:
                findings.append(
                    AuditFinding("undefined-context", h, member, context, baseline, None, str(exc))
                )
                continue

            delta = abs(contextual.cf - baseline.cf)
            if delta > tolerance:
                findings.append(
                    AuditFinding(
                        "modularity-violation",
                        h,
                        member,
                        context,
                        baseline,
                        contextual,
                        f"CF({h}, {member}) is {baseline.cf:.6g} alone but "
                        f"{contextual.cf:.6g} once {context} is known",
                    )
                )
            if ci_given(m, h, member, context, tolerance) is False:
                findings.append(
                    AuditFinding(
                        "ci-violation",
                        h,
                        member,
                        context,
                        baseline,
                        contextual,
                        f"{member} is not conditionally independent of {context} given {h} and its negation",
                    )
                )

    findings.sort(key=_site_key)
    report = AuditReport(hypothesis=h, findings=tuple(findings), sites_checked=sites_checked)
    mismatches = tuple(sorted(report.sites("modularity-violation") ^ report.sites("ci-violation")))
    report = AuditReport(
        hypothesis=h,
        findings=report.findings,
        sites_checked=sites_checked,
        equivalence_mismatches=mismatches,
    )
    logger.info(
        "audit of %s: %d sites, %d findings, %d mismatches",
        h,
        sites_checked,
        len(findings),
        len(mismatches),
    )
    modularity_sites = report.sites("modularity-violation")
    ci_sites = report.sites("ci-violation")
    comparable = check_equivalence and net is None and m.is_strictly_positive
    if comparable and bool(modularity_sites) != bool(ci_sites):
        found, missing = (
            ("modularity", "conditional-independence")
            if modularity_sites
            else ("conditional-independence", "modularity")
        )
        raise ConsistencyError(
            f"{found} violations found but no {missing} violations for {h}"
        )
    return report


"""Tests for the probabilistic oracle: events, joint models, urns and audits."""

import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfaudit.cf_engine import INFINITE, UNDEFINED
from cfaudit.errors import (
    ConsistencyError,
    EventError,
    ImpossibleConditionError,
    ModelError,
    UndefinedRatioError,
)
from cfaudit.fixtures import three_urn_model, two_urn_model
from cfaudit.oracle import (
    IMPOSSIBLE_EVENT,
    UNIVERSAL_EVENT,
    Event,
    EvidenceSet,
    JointModel,
    audit_modularity,
    ci_given,
    contextual_cf,
    likelihood_ratio,
    urn_model,
)
from cfaudit.rule_network import Atom, Rule, build_network

BINARY = ("true", "false")
H1 = Event.where("urn", "1")
H2 = Event.where("urn", "2")


def _draw(k, colour):
    return Event.where(f"draw{k}", colour)


def _binary_variables(names):
    return [(name, BINARY) for name in names]


def _make_naive_bayes(rng, n_evidence):
    """Binary H with evidence conditionally independent given H and ~H."""
    names = [f"E{i}" for i in range(1, n_evidence + 1)]
    prior = rng.uniform(0.05, 0.95)
    likelihood = {(name, h): rng.uniform(0.05, 0.95) for name in names for h in BINARY}

    def weight(a):
        p = prior if a["H"] == "true" else 1.0 - prior
        for name in names:
            q = likelihood[(name, a["H"])]
            p *= q if a[name] == "true" else 1.0 - q
        return p

    return JointModel.from_function(_binary_variables(["H", *names]), weight), names


def _make_arbitrary(rng, n_evidence):
    names = [f"E{i}" for i in range(1, n_evidence + 1)]
    model = JointModel.from_function(
        _binary_variables(["H", *names]),
        lambda a: rng.uniform(0.05, 1.0),
        normalize=True,
    )
    return model, names


def _has_ambiguous_site(m, h, members, low=1e-9, high=1e-4):
    """True if some site's CF change or CI gap sits too close to the audit threshold."""
    evidence_set = EvidenceSet(tuple(members))
    for index, member in enumerate(members):
        baseline = contextual_cf(m, h, member).cf
        for context in evidence_set.contexts_for(index):
            delta_cf = abs(contextual_cf(m, h, member, context).cf - baseline)
            delta_ci = max(
                abs(m.conditional(member, side & context) - m.conditional(member, side))
                for side in (h, ~h)
            )
            if low < delta_cf < high or low < delta_ci < high:
                return True
    return False


# --------------------------------------------------------------------------- #
# Events
# --------------------------------------------------------------------------- #


def test_universal_event_text():
    assert str(UNIVERSAL_EVENT) == "*"
    assert UNIVERSAL_EVENT.is_universal


def test_event_text_forms():
    event = Event.where("urn", "1") & ~Event.where("draw1", "W")
    assert str(event) == "urn=1,draw1!=W"
    assert str(Event.where("urn", "2", "1")) == "urn=1|2"


def test_double_negation_unwraps():
    event = Event.where("a", "x")
    assert ~~event == event


def test_contradictory_conjunction_is_impossible():
    event = Event.where("a", "x") & Event.where("a", "y")
    assert event == IMPOSSIBLE_EVENT


def test_conjunction_intersects_outcomes():
    event = Event.where("a", "x", "y") & Event.where("a", "y", "z")
    assert event == Event.where("a", "y")


def test_event_from_mapping():
    event = Event.from_mapping({"a": "x", "b": ["y", "z"]})
    assert event == Event.where("a", "x") & Event.where("b", "y", "z")
    assert event.variables() == {"a", "b"}


def test_empty_outcome_set_rejected():
    with pytest.raises(EventError):
        Event.where("a")


def test_satisfied_by():
    event = Event.where("a", "x") & ~Event.where("b", "y")
    assert event.satisfied_by({"a": "x", "b": "z"})
    assert not event.satisfied_by({"a": "x", "b": "y"})
    assert not event.satisfied_by({"a": "w", "b": "z"})


# --------------------------------------------------------------------------- #
# Joint models
# --------------------------------------------------------------------------- #


def test_weights_must_sum_to_one():
    with pytest.raises(ModelError, match="sum"):
        JointModel([("a", BINARY)], {("true",): 0.5, ("false",): 0.4})


def test_negative_weight_rejected():
    with pytest.raises(ModelError):
        JointModel([("a", BINARY)], {("true",): 1.5, ("false",): -0.5})


def test_unknown_outcome_in_weights_rejected():
    with pytest.raises(ModelError):
        JointModel([("a", BINARY)], {("maybe",): 1.0})


def test_duplicate_variable_rejected():
    with pytest.raises(ModelError):
        JointModel([("a", BINARY), ("a", BINARY)], {("true", "true"): 1.0})


def test_size_cap():
    with pytest.raises(ModelError, match="limit"):
        JointModel.from_function(
            _binary_variables(["a", "b", "c"]),
            lambda a: 1.0,
            normalize=True,
            max_assignments=4,
        )


def test_unknown_variable_in_event():
    m = two_urn_model()
    with pytest.raises(EventError):
        m.probability(Event.where("colour", "W"))
    with pytest.raises(EventError):
        m.probability(Event.where("urn", "7"))


def test_probability_examples():
    m = three_urn_model()
    assert m.probability(Event.where("urn", "1")) == pytest.approx(1 / 3, abs=1e-12)
    assert m.probability(UNIVERSAL_EVENT) == pytest.approx(1.0)
    assert m.probability(_draw(1, "W") & Event.where("urn", "3")) == 0.0
    assert m.probability(IMPOSSIBLE_EVENT) == 0.0


def test_conditional_on_impossible_event():
    m = three_urn_model()
    with pytest.raises(ImpossibleConditionError, match="conditioning on impossible event"):
        m.conditional(_draw(1, "W"), Event.where("urn", "3") & _draw(1, "W"))


def test_marginal():
    marginal = two_urn_model().marginal("draw1")
    assert marginal == pytest.approx({"W": 0.5, "B": 0.5})


def test_strict_positivity():
    assert two_urn_model().is_strictly_positive
    assert not three_urn_model().is_strictly_positive


def test_entails():
    m = three_urn_model()
    urn2 = Event.where("urn", "2")
    assert m.entails(urn2 & _draw(1, "W"), _draw(1, "W"))
    assert m.entails(_draw(1, "W"), ~_draw(1, "B"))
    assert not m.entails(Event.where("urn", "1"), _draw(1, "W"))
    # urn 2 with a black first draw has zero weight but is still an assignment
    assert m.probability(urn2 & _draw(1, "B")) == 0
    assert not m.entails(urn2, _draw(1, "W"))


# --------------------------------------------------------------------------- #
# Urn models
# --------------------------------------------------------------------------- #


def test_urn_model_variables():
    m = three_urn_model()
    assert m.names == ("urn", "draw1", "draw2")
    assert m.outcomes("urn") == ("1", "2", "3")
    assert m.outcomes("draw1") == ("W", "B")


def test_three_urn_conditionals():
    m = three_urn_model()
    not_h1 = ~H1
    assert m.conditional(_draw(2, "B"), not_h1) == pytest.approx(0.5, abs=1e-9)
    assert m.conditional(_draw(2, "B"), not_h1 & _draw(1, "W")) == 0.0


def test_two_urn_without_replacement_conditionals():
    m = two_urn_model(replace=False)
    assert m.conditional(_draw(2, "B"), H2 & _draw(1, "B")) == 0.0
    assert m.conditional(_draw(2, "B"), H2 & _draw(1, "W")) == pytest.approx(0.5, abs=1e-12)


def test_urn_priors():
    m = urn_model(({"W": 1}, {"B": 1}), draws=1, priors=(0.25, 0.75))
    assert m.probability(_draw(1, "B")) == pytest.approx(0.75)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"urns": ()},
        {"urns": ({"W": 1},), "draws": 0},
        {"urns": ({"W": 1}, {"B": 1}), "priors": (1.0,)},
        {"urns": ({"W": 0},)},
        {"urns": ({"W": 1, "B": 1},), "draws": 3, "replace": False},
        {"urns": ({"W": -1, "B": 2},)},
    ],
)
def test_urn_model_rejects_bad_input(kwargs):
    with pytest.raises(ModelError):
        urn_model(**kwargs)


# --------------------------------------------------------------------------- #
# Likelihood ratios and contextual CFs
# --------------------------------------------------------------------------- #


def test_two_urn_likelihood_ratio_and_cf():
    m = two_urn_model()
    lam = likelihood_ratio(m, H1, _draw(1, "W"))
    assert lam.value == pytest.approx(0.5, abs=1e-9)
    assert contextual_cf(m, H1, _draw(1, "W")).cf == pytest.approx(-0.5, abs=1e-9)


def test_three_urn_ratios():
    m = three_urn_model()
    assert likelihood_ratio(m, H1, _draw(2, "B")).value == pytest.approx(1.0, abs=1e-9)
    assert likelihood_ratio(m, H1, _draw(2, "B"), _draw(1, "W")) is INFINITE
    assert contextual_cf(m, H1, _draw(2, "B")).cf == pytest.approx(0.0, abs=1e-9)
    assert contextual_cf(m, H1, _draw(2, "B"), _draw(1, "W")).cf == 1.0


def test_likelihood_ratio_names_empty_side():
    m = three_urn_model()
    with pytest.raises(ImpossibleConditionError, match="negated-hypothesis"):
        likelihood_ratio(m, UNIVERSAL_EVENT, _draw(1, "W"))
    with pytest.raises(ImpossibleConditionError, match="hypothesis side"):
        likelihood_ratio(m, Event.where("urn", "3"), _draw(2, "W"), _draw(1, "W"))


def test_undefined_ratio():
    m = three_urn_model()
    impossible = _draw(1, "W") & _draw(1, "B")
    assert likelihood_ratio(m, H1, impossible) is UNDEFINED
    with pytest.raises(UndefinedRatioError):
        contextual_cf(m, H1, impossible)


def test_contextual_cf_to_dict_uses_inf_token():
    m = three_urn_model()
    data = contextual_cf(m, H1, _draw(2, "B"), _draw(1, "W")).to_dict()
    assert data["lambda"] == "inf"
    assert data["cf"] == 1.0
    assert data["context"] == "draw1=W"


# --------------------------------------------------------------------------- #
# Conditional independence
# --------------------------------------------------------------------------- #


def test_ci_holds_for_draws_with_replacement():
    m = two_urn_model()
    assert ci_given(m, H1, _draw(2, "W"), _draw(1, "W")) is True
    assert ci_given(m, H1, _draw(2, "W"), ~_draw(1, "W")) is True


def test_ci_fails_on_negated_side_for_three_urns():
    assert ci_given(three_urn_model(), H1, _draw(2, "B"), _draw(1, "W")) is False


def test_ci_fails_without_replacement():
    assert ci_given(two_urn_model(replace=False), H2, _draw(2, "B"), _draw(1, "B")) is False


def test_ci_is_vacuous_on_impossible_context():
    assert ci_given(three_urn_model(), H2, _draw(2, "W"), _draw(1, "B")) is None


# --------------------------------------------------------------------------- #
# Evidence sets
# --------------------------------------------------------------------------- #


def test_contexts_cover_every_sign_of_every_subset():
    members = tuple(Event.where(f"E{i}", "true") for i in range(3))
    contexts = list(EvidenceSet(members).contexts_for(0))
    assert len(contexts) == 8
    assert len(set(contexts)) == 8
    assert all("E0" not in c.variables() for c in contexts)


def test_single_member_has_no_contexts():
    assert list(EvidenceSet((Event.where("E", "true"),)).contexts_for(0)) == []


def test_members_must_be_distinct():
    m, _ = _make_naive_bayes(random.Random(0), 2)
    e1 = Event.where("E1", "true")
    with pytest.raises(ModelError, match="not logically distinct"):
        EvidenceSet((e1, e1 & Event.where("E2", "true"))).check_distinct(m)


# --------------------------------------------------------------------------- #
# Modularity audit
# --------------------------------------------------------------------------- #


def test_audit_two_urns_with_replacement_is_clean():
    report = audit_modularity(two_urn_model(), H1, EvidenceSet((_draw(1, "W"), _draw(2, "W"))))
    assert report.findings == ()
    assert report.sites_checked == 4
    assert not report.has_violations


def test_audit_three_urns_finds_matching_violations():
    members = (_draw(1, "W"), _draw(2, "B"))
    report = audit_modularity(three_urn_model(), H1, EvidenceSet(members))
    modularity = report.by_kind("modularity-violation")
    assert modularity
    assert report.sites("modularity-violation") == report.sites("ci-violation")

    site = next(f for f in modularity if f.evidence == _draw(2, "B") and f.context == _draw(1, "W"))
    assert site.baseline.cf == pytest.approx(0.0, abs=1e-9)
    assert site.contextual.cf == 1.0
    assert site.contextual.likelihood_ratio is INFINITE


def test_audit_two_urns_without_replacement_reports_violations():
    members = (_draw(1, "W"), _draw(2, "W"))
    report = audit_modularity(two_urn_model(replace=False), H1, EvidenceSet(members))
    assert report.has_violations
    assert report.by_kind("modularity-violation")
    # CF(H1, W2, B1) keeps its value although the draws are dependent
    assert (str(_draw(2, "W")), str(~_draw(1, "W"))) in report.equivalence_mismatches


def test_audit_reports_undefined_contexts():
    m = urn_model(({"W": 1, "B": 1}, {"W": 2, "B": 0}), draws=2, replace=False)
    members = (_draw(1, "B"), _draw(2, "B"))
    report = audit_modularity(m, H1, EvidenceSet(members))
    undefined = report.by_kind("undefined-context")
    assert undefined
    assert all(f.contextual is None for f in undefined)
    assert report.by_kind("ci-violation")


def test_audit_findings_are_sorted_and_serialisable():
    members = (_draw(1, "W"), _draw(2, "B"))
    report = audit_modularity(three_urn_model(), H1, EvidenceSet(members))
    keys = [(*f.site, f.kind) for f in report.findings]
    assert keys == sorted(keys)
    text = json.dumps(report.to_dict(), sort_keys=True)
    assert '"inf"' in text
    assert json.loads(text)["hypothesis"] == "urn=1"


def test_audit_skips_contexts_upstream_of_the_evidence():
    """A -> B -> H: B lies on a path from A to H, so A never serves as B's context."""

    def weight(a):
        p = 0.3 if a["A"] == "true" else 0.7
        p_b = 0.8 if a["A"] == "true" else 0.2
        p *= p_b if a["B"] == "true" else 1 - p_b
        p_h = 0.9 if a["B"] == "true" else 0.1
        return p * (p_h if a["H"] == "true" else 1 - p_h)

    m = JointModel.from_function(_binary_variables(["A", "B", "H"]), weight)
    net = build_network([Rule("ab", Atom("A"), "B", 0.6), Rule("bh", Atom("B"), "H", 0.8)])
    h = Event.where("H", "true")
    members = EvidenceSet((Event.where("A", "true"), Event.where("B", "true")))

    with_net = audit_modularity(m, h, members, net=net)
    assert with_net.sites_checked == 2
    assert all(f.evidence != Event.where("B", "true") for f in with_net.findings)

    without_net = audit_modularity(m, h, members, check_equivalence=False)
    assert without_net.sites_checked == 4


def test_audit_rejects_unknown_hypothesis_variable():
    with pytest.raises(EventError):
        audit_modularity(two_urn_model(), Event.where("colour", "W"), EvidenceSet((_draw(1, "W"),)))


def test_site_flagged_by_one_criterion_is_listed_as_mismatch():
    # E2 depends on E1 under H and ~H in the same proportion, so CF(H, E2)
    # keeps its value given E1 while independence fails.
    def weight(a):
        e1 = a["E1"] == "true"
        if a["H"] == "true":
            q = 0.2 if e1 else 0.4
        else:
            q = 0.4 if e1 else 0.8
        return 0.25 * (q if a["E2"] == "true" else 1 - q)

    m = JointModel.from_function(_binary_variables(["H", "E1", "E2"]), weight, normalize=True)
    assert m.is_strictly_positive
    h = Event.where("H", "true")
    e1, e2 = Event.where("E1", "true"), Event.where("E2", "true")
    assert contextual_cf(m, h, e2, e1).cf == pytest.approx(contextual_cf(m, h, e2).cf, abs=1e-12)

    report = audit_modularity(m, h, EvidenceSet((e1, e2)))
    assert ("E2=true", "E1=true") in report.equivalence_mismatches
    assert report.by_kind("modularity-violation")


def test_consistency_error_when_only_one_criterion_fires(monkeypatch):
    monkeypatch.setattr("cfaudit.oracle.ci_given", lambda *args, **kwargs: False)
    members = EvidenceSet((_draw(1, "W"), _draw(2, "W")))
    with pytest.raises(ConsistencyError, match="no modularity violations"):
        audit_modularity(two_urn_model(), H1, members)
    report = audit_modularity(two_urn_model(), H1, members, check_equivalence=False)
    assert len(report.by_kind("ci-violation")) == 4


# --------------------------------------------------------------------------- #
# Properties
# --------------------------------------------------------------------------- #


def test_violation_sites_agree_on_random_convergent_models():
    rng = random.Random(20240601)
    checked = attempts = 0
    while checked < 1000:
        attempts += 1
        assert attempts < 2000, "too many near-threshold models"
        n_evidence = rng.randint(1, 3)
        if rng.random() < 0.4:
            m, names = _make_naive_bayes(rng, n_evidence)
        else:
            m, names = _make_arbitrary(rng, n_evidence)
        h = Event.where("H", "true")
        members = [Event.where(name, "true") for name in names]
        if _has_ambiguous_site(m, h, members):
            continue
        report = audit_modularity(m, h, EvidenceSet(tuple(members)))
        assert report.sites("modularity-violation") == report.sites("ci-violation")
        assert report.equivalence_mismatches == ()
        checked += 1


def _spread(rng, count, gap=0.05):
    while True:
        values = [rng.uniform(0.05, 0.95) for _ in range(count)]
        if all(abs(a - b) >= gap for a, b in itertools.combinations(values, 2)):
            return values


def test_more_than_two_hypotheses_break_independence_under_negation():
    rng = random.Random(1986)
    hypotheses = ("h1", "h2", "h3")
    for _ in range(500):
        raw = [rng.uniform(0.1, 1.0) for _ in hypotheses]
        priors = dict(zip(hypotheses, (p / sum(raw) for p in raw)))
        likelihood = {name: dict(zip(hypotheses, _spread(rng, 3))) for name in ("E1", "E2")}

        def weight(a, priors=priors, likelihood=likelihood):
            p = priors[a["H"]]
            for name in ("E1", "E2"):
                q = likelihood[name][a["H"]]
                p *= q if a[name] == "true" else 1 - q
            return p

        m = JointModel.from_function([("H", hypotheses), *_binary_variables(["E1", "E2"])], weight)
        e1, e2 = Event.where("E1", "true"), Event.where("E2", "true")
        for hyp in hypotheses:
            h = Event.where("H", hyp)
            assert m.conditional(e2, h & e1) == pytest.approx(m.conditional(e2, h), abs=1e-9)
            assert ci_given(m, h, e2, e1) is False


@st.composite
def joint_models(draw):
    n_evidence = draw(st.integers(min_value=1, max_value=3))
    names = ["H", *(f"E{i}" for i in range(1, n_evidence + 1))]
    keys = list(itertools.product(*(BINARY for _ in names)))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=len(keys), max_size=len(keys)))
    total = sum(raw)
    return JointModel(_binary_variables(names), {k: w / total for k, w in zip(keys, raw)})


@st.composite
def naive_bayes_models(draw):
    n_evidence = draw(st.integers(min_value=2, max_value=3))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return _make_naive_bayes(random.Random(seed), n_evidence)


@given(joint_models())
@settings(max_examples=100, deadline=None)
def test_probability_of_complement(m):
    e1 = Event.where("E1", "true")
    h = Event.where("H", "true")
    assert m.probability(e1) + m.probability(~e1) == pytest.approx(1.0, abs=1e-9)
    assert m.probability(h & e1) + m.probability(h & ~e1) == pytest.approx(m.probability(h), abs=1e-9)


@given(joint_models())
@settings(max_examples=100, deadline=None)
def test_positive_cf_means_belief_increases(m):
    h = Event.where("H", "true")
    e1 = Event.where("E1", "true")
    posterior, prior = m.conditional(h, e1), m.probability(h)
    cf = contextual_cf(m, h, e1).cf
    if abs(posterior - prior) > 1e-9:
        assert (cf > 0) == (posterior > prior)


@given(naive_bayes_models())
@settings(max_examples=50, deadline=None)
def test_independent_evidence_is_modular(model):
    m, names = model
    h = Event.where("H", "true")
    report = audit_modularity(m, h, EvidenceSet(tuple(Event.where(n, "true") for n in names)))
    assert report.findings == ()

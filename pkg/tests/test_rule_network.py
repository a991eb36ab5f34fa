"""Tests for inference networks: construction, propagation and topology lints."""

import logging
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfaudit.errors import ContradictionError, CycleError, NetworkError
from cfaudit.fixtures import holmes_rules
from cfaudit.rule_network import (
    Atom,
    Compound,
    Rule,
    build_network,
    evaluate,
    find_convergent_links,
    find_divergent_links,
    lint_rules,
    propagate,
    propositions_in,
)


def _rule(rule_id, evidence, consequent, cf=0.5):
    return Rule(rule_id, Atom(evidence), consequent, cf)


@pytest.fixture
def holmes():
    return build_network(holmes_rules())


# --------------------------------------------------------------------------- #
# Expressions and rules
# --------------------------------------------------------------------------- #


def test_compound_needs_two_parts():
    with pytest.raises(NetworkError):
        Compound("and", (Atom("a"),))


def test_compound_rejects_unknown_connective():
    with pytest.raises(NetworkError):
        Compound("xor", (Atom("a"), Atom("b")))


def test_compound_text_parenthesises_nested_parts():
    expr = Compound("and", (Atom("a"), Compound("or", (Atom("b"), Atom("c")))))
    assert str(expr) == "a AND (b OR c)"


def test_propositions_in_keeps_first_occurrence_order():
    expr = Compound("or", (Atom("b"), Compound("and", (Atom("a"), Atom("b")))))
    assert propositions_in(expr) == ("b", "a")


def test_evaluate_uses_min_and_max():
    expr = Compound("and", (Atom("a"), Compound("or", (Atom("b"), Atom("c")))))
    assert evaluate(expr, {"a": 0.9, "b": 0.2, "c": 0.6}) == 0.6
    assert evaluate(expr, {"a": 0.1, "b": 0.2, "c": 0.6}) == 0.1


def test_rule_cf_range_checked():
    with pytest.raises(NetworkError):
        _rule("r", "a", "b", cf=1.5)


def test_rule_consequent_in_own_antecedent():
    with pytest.raises(NetworkError, match="own antecedent"):
        Rule("r", Compound("and", (Atom("a"), Atom("b"))), "a", 0.5)


# --------------------------------------------------------------------------- #
# Building networks
# --------------------------------------------------------------------------- #


def test_build_network_structure(holmes):
    assert holmes.leaves == ("Neighbor-call", "Radio")
    assert holmes.hypotheses == ("Alarm", "Burglary", "Earthquake")
    assert [r.id for r in holmes.rules_into("Earthquake")] == ["quake", "radio"]
    assert [r.id for r in holmes.rules_from("Alarm")] == ["burglary", "quake"]
    assert holmes.has_path("Neighbor-call", "Burglary")
    assert not holmes.has_path("Radio", "Burglary")


def test_topological_order_is_lexicographic_among_ties(holmes):
    assert holmes.topological_order() == [
        "Neighbor-call",
        "Alarm",
        "Burglary",
        "Radio",
        "Earthquake",
    ]


def test_duplicate_rule_id():
    with pytest.raises(NetworkError, match="duplicate rule id"):
        build_network([_rule("r", "a", "b"), _rule("r", "b", "c")])


def test_cycle_rejected():
    with pytest.raises(CycleError) as info:
        build_network([_rule("ab", "a", "b"), _rule("bc", "b", "c"), _rule("ca", "c", "a")])
    assert info.value.cycle[0] == info.value.cycle[-1]
    assert "cycle detected" in str(info.value)


# --------------------------------------------------------------------------- #
# Propagation
# --------------------------------------------------------------------------- #


def test_propagate_holmes(holmes):
    values = propagate(holmes, {"Neighbor-call": 1.0, "Radio": 0.5})
    assert values["Alarm"] == pytest.approx(0.8)
    assert values["Burglary"] == pytest.approx(0.56)
    # 0.32 and 0.45 combined in parallel
    assert values["Earthquake"] == pytest.approx(0.626)


def test_propagate_defaults_missing_evidence_to_zero(holmes):
    values = propagate(holmes, {"Radio": 1.0})
    assert values["Neighbor-call"] == 0.0
    assert values["Alarm"] == 0.0
    assert values["Earthquake"] == pytest.approx(0.9)


def test_propagate_negative_antecedent_contributes_nothing():
    net = build_network([_rule("r", "a", "h", cf=0.9)])
    assert propagate(net, {"a": -0.7})["h"] == 0.0


def test_propagate_compound_antecedent():
    rule = Rule("r", Compound("and", (Atom("a"), Atom("b"))), "h", 0.5)
    values = propagate(build_network([rule]), {"a": 0.4, "b": 0.8})
    assert values["h"] == pytest.approx(0.2)


def test_propagate_independent_of_rule_order():
    rules = [
        _rule("r1", "a", "h", 0.6),
        _rule("r2", "b", "h", -0.3),
        _rule("r3", "c", "h", 0.2),
    ]
    evidence = {"a": 1.0, "b": 0.9, "c": 0.5}
    forward = propagate(build_network(rules), evidence)
    backward = propagate(build_network(list(reversed(rules))), evidence)
    assert forward == backward


MIXED_RULES = [
    _rule("r1", "a", "h", 0.6),
    _rule("r2", "b", "h", -0.3),
    _rule("r3", "c", "h", 0.2),
    Rule("r4", Compound("and", (Atom("h"), Atom("c"))), "g", 0.7),
    _rule("r5", "b", "g", -0.5),
    Rule("r6", Compound("or", (Atom("a"), Atom("g"))), "top", 0.9),
]


@given(st.permutations(MIXED_RULES))
def test_propagate_invariant_under_rule_permutations(rules):
    evidence = {"a": 1.0, "b": 0.9, "c": 0.5}
    assert propagate(build_network(rules), evidence) == propagate(build_network(MIXED_RULES), evidence)


def test_propagate_without_evidence_is_all_zero(holmes):
    values = propagate(holmes, {})
    assert set(values) == set(holmes.propositions)
    assert all(cf == 0.0 for cf in values.values())


def test_propagate_rejects_unknown_and_derived_evidence(holmes):
    with pytest.raises(NetworkError, match="unknown proposition"):
        propagate(holmes, {"Nope": 0.5})
    with pytest.raises(NetworkError, match="derived proposition"):
        propagate(holmes, {"Alarm": 0.5})


def test_propagate_rejects_out_of_range_evidence(holmes):
    with pytest.raises(ValueError):
        propagate(holmes, {"Radio": 2.0})


def test_propagate_contradiction_names_hypothesis():
    net = build_network([_rule("yes", "a", "h", 1.0), _rule("no", "b", "h", -1.0)])
    with pytest.raises(ContradictionError, match="'h'"):
        propagate(net, {"a": 1.0, "b": 1.0})


# --------------------------------------------------------------------------- #
# Topology lints
# --------------------------------------------------------------------------- #


def test_holmes_has_one_blocking_divergent_link(holmes):
    findings = find_divergent_links(holmes)
    assert len(findings) == 1
    finding = findings[0]
    assert finding.kind == "divergent-link"
    assert finding.subjects == ("Alarm", "Burglary", "Earthquake")
    assert finding.exempt is False
    assert "Earthquake" in finding.message


def test_lone_divergent_evidence_is_exempt():
    net = build_network([_rule("h1", "E", "H1"), _rule("h2", "E", "H2")])
    findings = find_divergent_links(net)
    assert len(findings) == 1
    assert findings[0].exempt is True
    assert findings[0].subjects == ("E", "H1", "H2")


def test_no_divergent_links_in_a_chain():
    net = build_network([_rule("ab", "a", "b"), _rule("bc", "b", "c")])
    assert find_divergent_links(net) == []


def test_convergent_links(holmes, caplog):
    with caplog.at_level(logging.INFO, logger="cfaudit"):
        convergent = find_convergent_links(holmes)
    assert convergent == {"Earthquake": ("Alarm", "Radio")}
    assert "convergent links into Earthquake" in caplog.text


def test_lint_rules_reports_cycles():
    findings = lint_rules([_rule("ab", "a", "b"), _rule("ba", "b", "a")])
    assert [f.kind for f in findings] == ["cycle"]
    assert findings[0].subjects == ("a", "b")
    assert findings[0].exempt is False


def test_lint_rules_on_acyclic_rules_matches_divergent_links():
    assert lint_rules(holmes_rules()) == find_divergent_links(build_network(holmes_rules()))


def test_topology_finding_to_dict(holmes):
    data = find_divergent_links(holmes)[0].to_dict()
    assert data["kind"] == "divergent-link"
    assert data["subjects"] == ["Alarm", "Burglary", "Earthquake"]
    assert data["exempt"] is False


def _random_rules(rng, n_props=6, max_rules=8):
    props = [f"p{i}" for i in range(n_props)]
    rules = []
    for index in range(rng.randint(1, max_rules)):
        j = rng.randint(1, n_props - 1)
        sources = rng.sample(props[:j], min(j, rng.randint(1, 2)))
        if len(sources) == 1:
            antecedent = Atom(sources[0])
        else:
            antecedent = Compound(rng.choice(["and", "or"]), tuple(Atom(s) for s in sources))
        rules.append(Rule(f"r{index}", antecedent, props[j], round(rng.uniform(-1, 1), 2)))
    return rules


def _scan_divergent(rules):
    """Evidence name -> exempt flag, by direct inspection of every rule."""
    result = {}
    evidence_names = {p for r in rules for p in propositions_in(r.antecedent)}
    for evidence in evidence_names:
        own = [r for r in rules if evidence in propositions_in(r.antecedent)]
        targets = {r.consequent for r in own}
        if len(targets) < 2:
            continue
        others = [r for r in rules if r not in own and r.consequent in targets]
        result[evidence] = not others
    return result


def test_divergent_links_match_brute_force_scan():
    rng = random.Random(4)
    for _ in range(500):
        rules = _random_rules(rng)
        findings = find_divergent_links(build_network(rules))
        assert {f.subjects[0]: f.exempt for f in findings} == _scan_divergent(rules)
        blocking = any(not f.exempt for f in findings)
        assert blocking == any(not exempt for exempt in _scan_divergent(rules).values())

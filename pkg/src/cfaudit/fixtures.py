"""Built-in reference fixtures: urn problems and the burglar-alarm story.

The burglar-alarm probabilities are configuration, not ground truth; every
claim checked against them is computed by enumeration.
"""

from __future__ import annotations

from cfaudit.influence import (
    BINARY_OUTCOMES,
    CPT,
    DiagramNode,
    InfluenceDiagram,
    noisy_or_cpt,
)
from cfaudit.oracle import JointModel, urn_model
from cfaudit.rule_network import Atom, Rule

# ---------------------------------------------------------------------- #
# Urns
# ---------------------------------------------------------------------- #

TWO_URNS = ({"W": 1, "B": 2}, {"W": 2, "B": 1})
THREE_URNS = ({"W": 1, "B": 1}, {"W": 2, "B": 0}, {"W": 0, "B": 2})


def two_urn_model(replace: bool = True, draws: int = 2) -> JointModel:
    return urn_model(TWO_URNS, draws=draws, replace=replace)


def three_urn_model(draws: int = 2) -> JointModel:
    return urn_model(THREE_URNS, draws=draws, replace=True)


def three_urn_diagram() -> InfluenceDiagram:
    """Identity of urn -> Colour of ball drawn, equal priors."""
    identity = DiagramNode("Identity", ("H1", "H2", "H3"))
    colour = DiagramNode("Color", ("White", "Black"))
    third = 1.0 / 3.0
    return InfluenceDiagram(
        nodes=(identity, colour),
        arcs=frozenset({("Identity", "Color")}),
        cpts={
            "Identity": CPT("Identity", (), {(): (third, third, third)}),
            "Color": CPT(
                "Color",
                ("Identity",),
                {("H1",): (0.5, 0.5), ("H2",): (1.0, 0.0), ("H3",): (0.0, 1.0)},
            ),
        },
    )


def reversed_three_urn_diagram() -> InfluenceDiagram:
    """The same urn problem with the arc reversed: marginal on colour."""
    identity = DiagramNode("Identity", ("H1", "H2", "H3"))
    colour = DiagramNode("Color", ("White", "Black"))
    third = 1.0 / 3.0
    return InfluenceDiagram(
        nodes=(identity, colour),
        arcs=frozenset({("Color", "Identity")}),
        cpts={
            "Color": CPT("Color", (), {(): (0.5, 0.5)}),
            "Identity": CPT(
                "Identity",
                ("Color",),
                {("White",): (third, 2 * third, 0.0), ("Black",): (third, 0.0, 2 * third)},
            ),
        },
    )


# ---------------------------------------------------------------------- #
# Burglar alarm
# ---------------------------------------------------------------------- #

HOLMES_NODES = ("Alarm", "Burglary", "Earthquake", "PhoneCall", "Radio")
HOLMES_ARCS = frozenset(
    {
        ("Burglary", "Alarm"),
        ("Earthquake", "Alarm"),
        ("Alarm", "PhoneCall"),
        ("Earthquake", "Radio"),
    }
)

HOLMES_PARAMETERS = {
    "p_burglary": 0.01,
    "p_earthquake": 0.001,
    "q_burglary": 0.05,
    "q_earthquake": 0.3,
    "alarm_leak": 0.999,
    "p_call_given_alarm": 0.8,
    "p_call_given_quiet": 0.05,
    "p_radio_given_quake": 0.9,
    "p_radio_given_calm": 0.001,
}


def _prior(name: str, p: float) -> CPT:
    return CPT(name, (), {(): (p, 1.0 - p)})


def _binary_child(name: str, parent: str, p_if_true: float, p_if_false: float) -> CPT:
    return CPT(
        name,
        (parent,),
        {("true",): (p_if_true, 1.0 - p_if_true), ("false",): (p_if_false, 1.0 - p_if_false)},
    )


def holmes_diagram(**overrides: float) -> InfluenceDiagram:
    """Burglary and Earthquake cause Alarm; Alarm causes the neighbour's call;
    Earthquake causes the radio report.  Alarm is a noisy-OR of its causes."""
    params = {**HOLMES_PARAMETERS, **overrides}
    nodes = tuple(DiagramNode(name, BINARY_OUTCOMES) for name in HOLMES_NODES)
    alarm = noisy_or_cpt(
        DiagramNode("Alarm", BINARY_OUTCOMES),
        ["Burglary", "Earthquake"],
        {"Burglary": params["q_burglary"], "Earthquake": params["q_earthquake"]},
        leak=params["alarm_leak"],
    )
    cpts = {
        "Burglary": _prior("Burglary", params["p_burglary"]),
        "Earthquake": _prior("Earthquake", params["p_earthquake"]),
        "Alarm": alarm,
        "PhoneCall": _binary_child(
            "PhoneCall", "Alarm", params["p_call_given_alarm"], params["p_call_given_quiet"]
        ),
        "Radio": _binary_child(
            "Radio", "Earthquake", params["p_radio_given_quake"], params["p_radio_given_calm"]
        ),
    }
    return InfluenceDiagram(nodes=nodes, arcs=HOLMES_ARCS, cpts=cpts)


def holmes_rules() -> list[Rule]:
    """The burglar-alarm story as an inference network."""
    return [
        Rule("call", Atom("Neighbor-call"), "Alarm", 0.8),
        Rule("burglary", Atom("Alarm"), "Burglary", 0.7),
        Rule("quake", Atom("Alarm"), "Earthquake", 0.4),
        Rule("radio", Atom("Radio"), "Earthquake", 0.9),
    ]

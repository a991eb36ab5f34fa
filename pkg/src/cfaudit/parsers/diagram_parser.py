"""JSON influence-diagram format.

::

    {
      "nodes": [{"name": "Identity", "outcomes": ["H1", "H2", "H3"]}, ...],
      "arcs": [["Identity", "Color"]],
      "cpts": {
        "Identity": {"parents": [], "rows": {"": [0.333, 0.333, 0.334]}},
        "Color": {"parents": ["Identity"], "rows": {"H1": [0.5, 0.5], ...}}
      },
      "stale": []
    }

Row keys join the parent outcomes with ``,`` in the order of ``parents``;
a node without parents has the single row ``""``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from cfaudit.errors import DiagramError, ParseError
from cfaudit.influence import CPT, Arc, DiagramNode, InfluenceDiagram
from cfaudit.parsers.base import BaseParser

ROW_KEY_SEPARATOR = ","


@dataclass(frozen=True)
class DiagramDocument:
    nodes: tuple[DiagramNode, ...] = ()
    arcs: tuple[Arc, ...] = ()
    cpts: dict[str, CPT] = field(default_factory=dict)
    stale: tuple[str, ...] = ()

    def to_diagram(self) -> InfluenceDiagram:
        return InfluenceDiagram(
            nodes=self.nodes,
            arcs=frozenset(self.arcs),
            cpts=self.cpts,
            stale=frozenset(self.stale),
        )

    @classmethod
    def from_diagram(cls, d: InfluenceDiagram) -> "DiagramDocument":
        return cls(
            nodes=d.nodes,
            arcs=tuple(sorted(d.arcs)),
            cpts={n: d.cpts[n] for n in d.names if n in d.cpts},
            stale=tuple(sorted(d.stale)),
        )


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class DiagramParser(BaseParser):
    kind = "diagram"

    def parse(self, text: str, source: str = "<text>") -> DiagramDocument:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno, source) from exc

        def fail(message: str) -> ParseError:
            return ParseError(message, source=source)

        if not isinstance(data, dict):
            raise fail("a diagram must be a JSON object")
        unknown_keys = set(data) - {"nodes", "arcs", "cpts", "stale"}
        if unknown_keys:
            raise fail(f"unknown top-level keys: {', '.join(sorted(unknown_keys))}")

        nodes = self._parse_nodes(data.get("nodes", []), fail)
        by_name = {n.name: n for n in nodes}

        arcs: list[Arc] = []
        for arc in data.get("arcs", []):
            if not (isinstance(arc, list) and len(arc) == 2 and all(isinstance(a, str) for a in arc)):
                raise fail(f"an arc must be a [parent, child] pair, got {arc!r}")
            for end in arc:
                if end not in by_name:
                    raise fail(f"unknown node {end!r} in arc {arc[0]} -> {arc[1]}")
            arcs.append((arc[0], arc[1]))

        raw_cpts = data.get("cpts", {})
        if not isinstance(raw_cpts, dict):
            raise fail("'cpts' must be an object keyed by node name")
        cpts = {name: self._parse_cpt(name, spec, by_name, fail) for name, spec in raw_cpts.items()}

        stale = data.get("stale", [])
        if not isinstance(stale, list) or not all(isinstance(s, str) for s in stale):
            raise fail("'stale' must be a list of node names")
        for name in stale:
            if name not in by_name:
                raise fail(f"unknown node {name!r} in stale list")

        return DiagramDocument(nodes=nodes, arcs=tuple(arcs), cpts=cpts, stale=tuple(stale))

    def _parse_nodes(self, raw: Any, fail) -> tuple[DiagramNode, ...]:
        if not isinstance(raw, list):
            raise fail("'nodes' must be a list")
        nodes: list[DiagramNode] = []
        seen: set[str] = set()
        for entry in raw:
            if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
                raise fail(f"a node needs a string 'name', got {entry!r}")
            name = entry["name"]
            outcomes = entry.get("outcomes")
            if not isinstance(outcomes, list) or not all(isinstance(o, str) for o in outcomes):
                raise fail(f"node {name!r} needs a list of string outcomes")
            if name in seen:
                raise fail(f"node {name!r} declared twice")
            for outcome in outcomes:
                if ROW_KEY_SEPARATOR in outcome or not outcome:
                    raise fail(f"node {name!r}: invalid outcome label {outcome!r}")
            try:
                nodes.append(DiagramNode(name, tuple(outcomes)))
            except DiagramError as exc:
                raise fail(str(exc)) from exc
            seen.add(name)
        return tuple(nodes)

    def _parse_cpt(self, name: str, spec: Any, by_name: dict[str, DiagramNode], fail) -> CPT:
        if name not in by_name:
            raise fail(f"CPT given for unknown node {name!r}")
        if not isinstance(spec, dict):
            raise fail(f"CPT of {name!r} must be an object")
        parents = spec.get("parents", [])
        if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
            raise fail(f"CPT of {name!r}: 'parents' must be a list of node names")
        for parent in parents:
            if parent not in by_name:
                raise fail(f"CPT of {name!r} names unknown parent {parent!r}")
        raw_rows = spec.get("rows", {})
        if not isinstance(raw_rows, dict):
            raise fail(f"CPT of {name!r}: 'rows' must be an object")

        rows: dict[tuple[str, ...], tuple[float, ...]] = {}
        for key, values in raw_rows.items():
            config = tuple(key.split(ROW_KEY_SEPARATOR)) if parents else ()
            if (not parents and key != "") or len(config) != len(parents):
                raise fail(f"CPT of {name!r}: malformed row key {key!r}")
            for parent, outcome in zip(parents, config):
                if outcome not in by_name[parent].outcomes:
                    raise fail(f"CPT of {name!r}: row key {key!r} uses unknown outcome {outcome!r}")
            if not isinstance(values, list) or not all(_is_number(v) for v in values):
                raise fail(f"CPT of {name!r}: non-numeric probability in row {key!r}")
            rows[config] = tuple(float(v) for v in values)
        return CPT(name, tuple(parents), rows)

    def parse_cpt(self, node: str, text: str, diagram: InfluenceDiagram, source: str = "<cpt>") -> CPT:
        """Parse one ``{"parents": [...], "rows": {...}}`` object for *node* of *diagram*."""
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno, source) from exc

        def fail(message: str) -> ParseError:
            return ParseError(message, source=source)

        return self._parse_cpt(node, spec, {n.name: n for n in diagram.nodes}, fail)

    def dump(self, document: DiagramDocument) -> str:
        data = {
            "nodes": [{"name": n.name, "outcomes": list(n.outcomes)} for n in document.nodes],
            "arcs": [list(arc) for arc in document.arcs],
            "cpts": {
                name: {
                    "parents": list(cpt.parents),
                    "rows": {
                        ROW_KEY_SEPARATOR.join(config): list(values)
                        for config, values in cpt.rows.items()
                    },
                }
                for name, cpt in document.cpts.items()
            },
            "stale": list(document.stale),
        }
        return json.dumps(data, indent=2) + "\n"

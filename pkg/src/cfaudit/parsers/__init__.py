"""Parser factory: get the right parser for a document kind or file."""

from __future__ import annotations

from pathlib import Path

from cfaudit.config import DOCUMENT_EXTENSIONS
from cfaudit.parsers.base import BaseParser
from cfaudit.parsers.diagram_parser import DiagramDocument, DiagramParser
from cfaudit.parsers.event_parser import parse_event
from cfaudit.parsers.rulebase_parser import RulebaseDocument, RulebaseParser
from cfaudit.parsers.urn_parser import UrnSpec, parse_urn_spec

_rulebase_parser = RulebaseParser()
_diagram_parser = DiagramParser()


def get_parser(kind: str) -> BaseParser | None:
    if kind == "rulebase":
        return _rulebase_parser
    if kind == "diagram":
        return _diagram_parser
    return None


def parser_for_path(path: Path) -> BaseParser | None:
    kind = DOCUMENT_EXTENSIONS.get(path.suffix.lower())
    return get_parser(kind) if kind else None


__all__ = [
    "BaseParser",
    "DiagramDocument",
    "DiagramParser",
    "RulebaseDocument",
    "RulebaseParser",
    "UrnSpec",
    "get_parser",
    "parse_event",
    "parse_urn_spec",
    "parser_for_path",
]

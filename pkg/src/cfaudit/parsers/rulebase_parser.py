"""Line-oriented rule-base format.

One statement per line, ``#`` starts a comment, keywords are case-insensitive::

    rule r1: IF fever AND (cough OR sneeze) THEN flu CF 0.6
    evidence fever = 0.8

AND binds tighter than OR.  Identifiers may contain ``-`` and ``.``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple

from cfaudit.cf_engine import CertaintyFactor
from cfaudit.errors import NetworkError, ParseError
from cfaudit.parsers.base import BaseParser
from cfaudit.rule_network import Atom, Compound, Expr, InferenceNetwork, Rule, build_network

KEYWORDS = frozenset({"RULE", "EVIDENCE", "IF", "THEN", "CF", "AND", "OR"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#.*)
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<punct>[():=])
    """,
    re.VERBOSE,
)


class _Token(NamedTuple):
    kind: str  # keyword | ident | number | punct | end
    text: str
    column: int


@dataclass(frozen=True)
class RulebaseDocument:
    rules: tuple[Rule, ...] = ()
    evidence: dict[str, CertaintyFactor] = field(default_factory=dict)

    def network(self) -> InferenceNetwork:
        return build_network(self.rules)


def _tokenize(line: str, lineno: int, source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(line):
        match = _TOKEN_RE.match(line, pos)
        if match is None:
            raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1, source)
        kind = match.lastgroup
        text = match.group()
        if kind == "ident" and text.upper() in KEYWORDS:
            tokens.append(_Token("keyword", text.upper(), pos + 1))
        elif kind not in ("ws", "comment"):
            tokens.append(_Token(kind, text, pos + 1))
        pos = match.end()
    tokens.append(_Token("end", "", len(line) + 1))
    return tokens


class _LineParser:
    """Recursive-descent parser over the tokens of one line."""

    def __init__(self, tokens: list[_Token], lineno: int, source: str):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.source = source

    # --- token helpers ---
    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: _Token | None = None) -> ParseError:
        token = token or self.current
        return ParseError(message, self.lineno, token.column, self.source)

    def _describe(self, token: _Token) -> str:
        return "end of line" if token.kind == "end" else repr(token.text)

    def accept_keyword(self, word: str) -> bool:
        if self.current.kind == "keyword" and self.current.text == word:
            self.pos += 1
            return True
        return False

    def expect_keyword(self, word: str) -> _Token:
        token = self.current
        if not self.accept_keyword(word):
            raise self.error(f"expected {word}, found {self._describe(token)}")
        return token

    def expect(self, kind: str, what: str, text: str | None = None) -> _Token:
        token = self.current
        if token.kind != kind or (text is not None and token.text != text):
            raise self.error(f"expected {what}, found {self._describe(token)}")
        self.pos += 1
        return token

    def expect_cf(self) -> tuple[float, _Token]:
        token = self.expect("number", "a number")
        value = float(token.text)
        if not -1.0 <= value <= 1.0:
            raise self.error(f"CF {token.text} is outside [-1, 1]", token)
        return value, token

    def expect_end(self) -> None:
        if self.current.kind != "end":
            raise self.error(f"unexpected {self._describe(self.current)}")

    # --- expressions ---
    def parse_or(self) -> Expr:
        parts = [self.parse_and()]
        while self.accept_keyword("OR"):
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Compound("or", tuple(parts))

    def parse_and(self) -> Expr:
        parts = [self.parse_factor()]
        while self.accept_keyword("AND"):
            parts.append(self.parse_factor())
        return parts[0] if len(parts) == 1 else Compound("and", tuple(parts))

    def parse_factor(self) -> Expr:
        if self.current.kind == "punct" and self.current.text == "(":
            self.pos += 1
            expr = self.parse_or()
            self.expect("punct", "')'", ")")
            return expr
        return Atom(self.expect("ident", "a proposition").text)


class RulebaseParser(BaseParser):
    kind = "rulebase"

    def parse(self, text: str, source: str = "<text>") -> RulebaseDocument:
        rules: list[Rule] = []
        rule_ids: set[str] = set()
        evidence: dict[str, float] = {}

        for lineno, line in enumerate(text.splitlines(), start=1):
            tokens = _tokenize(line, lineno, source)
            if tokens[0].kind == "end":
                continue
            p = _LineParser(tokens, lineno, source)
            if p.accept_keyword("RULE"):
                rule_token = p.expect("ident", "a rule id")
                if rule_token.text in rule_ids:
                    raise p.error(f"duplicate rule id {rule_token.text!r}", rule_token)
                p.expect("punct", "':'", ":")
                p.expect_keyword("IF")
                antecedent = p.parse_or()
                p.expect_keyword("THEN")
                consequent = p.expect("ident", "a proposition").text
                p.expect_keyword("CF")
                cf, _ = p.expect_cf()
                p.expect_end()
                try:
                    rules.append(Rule(rule_token.text, antecedent, consequent, cf))
                except NetworkError as exc:
                    raise ParseError(str(exc), lineno, rule_token.column, source) from exc
                rule_ids.add(rule_token.text)
            elif p.accept_keyword("EVIDENCE"):
                name_token = p.expect("ident", "a proposition")
                if name_token.text in evidence:
                    raise p.error(f"evidence for {name_token.text!r} given twice", name_token)
                p.expect("punct", "'='", "=")
                cf, _ = p.expect_cf()
                p.expect_end()
                evidence[name_token.text] = cf
            else:
                raise p.error(f"expected 'rule' or 'evidence', found {p._describe(p.current)}")

        return RulebaseDocument(rules=tuple(rules), evidence=evidence)

    def dump(self, document: RulebaseDocument) -> str:
        lines = [f"rule {rule}" for rule in document.rules]
        lines.extend(f"evidence {name} = {cf!r}" for name, cf in document.evidence.items())
        return "\n".join(lines) + "\n" if lines else ""

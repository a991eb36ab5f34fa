"""Compact urn-problem descriptions, e.g. ``urn:1W2B,2W1B;draws=2;replace=false``.

Each urn lists ball counts, each followed by a colour name.  Options
after ``;`` are ``draws=N``, ``replace=true|false`` and ``priors=p1,p2,...``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from cfaudit.errors import ParseError
from cfaudit.oracle import MAX_ASSIGNMENTS, JointModel, urn_model

URN_PREFIX = "urn:"

_URN_RE = re.compile(r"(?:\d+[A-Za-z]+)+")
_BALLS_RE = re.compile(r"(\d+)([A-Za-z]+)")
_TRUE = {"true", "yes", "1"}
_FALSE = {"false", "no", "0"}


@dataclass(frozen=True)
class UrnSpec:
    urns: tuple[dict[str, int], ...]
    draws: int = 2
    replace: bool = True
    priors: tuple[float, ...] | None = None

    def model(self, max_assignments: int = MAX_ASSIGNMENTS) -> JointModel:
        return urn_model(
            self.urns,
            draws=self.draws,
            replace=self.replace,
            priors=self.priors,
            max_assignments=max_assignments,
        )


def is_urn_spec(text: str) -> bool:
    return text.startswith(URN_PREFIX)


def parse_urn_spec(text: str) -> UrnSpec:
    body = text[len(URN_PREFIX):] if is_urn_spec(text) else text
    sections = [s.strip() for s in body.split(";")]

    urns: list[dict[str, int]] = []
    for raw in sections[0].split(","):
        raw = raw.strip()
        if not _URN_RE.fullmatch(raw):
            raise ParseError(f"malformed urn {raw!r}; expected counts like 1W2B", source=text)
        urn: dict[str, int] = {}
        for count, colour in _BALLS_RE.findall(raw):
            urn[colour] = urn.get(colour, 0) + int(count)
        urns.append(urn)

    options: dict[str, str] = {}
    for section in sections[1:]:
        if not section:
            continue
        key, sep, value = section.partition("=")
        if not sep:
            raise ParseError(f"malformed option {section!r}", source=text)
        options[key.strip().lower()] = value.strip()

    unknown = set(options) - {"draws", "replace", "priors"}
    if unknown:
        raise ParseError(f"unknown urn options: {', '.join(sorted(unknown))}", source=text)

    try:
        draws = int(options.get("draws", "2"))
    except ValueError:
        raise ParseError(f"draws must be an integer, got {options['draws']!r}", source=text) from None

    replace_text = options.get("replace", "true").lower()
    if replace_text not in _TRUE | _FALSE:
        raise ParseError(f"replace must be true or false, got {replace_text!r}", source=text)

    priors = None
    if "priors" in options:
        try:
            priors = tuple(float(p) for p in options["priors"].split(","))
        except ValueError:
            raise ParseError(f"priors must be numbers, got {options['priors']!r}", source=text) from None

    return UrnSpec(urns=tuple(urns), draws=draws, replace=replace_text in _TRUE, priors=priors)

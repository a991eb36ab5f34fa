"""Command-line event syntax.

``A=x`` fixes a variable, ``A=x|y`` allows several outcomes, ``A!=x`` excludes
one; terms are joined with ``,`` (conjunction).  ``*`` or the empty string is
the universal event.
"""

from __future__ import annotations

import re

from cfaudit.errors import ParseError
from cfaudit.oracle import UNIVERSAL_EVENT, Event

_TERM_RE = re.compile(r"\s*(?P<var>[^=!,|\s]+)\s*(?P<op>!=|=)\s*(?P<outs>[^,]+?)\s*$")


def parse_event(text: str, source: str = "<event>") -> Event:
    if text.strip() in ("", "*"):
        return UNIVERSAL_EVENT

    event = UNIVERSAL_EVENT
    column = 1
    for term in text.split(","):
        match = _TERM_RE.match(term)
        if match is None:
            raise ParseError(f"malformed event term {term.strip()!r}", 1, column, source)
        outcomes = [o.strip() for o in match["outs"].split("|")]
        if any(not o for o in outcomes):
            raise ParseError(f"empty outcome in {term.strip()!r}", 1, column, source)
        if match["op"] == "!=":
            if len(outcomes) != 1:
                raise ParseError(f"'!=' takes a single outcome in {term.strip()!r}", 1, column, source)
            event = event & ~Event.where(match["var"], outcomes[0])
        else:
            event = event & Event.where(match["var"], *outcomes)
        column += len(term) + 1
    return event

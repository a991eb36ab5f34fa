"""Abstract base class for document parsers."""

from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from cfaudit.errors import ParseError


def read_source(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 text (byte {exc.start})", source=str(path)) from exc
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), source=str(path)) from exc


class BaseParser(ABC):
    #: Document kind handled, as named in ``config.DOCUMENT_EXTENSIONS``.
    kind: str = ""

    @abstractmethod
    def parse(self, text: str, source: str = "<text>") -> Any:
        """Parse *text* into a document.

        Args:
            text: Full document text.
            source: Name used in error locations (usually the file path).

        Raises:
            ParseError: on the first syntax or well-formedness error.
        """
        ...

    @abstractmethod
    def dump(self, document: Any) -> str:
        """Serialise *document* so that ``parse(dump(doc)) == doc``."""
        ...

    def parse_file(self, path: Path) -> Any:
        return self.parse(read_source(path), source=str(path))

    def dump_file(self, document: Any, path: Path) -> None:
        path.write_text(self.dump(document), encoding="utf-8")

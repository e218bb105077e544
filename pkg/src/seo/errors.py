"""Exception types raised across the toolkit.

Every data-level problem derives from :class:`SeoError`; the CLI maps
those to exit code 1 and prints ``str(exc)`` as the diagnostic.
"""

from __future__ import annotations


class SeoError(Exception):
    """Base class for validation and data errors."""

    def __init__(self, message: str, *, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        prefix = ":".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


# ontology
class OntologyError(SeoError):
    pass


class DuplicateLeaf(OntologyError):
    pass


class UnknownGroup(OntologyError):
    pass


class CountMismatch(OntologyError):
    pass


class UnknownIntent(OntologyError):
    pass


class NotASymptom(OntologyError):
    pass


# corpus
class CorpusError(SeoError):
    pass


class CorpusSyntaxError(CorpusError):
    """Malformed JSON on a corpus line; carries the absolute byte offset."""

    def __init__(self, message: str, *, line: int, offset: int, source: str | None = None):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})", line=line, source=source)


class SchemaError(CorpusError):
    pass


class DuplicateDialogueId(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


# state tracking
class UnknownSlot(SeoError):
    pass


class LengthMismatch(SeoError):
    pass


class MalformedLexicon(SeoError):
    pass


# fusion
class KeyMismatch(SeoError):
    pass


class BadThreshold(SeoError):
    pass


# engagement
class MissingIntents(SeoError):
    pass


class MissingStates(SeoError):
    pass


# simulation
class MissingTemplate(SeoError):
    pass


class NonTerminating(SeoError):
    pass


class RuleTableError(SeoError):
    pass

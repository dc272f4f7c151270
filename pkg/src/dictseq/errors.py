"""Exception hierarchy shared by all dictseq modules."""


class DictseqError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(DictseqError):
    """Bad invocation: unknown keys, missing files, malformed run specs."""


class ParseError(DictseqError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class CorpusError(DictseqError):
    """A corpus violates a data invariant (e.g. an I tag opening a span)."""


class ConfigError(DictseqError):
    """Inconsistent or impossible configuration."""


class ContractViolation(DictseqError):
    """Caller broke a precondition (shape/length mismatch, misalignment)."""


class NumericError(DictseqError):
    """NaN/Inf detected during numeric computation."""


class StoreError(DictseqError):
    """Malformed or truncated binary store/checkpoint file."""

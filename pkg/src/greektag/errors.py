"""Exception hierarchy shared by all greektag modules."""


class GreektagError(Exception):
    """Base class for all errors raised by this package."""


class TagError(GreektagError):
    """A tag string or Tag value violates the tagset schema."""


class FormatError(GreektagError):
    """A data file (corpus, schema, rules, lexicon, model, CSV) is malformed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ModelError(GreektagError):
    """The model is unusable for the requested operation (untrained, bad input)."""


class SearchSpaceError(GreektagError):
    """Exhaustive enumeration was requested for an instance that is too large."""

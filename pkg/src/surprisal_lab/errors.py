class SurprisalLabError(Exception):
    """Base class for user-facing errors (bad input, impossible request)."""


class FormatError(SurprisalLabError):
    """Malformed input file. Carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class GrammarError(SurprisalLabError):
    pass


class ParseError(SurprisalLabError):
    """A sentence cannot be scored (zero prefix probability, unknown token)."""

    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message)

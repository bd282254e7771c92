"""Exception hierarchy.

Every error raised by the library derives from :class:`ScoreConfError` so the
CLI can report it uniformly; the class name doubles as the machine-readable
error code.
"""


class ScoreConfError(ValueError):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        name = type(self).__name__
        return name[:-5] if name.endswith("Error") else name


class DimensionMismatchError(ScoreConfError):
    pass


class NonFiniteValueError(ScoreConfError):
    pass


class ZeroNormError(ScoreConfError):
    pass


class NotNormalizedError(ScoreConfError):
    pass


class InvalidValueError(ScoreConfError):
    pass


class NegativeSigmaError(ScoreConfError):
    pass


class TooFewSamplesError(ScoreConfError):
    pass


class InvalidConfigError(ScoreConfError):
    pass


class SingleSubjectError(ScoreConfError):
    pass


class NoImpostersError(ScoreConfError):
    pass


class NoGenuinesError(ScoreConfError):
    pass


class EmptyInputError(ScoreConfError):
    pass


class MissingKeyError(ScoreConfError):
    pass


class TooFewPointsError(ScoreConfError):
    pass


class UnknownIdError(ScoreConfError):
    pass


class DuplicateIdError(ScoreConfError):
    pass


class HeaderMismatchError(ScoreConfError):
    pass


class ParseError(ScoreConfError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)

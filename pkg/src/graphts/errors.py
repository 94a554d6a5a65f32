"""Exception hierarchy.

Everything raised on purpose derives from :class:`GraphTSError`.  The CLI
maps :class:`ConfigError` to exit code 1 and every other
:class:`DataError` to exit code 2.
"""


class GraphTSError(Exception):
    """Base class for all package errors."""


class ConfigError(GraphTSError):
    def __init__(self, key, message=None):
        self.key = key
        super().__init__(f"{key}: {message}" if message else key)


class DataError(GraphTSError):
    """Bad input data or arguments; the run cannot proceed."""


class EmptyInput(DataError):
    pass


class ParseError(DataError):
    def __init__(self, path, row, column, token):
        self.path, self.row, self.column, self.token = path, row, column, token
        super().__init__(f"{path}: cannot parse {token!r} at row {row}, column {column}")


class NonFiniteValue(DataError):
    pass


class MissingFile(DataError, FileNotFoundError):
    pass


class UnknownLabel(DataError):
    pass


class DuplicatePath(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class IoError(DataError, OSError):
    pass


class InvalidParams(DataError):
    pass


class InvalidWindowLen(DataError):
    pass


class NyquistViolation(DataError):
    pass


class UnsupportedOrder(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class WindowTooLong(DataError):
    pass


class BadNode(DataError):
    pass


class UnlabeledRow(DataError):
    pass


class TooFewGroups(DataError):
    pass


class BadK(DataError):
    pass


class EmptyGroup(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class SingleClass(DataError):
    pass


class BadSpec(DataError):
    pass


class EmptyMatrix(DataError):
    pass

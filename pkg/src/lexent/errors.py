"""Exception hierarchy shared across the package."""


class LexentError(Exception):
    """Base class for all package errors."""


class ParseError(LexentError):
    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.offset = offset


class DuplicateTokenError(ParseError):
    pass


class OOVError(LexentError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class IngestError(LexentError):
    def __init__(self, message, row=None):
        super().__init__(f"{message} (row {row})" if row is not None else message)
        self.row = row


class SplitError(LexentError):
    pass


class DimensionError(LexentError, ValueError):
    pass


class ConfigError(LexentError, ValueError):
    pass


class TrainError(LexentError):
    pass


class KernelError(LexentError, ValueError):
    pass


class SearchError(LexentError):
    pass


class EvalError(LexentError, ValueError):
    pass


class ReportError(LexentError):
    pass

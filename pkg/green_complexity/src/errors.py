"""Exceptions raised by the toolkit.

Each class carries the process exit code the command line maps it to.
"""


class GreenComplexityError(Exception):
    exit_code = 1

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details if details is not None else {}

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
            "details": self.details,
        }


class ConfigError(GreenComplexityError, ValueError):
    """Invalid parameters or configuration document."""
    exit_code = 2


class DataError(GreenComplexityError, ValueError):
    """Input data violates a precondition."""
    exit_code = 3


class ParseError(DataError):
    """Malformed rows in an input file.

    Parameters
    ----------
    issues : list of tuple
        ``(line_number, field, message)`` for every offending row.
    """

    def __init__(self, issues, source=None):
        self.issues = list(issues)
        lines = sorted({line for line, _, _ in self.issues})
        where = f" in {source}" if source else ""
        shown = ", ".join(str(line) for line in lines[:20])
        if len(lines) > 20:
            shown += ", ..."
        message = f"{len(lines)} malformed row(s){where} at line(s) {shown}"
        super().__init__(
            message,
            details={"issues": [
                {"line": line, "field": field, "message": msg}
                for line, field, msg in self.issues
            ]},
        )

    @property
    def lines(self):
        return sorted({line for line, _, _ in self.issues})


class ConvergenceError(GreenComplexityError, RuntimeError):
    """A solver failed to converge or diverged."""
    exit_code = 4

"""Exception types shared across modules.

Each carries the process exit code the command-line front end maps it to.
"""


class SpeciesError(Exception):
    exit_code = 1


class ParseError(SpeciesError, ValueError):
    """Malformed input; ``line`` is the 1-based line number when known."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PathologyError(SpeciesError, ValueError):
    """The data sit on a boundary where the estimator does not exist."""

    exit_code = 3


class SizeGuardError(SpeciesError, ValueError):
    """An exact computation was refused because the instance is too large."""

    exit_code = 4


class NumericalError(SpeciesError, ArithmeticError):
    """A numerical routine failed to converge or lost all accuracy.

    ``best`` holds the last iterate when one is available.
    """

    exit_code = 5

    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)

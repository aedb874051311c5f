"""Exception types shared across the package.

The CLI maps these onto exit codes: validation and parse problems exit 1,
infeasible parameters exit 2, internal consistency failures exit 3.
"""


class ShapeError(ValueError):
    """Operand dimensions do not conform."""


class ParameterError(ValueError):
    """Requested parameters are infeasible (divisibility, rate, budget)."""


class ValidationError(ValueError):
    """A constructed or loaded object violates a structural invariant."""


class ParseError(ValueError):
    """A text artifact (graph file, config, descriptor) is malformed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class SamplingError(RuntimeError):
    """A randomized construction exhausted its rejection budget."""


class InternalError(AssertionError):
    """A should-not-happen condition; indicates a defect, not bad input."""

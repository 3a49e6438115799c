"""Exception hierarchy shared by the library and the CLI."""


class CosimError(Exception):
    """Base class for all errors raised by ecosim."""


class GraphError(CosimError):
    """Invalid coupling graph."""


class AlgebraicLoop(GraphError):
    pass


class SignConvention(GraphError):
    pass


class DanglingPort(GraphError):
    pass


class DimensionMismatch(CosimError, ValueError):
    pass


class InsufficientHistory(CosimError):
    pass


class NonPositiveStep(CosimError, ValueError):
    pass


class SingularMatrix(CosimError):
    pass


class UnknownVariant(CosimError, ValueError):
    pass


class SlaveFailure(CosimError):
    """A slave rejected or failed a macro step."""

    def __init__(self, step_index: int, slave_index: int, cause: BaseException):
        self.step_index = step_index
        self.slave_index = slave_index
        self.cause = cause
        super().__init__(f"slave {slave_index} failed at macro step {step_index}: {cause}")


class ScenarioError(CosimError):
    """Raised for malformed or incomplete scenario files."""


class ParseError(ScenarioError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")


class UnknownKey(ScenarioError):
    pass


class MissingRequired(ScenarioError):
    pass


class IncomparableRuns(CosimError):
    pass

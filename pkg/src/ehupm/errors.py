"""Exception hierarchy for the mining engine."""


class EhupmError(Exception):
    """Base class for all errors raised by this package."""


class FactSyntaxError(EhupmError):
    """A fact file violates the grammar; carries the source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DatasetError(EhupmError):
    """Parsed facts do not form a valid layered dataset."""


class SpecError(EhupmError):
    """Malformed utility, mask, or item-filter specification."""


class EvaluationUndefined(EhupmError):
    """A utility function has no defined value on the given pattern utility matrix.

    This is a distinct outcome, not an error in the input: the miner counts
    affected patterns in a diagnostics tally instead of failing the run.
    """

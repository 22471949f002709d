"""Exception hierarchy shared by all hyperqual modules."""


class HyperqualError(Exception):
    """Base class for every error raised by this package."""


class ParseError(HyperqualError):
    """Syntax or validation error in a text input, with source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class UnboundVariableError(ParseError):
    """An atom refers to a trace variable that is not in scope."""


class StructureError(HyperqualError):
    """A Kripke structure, lasso, or assignment violates an invariant."""


class FragmentError(HyperqualError):
    """A formula is outside the fragment a procedure supports."""


class ThresholdError(HyperqualError):
    """A threshold or approximation parameter is outside its legal range."""


class StateCapExceededError(HyperqualError):
    """An automaton construction grew past the configured state cap."""

    def __init__(self, stage: str, cap: int):
        self.stage = stage
        self.cap = cap
        super().__init__(f"state cap {cap} exceeded during {stage}")


class InternalSoundnessError(HyperqualError):
    """An internal cross-check failed; indicates a bug, not bad input."""

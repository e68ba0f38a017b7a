"""Exception types shared across the package."""


class DagrammarError(Exception):
    """Base class for all package errors."""


class ParseError(DagrammarError):
    """Malformed textual input (PENMAN, clauses, grammar or trace files)."""


class GraphError(DagrammarError):
    """Graph construction violated a structural invariant."""


class ConversionError(DagrammarError):
    """Box structure and graph representations could not be converted."""


class GrammarExtractionError(DagrammarError):
    """A graph could not be decomposed into productions."""


class DeriveError(DagrammarError):
    """An action could not be applied to a derivation state."""


class EvalError(DagrammarError):
    """Evaluation inputs violated a precondition."""

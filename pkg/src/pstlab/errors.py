"""Exception hierarchy.

Validation problems derive from ``ValueError`` so callers that only care about
bad input can catch that; numerical failures derive from ``NumericalError`` and
map to exit code 3 in the CLI.
"""


class PstlabError(Exception):
    pass


class InvalidArgumentError(PstlabError, ValueError):
    pass


class InvalidDesignError(InvalidArgumentError):
    pass


class UnsupportedParametrizationError(InvalidDesignError):
    pass


class InvalidHamiltonianError(InvalidArgumentError):
    pass


class InvalidRecordError(InvalidArgumentError):
    pass


class NumericalError(PstlabError, ArithmeticError):
    pass


class SearchFailureError(NumericalError):
    pass


class EmptyPostselectionError(NumericalError):
    pass

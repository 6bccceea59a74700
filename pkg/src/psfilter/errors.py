"""Exception types shared across the package."""


class PsfilterError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PsfilterError):
    """Malformed or out-of-domain input (bad file, bad parameter range)."""


class InvalidFilterError(InvalidInputError):
    """A candidate POVM element violates 0 <= F <= 1."""


class PostselectionError(PsfilterError):
    """Postselection probability is numerically zero; downstream quantities undefined."""


class SingularQFIMError(PsfilterError):
    """QFIM is singular: some parameter combination is not identifiable.

    ``null_space`` holds an orthonormal basis (columns) of the unidentifiable
    directions in parameter space.
    """

    def __init__(self, message, null_space):
        super().__init__(message)
        self.null_space = null_space


class DegenerateRegimeError(PsfilterError):
    """An optimization regime has no finite optimum (e.g. noiseless amplification)."""

"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class EmptyAccumulatorError(ValueError):
    """A determinant was requested from an accumulator holding no points."""


class SingularFisherError(ArithmeticError):
    """The Fisher information matrix is singular for the requested bound."""


class InfeasiblePlacementError(RuntimeError):
    """No admissible position remains for the next port.

    Attributes:
        stage: 1-based greedy stage (or port index for rejection sampling)
            at which the search ran dry, or ``None`` for the candidate phase.
        placed: number of ports already placed when the failure occurred.
    """

    def __init__(self, message, stage=None, placed=None):
        super().__init__(message)
        self.stage = stage
        self.placed = placed


class NoSidelobeError(ValueError):
    """The main-lobe region covers every visible cell of a beam map."""

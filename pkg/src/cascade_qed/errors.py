"""Exception hierarchy shared by the physics modules and the CLI."""


class CascadeError(Exception):
    """Base class for all errors raised by cascade_qed."""


class InvalidParameters(CascadeError, ValueError):
    pass


class NonConvergence(CascadeError):
    pass


class DegenerateSpectrum(CascadeError):
    """Eigendecomposition failed its reconstruction test (defective or near-defective matrix)."""

    def __init__(self, message, matrix=None, error=None):
        super().__init__(message)
        self.matrix = matrix
        self.error = error


class DegenerateGenerator(DegenerateSpectrum):
    """The Liouvillian could not be diagonalized to the required accuracy.

    ``generator`` holds the 9x9 matrix so callers can fall back to direct propagation.
    """

    @property
    def generator(self):
        return self.matrix


class StepTooLarge(CascadeError, ValueError):
    pass


class TailTooHeavy(CascadeError):
    """Excitation left at the end of the time window exceeds the tail tolerance."""

    def __init__(self, message, tail_mass=None):
        super().__init__(message)
        self.tail_mass = tail_mass


class InfeasibleProblem(CascadeError):
    pass

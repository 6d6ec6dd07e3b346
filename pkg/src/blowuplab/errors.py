"""Exception types shared across the laboratory."""


class BlowupLabError(Exception):
    """Base class for laboratory-specific failures."""


class ResonanceError(BlowupLabError):
    """A resonant eigen-block turned out inconsistent beyond tolerance.

    The coupled eigenproblem is solved degree by degree; when a lower block
    is singular the right-hand side must lie in its range.  A violation
    signals an implementation bug, not a property of the operator.
    """


class PositivityError(BlowupLabError):
    """A field crossed the positivity floor where positivity is required."""

    def __init__(self, message: str, location: float | None = None,
                 value: float | None = None):
        super().__init__(message)
        self.location = location
        self.value = value


class StiffnessError(BlowupLabError):
    """Time step collapsed below the useful resolution of the integrator."""


class NoBracketError(BlowupLabError):
    """Both shooting bracket endpoints escape on the same side."""


class GluingError(BlowupLabError):
    """Piecewise initial data mismatch across a gluing region is too large."""

"""Exception and warning types raised by givlab."""

from __future__ import annotations


class GivError(Exception):
    """Base class for every error raised by the library."""


class DimensionMismatch(GivError, ValueError):
    pass


class SpaceMismatch(GivError, ValueError):
    """Two vectors from different Hilbert spaces were contracted."""


class NotNormalized(GivError, ValueError):
    pass


class NotUnitaryInput(GivError, ValueError):
    pass


class ProbabilityOutOfRange(GivError, ValueError):
    pass


class UnknownVariable(GivError, KeyError):
    pass


class IndexOutOfRange(GivError, IndexError):
    pass


class SameVariable(GivError, ValueError):
    pass


class DegenerateDirections(GivError, ValueError):
    pass


class ConstraintViolation(GivError, ValueError):
    pass


class AngleOutOfRange(GivError, ValueError):
    pass


class SingularEmbedding(GivError, ValueError):
    pass


class InvalidConfig(GivError, ValueError):
    pass


class NonUnitaryTransition(GivError):
    """Some transition matrix is not unitary, so the spaces cannot be merged."""

    def __init__(self, pair: tuple[str, str], defect: float):
        self.pair = pair
        self.defect = defect
        super().__init__(
            f"transition {pair[0]}->{pair[1]} is not unitary (defect {defect:.3e})"
        )


class CollapseInconsistency(GivError):
    """All transitions are unitary but the merged Born rule disagrees with a restricted one."""

    def __init__(self, pair: tuple[str, str], defect: float):
        self.pair = pair
        self.defect = defect
        super().__init__(
            f"merged probabilities for {pair[0]}/{pair[1]} deviate from the "
            f"restricted Born rule by {defect:.3e}"
        )


class SingularAngle(UserWarning):
    """A rotation angle was requested where f == 0; pi/2 is returned."""

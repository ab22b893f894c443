"""Exception types shared across the package."""


class MatchGamesError(Exception):
    """Base class for all library errors."""


class MalformedRationalError(MatchGamesError):
    """A rational literal could not be parsed exactly."""


class DimensionMismatchError(MatchGamesError):
    """A payoff matrix does not match the owning agents' strategy counts."""


class QuotaOutOfRangeError(MatchGamesError):
    """A hospital quota is below 1."""


class ClassTagViolationError(MatchGamesError):
    """A game's matrices contradict its declared class tag.

    Carries the first offending entry as ``(row, col, found, expected)``.
    """

    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


class NotStrictlyCompetitiveError(ClassTagViolationError):
    """No affine variant relates the two payoff matrices."""


class InfeasibleError(MatchGamesError):
    """A constrained optimisation problem has an empty feasible set."""


class InfeasibleReservationsError(MatchGamesError):
    """No profile satisfies both reservation constraints."""


class EpsilonNotPositiveError(MatchGamesError):
    """A solver was invoked with epsilon <= 0."""


class InputNotPairwiseStableError(MatchGamesError):
    """The renegotiation process requires a pairwise stable input."""


class UnsupportedClassError(MatchGamesError):
    """The requested exact computation is not available for this game class."""


class ScanCapExceededError(MatchGamesError):
    """An exhaustive audit would exceed its configured size cap."""


class CapExceededError(MatchGamesError):
    """An enumeration would exceed its configured cap."""


class NotAnAspirationError(MatchGamesError):
    """realize_aspiration was handed a profile failing the aspiration equation."""

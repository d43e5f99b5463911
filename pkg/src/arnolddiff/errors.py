"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, InvariantViolation -> 4,
any other ArnolddiffError -> 3.
"""


class ArnolddiffError(Exception):
    """Base class for domain errors raised by this package."""


class ConfigError(ArnolddiffError):
    """Malformed or incomplete run configuration."""


class InvariantViolation(ArnolddiffError):
    """A build-time invariant check failed."""


class StepSizeUnderflow(ArnolddiffError):
    """Adaptive integrator pushed the step below h_min."""


class MaxStepsExceeded(ArnolddiffError):
    """Adaptive integrator ran out of its step budget."""


class EventNotFound(ArnolddiffError):
    """No section crossing within the integration horizon."""


class NotHorizontal(ArnolddiffError):
    """Crest is not a horizontal graph at the requested actions."""


class NoConvergence(ArnolddiffError):
    """Root iteration failed; must not happen in the safe parameter regime."""


class WindowUnreachable(ArnolddiffError):
    """Rotation never entered the requested angular window within the budget."""


class UseScatteringDetour(ArnolddiffError):
    """Degenerate resonant line: rotation alone cannot reach the window."""


class AsymptoticsUnreliable(ArnolddiffError):
    """Far-field seed formula used too close to the resonance region."""


class LevelDrift(ArnolddiffError):
    """Conserved level degraded beyond tolerance along a traced orbit."""


class RangeNotCovered(ArnolddiffError):
    """Requested frequency range extends past the stored orbit samples."""


class EpsilonTooLarge(ArnolddiffError):
    """Perturbation size above the tracking threshold for this path."""


class Stuck(ArnolddiffError):
    """Pseudo-orbit builder could not make progress; carries a state dump."""


class DegenerateDirection(ArnolddiffError):
    """Path requires motion along an action with zero coupling amplitude."""


class ExcursionTooShort(ArnolddiffError):
    """Homoclinic excursion endpoints not close enough to the invariant set."""

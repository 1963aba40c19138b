"""Exception hierarchy shared by all subsystems.

Every failure mode carries an exit-code class so the CLI can map it to the
scriptable contract (1 = mathematical check failed, 2 = bad input,
3 = precision or budget exhausted).
"""


class PadicSignError(Exception):
    exit_code = 1


class MathCheckError(PadicSignError):
    """An exactness certification or invariant failed."""

    exit_code = 1


class InputError(PadicSignError):
    """Malformed or out-of-contract input."""

    exit_code = 2


class PrecisionError(PadicSignError):
    """A result could not be certified at the requested precision."""

    exit_code = 3


class TailBoundError(PrecisionError):
    """An operation needed Laurent exponents below the configured window."""


class StabilizationError(PrecisionError):
    """A quantity failed to stabilize within the window or limit schedule."""

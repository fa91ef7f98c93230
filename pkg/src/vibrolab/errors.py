"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: usage errors exit 1,
data/validation errors exit 2, numerical non-convergence exits 3.
"""


class VibrolabError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(VibrolabError, ValueError):
    """An argument or configuration value is out of its valid range."""


class DataError(VibrolabError, ValueError):
    """Input data violates an invariant (bad file, bad trace, bad trial log)."""


class SeparationError(DataError):
    """A probit fit was requested on degenerate data (single response class)."""


class ConvergenceError(VibrolabError, RuntimeError):
    """An iterative numerical procedure failed to converge."""


class UnreliableCIError(ConvergenceError):
    """Too many bootstrap resamples failed to fit; the interval is not trustworthy."""

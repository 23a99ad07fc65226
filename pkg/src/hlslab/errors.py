"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: check failure -> 1, InputError -> 2,
ResourceError -> 3.
"""


class InputError(ValueError):
    """Malformed or out-of-contract input (bad generator index, rank
    mismatch, non-self-adjoint element where one is required, ...)."""


class ResourceError(RuntimeError):
    """A configured cap would be exceeded (ball size, fiber order,
    homomorphism enumeration level).  The message names the cap."""


class ConvergenceError(RuntimeError):
    """Spectral iteration did not certify the requested bracket width.
    Carries the best verified bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class DegenerateCertificateError(InputError):
    """Certificate with zero mass at the infinity fiber."""

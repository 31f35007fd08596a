"""Exception taxonomy shared across the package.

The CLI maps InputError to a distinct exit status from computation
failures, so raising the right class matters at module boundaries.
"""


class CryptosentError(Exception):
    """Base class for all package errors."""


class InputError(CryptosentError):
    """Bad or missing user-supplied data: files, schemas, config values."""


class ComputationError(CryptosentError):
    """A well-formed request that cannot be computed (degenerate data, singular systems)."""


class ConvergenceError(ComputationError):
    """Iterative optimization failed to converge; carries the last iterate."""

    def __init__(self, message, last_params=None, grad_norm=None):
        super().__init__(message)
        self.last_params = last_params
        self.grad_norm = grad_norm

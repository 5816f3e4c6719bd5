"""Exception types raised by the library."""


class ImproperPosteriorError(ValueError):
    """The data cannot support a proper posterior (for example ``d = 0``)."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to meet its tolerance."""

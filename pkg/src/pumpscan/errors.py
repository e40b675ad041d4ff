"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file being read does not conform to its declared format.

    Messages include the file path and, where meaningful, the 1-based
    line number or byte offset of the offending content.
    """


class ConvergenceError(RuntimeError):
    """The dual solver hit its iteration limit before reaching the KKT
    tolerance.  Carries best-so-far diagnostics."""

    def __init__(self, message, n_iter, gap, alpha=None):
        super().__init__(message)
        self.n_iter = n_iter
        self.gap = gap
        self.alpha = alpha

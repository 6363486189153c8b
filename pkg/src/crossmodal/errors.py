"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or inconsistent input data (bad file, dimension drift, duplicate ids)."""


class NumericalError(RuntimeError):
    """Numerical failure: non-finite state or a linear-algebra routine that did not converge."""

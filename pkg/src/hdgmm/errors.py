"""Exception hierarchy shared across the package."""


class HdgmmError(Exception):
    """Base class for all package errors."""


class FormatError(HdgmmError, ValueError):
    """Malformed, truncated or unrecognized binary file."""


class InsufficientDataError(HdgmmError, ValueError):
    """Too few records for the requested model size."""


class DegenerateComponentError(HdgmmError, ArithmeticError):
    """A mixture component lost (almost) all of its mass.

    Attributes
    ----------
    component : int
        Index of the offending component.
    iteration : int or None
        EM iteration at which it happened, when known.
    """

    def __init__(self, component, mass=None, iteration=None):
        self.component = int(component)
        self.mass = mass
        self.iteration = iteration
        msg = f"component {self.component} is degenerate"
        if mass is not None:
            msg += f" (mass={mass:.3g})"
        if iteration is not None:
            msg += f" at iteration {iteration}"
        super().__init__(msg)

    def __reduce__(self):
        return (type(self), (self.component, self.mass, self.iteration))

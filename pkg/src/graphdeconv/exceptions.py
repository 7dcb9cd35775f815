"""Exception taxonomy shared across the package."""


class GraphDeconvError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolationError(GraphDeconvError, ValueError):
    """An input violates a structural requirement (shape, symmetry, range)."""


class DegenerateDegreeError(GraphDeconvError, ValueError):
    """A graph operation hit an isolated vertex (zero degree)."""


class InvertibilityError(GraphDeconvError, ValueError):
    """A frequency response has entries too close to zero to invert."""


class GenerationError(GraphDeconvError, RuntimeError):
    """A random generator exhausted its retry budget."""


class ParseError(GraphDeconvError, ValueError):
    """A text input could not be parsed; carries file and line context."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class DataValidationError(GraphDeconvError, ValueError):
    """Parsed data failed a semantic check (duplicate keys, bad ranges)."""

"""Exception types raised by regionest."""


class RegionEstError(ValueError):
    """Base class for all input and numerical errors in this package."""


class InvalidNoiseError(RegionEstError):
    pass


class DegenerateFieldError(RegionEstError):
    pass


class DegeneratePosteriorError(DegenerateFieldError):
    pass


class DegenerateWeightError(DegenerateFieldError):
    pass


class InvalidCostError(RegionEstError):
    pass


class InvalidLevelError(RegionEstError):
    pass


class GridMismatchError(RegionEstError):
    pass


class RoleError(RegionEstError):
    pass


class ConfigError(RegionEstError):
    """A scenario file or CLI input could not be parsed.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(message)

    def __str__(self):
        msg = super().__str__()
        if self.source is None and self.line is None:
            return msg
        where = self.source or "<scenario>"
        if self.line is not None:
            where = f"{where}:{self.line}:{self.column or 1}"
        return f"{where}: {msg}"

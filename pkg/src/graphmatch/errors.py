"""Exception hierarchy shared by every module."""


class GraphMatchError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(GraphMatchError, ValueError):
    """Two objects that must share a vertex count do not."""


class ConfigError(GraphMatchError, ValueError):
    """A model or sweep parameter is out of range.

    ``field`` holds the dotted path of the offending entry.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DegenerateModelError(GraphMatchError, ValueError):
    pass


class DomainError(GraphMatchError, ValueError):
    """An argument falls outside the region where a closed form is valid."""


class PreconditionError(GraphMatchError, ValueError):
    pass


class CapacityError(GraphMatchError, ValueError):
    """Exhaustive enumeration was requested above the configured size cap."""


class UnsupportedModelError(GraphMatchError, TypeError):
    pass

"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
report where a precondition was violated.
"""


class CritspecError(Exception):
    module = "critspec"

    def __init__(self, message, *, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class DimensionError(CritspecError, ValueError):
    pass


class DomainError(CritspecError, ValueError):
    """Box, window or energy range is incompatible with the request."""


class ResolutionError(CritspecError, ValueError):
    """Grid too coarse for the semiclassical parameter."""


class SingularTimeError(CritspecError, ValueError):
    """Evaluation at a period of the linearized flow (or a zero factor)."""


class IndefiniteGermError(CritspecError, ValueError):
    pass


class FitError(CritspecError, RuntimeError):
    pass


class PipelineError(CritspecError, RuntimeError):
    pass


class ConfigError(CritspecError, ValueError):
    module = "cli"

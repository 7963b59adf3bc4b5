"""Exception and warning types raised across the package."""


class CloakError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CloakError, ValueError):
    pass


class InterfacePointError(CloakError, ValueError):
    """Evaluation requested exactly on a material interface sphere."""


class SingularMapError(CloakError, ValueError):
    pass


class DomainError(CloakError, ValueError):
    """A special function or kernel was evaluated at a singular point."""


class UnsupportedRegionError(CloakError, ValueError):
    pass


class TruncationError(CloakError, RuntimeError):
    pass


class QuadratureError(CloakError, RuntimeError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(CloakError, RuntimeError):
    pass


class DecayError(CloakError, RuntimeError):
    pass


class IllConditionedModeWarning(UserWarning):
    pass

"""Exception types raised across the package."""


class XraySharpError(Exception):
    """Base class for all package errors."""


class InvalidArgument(XraySharpError, ValueError):
    pass


class StateError(XraySharpError):
    """Operation applied to an object in the wrong representation."""


class TypeUndetermined(XraySharpError):
    pass


class AliasingError(XraySharpError):
    pass


class AnnulusOutOfRange(XraySharpError):
    pass


class NoRootError(XraySharpError):
    pass


class InadmissibleFrequency(XraySharpError, ZeroDivisionError):
    pass


class FrameDegenerate(XraySharpError):
    pass


class SupportViolation(XraySharpError):
    pass


class GridTooCoarse(XraySharpError):
    pass

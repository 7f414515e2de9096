"""Exception hierarchy shared by every module."""


class HigmetricError(Exception):
    """Base class; the CLI maps these to a nonzero exit status."""


class ClosureExceedsCap(HigmetricError):
    pass


class InvalidPermutation(HigmetricError, ValueError):
    pass


class NotUnitary(HigmetricError, ValueError):
    pass


class AmbiguousDeduplication(HigmetricError):
    pass


class NotNormal(HigmetricError, ValueError):
    pass


class SizeMismatch(HigmetricError, ValueError):
    pass


class AxiomsNotVerified(HigmetricError):
    pass


class NotContractive(HigmetricError):
    pass


class InvalidClamp(HigmetricError, ValueError):
    pass


class TrivialGroup(HigmetricError):
    pass


class NoMatrixAttachment(HigmetricError):
    pass


class EpsilonOutOfRange(HigmetricError, ValueError):
    pass


class ScanBudgetExceeded(HigmetricError):
    pass


class ParseError(HigmetricError, ValueError):
    pass


class InvalidGroupTable(HigmetricError, ValueError):
    pass

"""Exception hierarchy for diophlab."""


class DiophlabError(Exception):
    """Base class for every error raised by the library."""


class NonMonotone(DiophlabError, ValueError):
    pass


class NonPositive(DiophlabError, ValueError):
    pass


class NonPositiveArgument(DiophlabError, ValueError):
    pass


class DimensionMismatch(DiophlabError, ValueError):
    pass


class FlavorMismatch(DiophlabError, TypeError):
    """Exact and float matrices were combined."""


class ZeroDenominatorVector(DiophlabError, ValueError):
    pass


class UnboundedEnumeration(DiophlabError):
    pass


class ParallelSubspaces(DiophlabError, ValueError):
    pass


class NotOnSubspace(DiophlabError, ValueError):
    pass


class EmptyAdmissibleSet(DiophlabError):
    pass


class OriginNotInHull(DiophlabError):
    pass


class PreconditionFailed(DiophlabError):
    def __init__(self, msg, violating=None):
        super().__init__(msg)
        self.violating = violating


class NotDisjoint(DiophlabError, ValueError):
    pass


class NoSeparator(DiophlabError):
    pass


class AnnulusViolation(DiophlabError):
    def __init__(self, msg, index=None, offending=None):
        super().__init__(msg)
        self.index = index
        self.offending = offending


class AnchorMissesWindow(DiophlabError):
    pass


class SigmaTooLarge(DiophlabError, ValueError):
    pass


class BadStructuralData(DiophlabError, ValueError):
    pass


class FewerThanTwoPoints(DiophlabError):
    pass


class ParseError(DiophlabError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(DiophlabError, ValueError):
    pass

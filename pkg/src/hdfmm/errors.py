"""Exception hierarchy shared by all hdfmm modules."""


class HdfmmError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HdfmmError, ValueError):
    """Input violates a documented precondition."""


class IncompleteDesign(ValidationError):
    pass


class IrregularGrid(ValidationError):
    pass


class DesignMismatch(ValidationError):
    pass


class InvalidKnots(ValidationError):
    pass


class RankDeficientBasis(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class NumericalError(HdfmmError, ArithmeticError):
    """A numerical routine could not produce a valid result."""


class DegenerateCovariance(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class ChainDiverged(NumericalError):
    def __init__(self, iteration: int, what: str):
        super().__init__(f"non-finite {what} at iteration {iteration}")
        self.iteration = iteration
        self.what = what

"""Exception types shared across the package."""


class SwitchGrowthError(Exception):
    """Base class for all package errors."""


class NegativeOffDiagonalError(SwitchGrowthError):
    def __init__(self, i: int, j: int, value: float):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"off-diagonal entry [{i},{j}] = {value} is negative")


class NonFiniteEntryError(SwitchGrowthError):
    pass


class NotIrreducibleError(SwitchGrowthError):
    pass


class DefectiveSpectrumError(SwitchGrowthError):
    pass


class DimensionMismatchError(SwitchGrowthError):
    pass


class OutOfRangeError(SwitchGrowthError):
    pass


class WrongVariantError(SwitchGrowthError):
    pass


class MissingRateError(SwitchGrowthError):
    """No explicit contraction rate available (some off-diagonal vanishes)."""


class ConeDomainError(SwitchGrowthError):
    """Vector too close to the cone boundary for the projective metric."""


class StepTooLargeError(SwitchGrowthError):
    pass


class NonPositiveStateError(SwitchGrowthError):
    pass


class NoConvergenceError(SwitchGrowthError):
    def __init__(self, iterations: int, residual: float):
        self.iterations, self.residual = iterations, residual
        super().__init__(f"no convergence after {iterations} iterations "
                         f"(residual {residual:.3e})")


class CFLViolationError(SwitchGrowthError):
    pass


class HorizonTooShortError(SwitchGrowthError):
    pass


class UnknownPresetError(SwitchGrowthError):
    pass


class InvalidOverrideError(SwitchGrowthError):
    pass


class ConservationViolatedError(SwitchGrowthError):
    def __init__(self, which: str, residual: float):
        self.which, self.residual = which, residual
        super().__init__(f"{which} conservation violated (residual {residual:.3e})")

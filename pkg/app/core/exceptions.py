from typing import Optional


class HarmonicError(Exception):
    pass


class DimensionError(HarmonicError, ValueError):
    pass


class SchemaError(HarmonicError, ValueError):
    pass


class SamplingError(HarmonicError, ValueError):
    pass


class ParameterError(HarmonicError, ValueError):
    pass


class SingularMatrixError(HarmonicError):
    # phase: offending sample position as a fraction of the period
    def __init__(self, message: str, phase: Optional[float] = None):
        super().__init__(message)
        self.phase = phase


class NotHurwitzError(HarmonicError):
    pass


class StabilizationError(HarmonicError):
    pass


class SpectralOverlapError(HarmonicError):
    pass


class EigenSolverError(HarmonicError):
    pass


class LmiValidationError(HarmonicError, ValueError):
    pass

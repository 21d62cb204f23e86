"""Exception hierarchy shared by ingestion, fitting, forecasting and the CLI."""

from typing import Optional


class HorizonForecastError(ValueError):
    """Root of every error raised by this package."""


class IngestionError(HorizonForecastError):
    """Input tables do not match the canonical schema."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(f"{prefix}{message}")


class MissingColumn(IngestionError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"missing required column '{column}'")


class NonPositiveDifficulty(IngestionError):
    pass


class NonBinarySuccess(IngestionError):
    pass


class DuplicateRun(IngestionError):
    pass


class UnparseableDate(IngestionError):
    pass


class DuplicateModel(IngestionError):
    def __init__(self, model_id: str, row: Optional[int] = None):
        self.model_id = model_id
        super().__init__(f"duplicate model_id '{model_id}'", row=row)


class EmptyInput(IngestionError):
    """A source parsed cleanly but holds no records."""


class InvalidDate(HorizonForecastError):
    pass


class ModelNotFound(HorizonForecastError):
    def __init__(self, model_id: str):
        self.model_id = model_id
        super().__init__(f"model '{model_id}' has no metadata")


class MissingModel(ModelNotFound):
    pass


class DomainError(HorizonForecastError):
    """An argument lies outside the domain of a function."""


class EmptySlice(DomainError):
    pass


class GrowthError(HorizonForecastError):
    pass


class OverflowGuard(GrowthError):
    pass


class InvalidKnots(GrowthError):
    pass


class LengthMismatch(GrowthError):
    pass


class NonPositiveCoefficient(GrowthError):
    pass


class NonPositiveSlope(GrowthError):
    pass


class FitError(HorizonForecastError):
    pass


class DegenerateDesign(FitError):
    pass


class DegenerateData(FitError):
    pass


class NonConvergence(FitError):
    def __init__(self, message: str, specification: Optional[str] = None):
        self.specification = specification
        super().__init__(message)


class ForecastError(HorizonForecastError):
    pass


class GridMismatch(ForecastError):
    pass


class EmptyHorizons(ForecastError):
    pass

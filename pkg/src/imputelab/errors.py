"""Exception types shared across the package."""


class ImputeLabError(Exception):
    pass


class DataError(ImputeLabError):
    pass


class ConfigError(ImputeLabError):
    pass


class DimensionMismatch(ImputeLabError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, row, column, text):
        self.row = row
        self.column = column
        self.text = text
        super().__init__(f"cannot parse {text!r} at row {row}, column {column}")


class RaggedRows(DataError):
    pass


class AllMissingColumn(DataError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"column {index} has no observed cells")


class EmptySplit(DataError):
    pass


class ColumnAlreadyMissing(DataError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"target column {index} already has missing cells")


class MaskedCellError(DataError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"cell ({row}, {column}) is missing")


class SchemaMismatch(DataError):
    pass


class MissingPrediction(DataError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"no prediction for cell ({row}, {column})")


class InvalidConfig(ConfigError):
    pass


class NonFiniteLoss(ImputeLabError):
    pass


class EmptyPopulation(ImputeLabError):
    pass


class NonFiniteObjective(ImputeLabError):
    def __init__(self, chromosome):
        self.chromosome = chromosome
        super().__init__(f"objective is not finite at {chromosome!r}")


class NotSymmetric(ImputeLabError, ValueError):
    pass


class NotPositiveDefinite(ImputeLabError):
    """Covariance failed the Cholesky pivot test.

    ``columns`` lists the variables spanning the near-null direction, which is
    the set an analyst would drop or merge to repair the fit.
    """

    def __init__(self, detail, columns=()):
        self.detail = detail
        self.columns = tuple(columns)
        msg = detail if not self.columns else f"{detail} (columns {list(self.columns)})"
        super().__init__(msg)


class ZeroVariance(ImputeLabError):
    def __init__(self, which):
        self.which = which
        super().__init__(f"{which} vector has zero variance")


class LengthMismatch(ImputeLabError, ValueError):
    pass

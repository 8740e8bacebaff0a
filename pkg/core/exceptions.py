"""
Typed failures raised by the feature-extraction library.

Each family carries the process exit code the management commands use.
"""


class ClfefaError(Exception):
    exit_code = 1


class ConfigError(ClfefaError):
    exit_code = 2


class DataError(ClfefaError):
    exit_code = 3


class NonFiniteInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class InvalidDataset(DataError):
    pass


class BadMagic(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class CountMismatch(DataError):
    pass


class RaggedRows(DataError):
    pass


class NonNumericCell(DataError):
    pass


class MissingColumn(DataError):
    pass


class SubsampleTooLarge(DataError):
    pass


class SupervisionError(ClfefaError):
    exit_code = 4


class ModeLabelMismatch(SupervisionError):
    pass


class NumericalError(ClfefaError):
    exit_code = 5


class NonFinite(NumericalError):
    pass


class NonFiniteIntermediate(NumericalError):
    pass


class InsufficientNeighbors(NumericalError):
    pass


class DegenerateRow(NumericalError):
    pass


class EigenFailure(NumericalError):
    pass


class DescentViolation(NumericalError):
    pass


class EvaluationError(ClfefaError):
    exit_code = 6


class SplitInfeasible(EvaluationError):
    pass


class EmptyTrainingSet(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass

"""Exception hierarchy shared by every module."""


class OneShotError(Exception):
    """Base class; carries an optional machine-readable payload for the CLI."""

    code = "OneShotError"
    exit_code = 4

    def __init__(self, message: str = "", **payload):
        super().__init__(message or self.code)
        self.payload = payload


class NotHermitian(OneShotError):
    code = "NotHermitian"


class NotPSD(OneShotError):
    code = "NotPSD"


class TraceOutOfRange(OneShotError):
    code = "TraceOutOfRange"


class DimMismatch(OneShotError):
    code = "DimMismatch"


class BadSubsystemIndex(OneShotError):
    code = "BadSubsystemIndex"


class BadCut(OneShotError):
    code = "BadCut"


class KrausNotTP(OneShotError):
    code = "KrausNotTP"


class BadInterval(OneShotError):
    code = "BadInterval"


class EpsilonOutOfRange(OneShotError):
    code = "EpsilonOutOfRange"


class AlphaOutOfRange(OneShotError):
    code = "AlphaOutOfRange"


class EtaOutOfRange(OneShotError):
    code = "EtaOutOfRange"


class ClassicalOnly(OneShotError):
    code = "ClassicalOnly"


class InfeasibleTarget(OneShotError):
    code = "InfeasibleTarget"


class NoFeasibleK(OneShotError):
    code = "NoFeasibleK"


class TooLarge(OneShotError):
    code = "TooLarge"


class BadSymbol(OneShotError):
    code = "BadSymbol"


class NotReachedWithinSchedule(OneShotError):
    code = "NotReachedWithinSchedule"


class BudgetViolated(OneShotError):
    code = "BudgetViolated"


class DegenerateNullspace(OneShotError):
    code = "DegenerateNullspace"


class ParseError(OneShotError):
    code = "ParseError"


class NumericFailure(OneShotError):
    """Numeric failures map to CLI exit code 3."""

    code = "NumericFailure"
    exit_code = 3


class NotConverged(NumericFailure):
    code = "NotConverged"


class Infeasible(NumericFailure):
    code = "Infeasible"

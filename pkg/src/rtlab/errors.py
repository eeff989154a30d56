"""Exception hierarchy. Each class carries the CLI exit code it maps to.

Code 1 is a generic failure and 2 is left to argparse for usage errors.
"""


class RTLabError(Exception):
    exit_code = 1


class NonFiniteInput(RTLabError, ValueError):
    exit_code = 3


class RejectionLimitExceeded(RTLabError):
    exit_code = 4


class SingularKey(RTLabError):
    exit_code = 5


class Divergence(RTLabError):
    exit_code = 6


class DegeneratePlaintexts(RTLabError):
    exit_code = 7


class NeedMoreData(RTLabError):
    exit_code = 8


class TrivialNullspace(RTLabError):
    exit_code = 9


class ZeroDifference(RTLabError):
    exit_code = 10


class UnderdeterminedAlpha(RTLabError):
    exit_code = 11


class PreconditionViolated(RTLabError, ValueError):
    exit_code = 12


class SupportMismatch(RTLabError):
    exit_code = 13


class NotInUniverse(RTLabError, KeyError):
    exit_code = 14


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (
        NonFiniteInput,
        RejectionLimitExceeded,
        SingularKey,
        Divergence,
        DegeneratePlaintexts,
        NeedMoreData,
        TrivialNullspace,
        ZeroDifference,
        UnderdeterminedAlpha,
        PreconditionViolated,
        SupportMismatch,
        NotInUniverse,
    )
}

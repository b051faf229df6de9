"""
Error hierarchy shared by the library and the CLI.
Each class carries the process exit code the CLI reports for it.
"""


class SignLabError(Exception):
    exit_code: int = 1


class UsageError(SignLabError):
    exit_code = 2


class UnsupportedFormError(UsageError):
    pass


class UnsupportedQuotientError(UsageError):
    pass


class DomainError(SignLabError, ValueError):
    exit_code = 2


class CapacityError(SignLabError):
    exit_code = 3


class InsufficientDataError(SignLabError):
    exit_code = 3

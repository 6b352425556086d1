"""Exception taxonomy shared across the package.

UsageError      caller passed incompatible or malformed data (CLI exit 1)
CheckError      an internal invariant or cross-check failed (CLI exit 2)
UnsupportedBackend   operation requires a finite-dimensional (Artinian)
                     quotient and got an infinite one (CLI exit 3)
"""


class UsageError(ValueError):
    pass


class CheckError(AssertionError):
    pass


class UnsupportedBackend(RuntimeError):
    pass

"""Exception hierarchy shared by the services, the CLI and the HTTP routers."""

from fastapi import HTTPException, status

# CLI exit codes
EXIT_OK = 0
EXIT_INVALID_CODE = 2
EXIT_BUDGET = 3
EXIT_BAD_ARGS = 4


class IndexCodeError(Exception):
    """Base class for every domain error raised by this package."""

    exit_code = EXIT_BAD_ARGS


class InvalidCodeError(IndexCodeError):
    """The encoding matrix does not define a uniquely decodable code."""

    exit_code = EXIT_INVALID_CODE


class DimensionMismatchError(IndexCodeError, ValueError):
    """Vector or matrix shapes disagree."""


class ModulusMismatchError(IndexCodeError, ValueError):
    """Operands live in different rings Z_M."""


class BudgetExceededError(IndexCodeError):
    """An enumeration would exceed its configured cap."""

    exit_code = EXIT_BUDGET

    def __init__(self, what: str, requested: int, allowed: int):
        super().__init__(f"{what}: {requested} exceeds budget {allowed}")
        self.what = what
        self.requested = requested
        self.allowed = allowed


class DimensionGuardError(BudgetExceededError):
    """Lattice dimension is above the enumeration guard."""


class RingOverflowError(IndexCodeError, OverflowError):
    """A value does not fit the int64 arrays used by vectorised paths."""


class NotBracketedError(IndexCodeError, ValueError):
    """An error-rate curve does not cross the requested target."""


class RateNotResolvedError(NotBracketedError):
    """The curve drops to zero observed errors before resolving the target rate."""


class InvalidModulusError(IndexCodeError, ValueError):
    """The modulus is below 2."""


class InvalidSubsetError(IndexCodeError, ValueError):
    """A side-information set is out of range or not a proper subset."""


class InvalidConfigError(IndexCodeError, ValueError):
    """A simulation or capacity request is malformed (no trials, negative rates...)."""


def to_http_exception(exc: IndexCodeError) -> HTTPException:
    """HTTP status for a domain error raised inside a request."""
    if isinstance(exc, InvalidCodeError):
        code = status.HTTP_422_UNPROCESSABLE_ENTITY
    elif isinstance(exc, BudgetExceededError):
        code = status.HTTP_413_REQUEST_ENTITY_TOO_LARGE
    else:
        code = status.HTTP_400_BAD_REQUEST
    return HTTPException(status_code=code, detail=str(exc))

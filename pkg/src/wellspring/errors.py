"""Exception types shared across the package."""


class WellspringError(Exception):
    """Base class for package-specific failures."""


class ContractViolation(WellspringError, ValueError):
    """Caller broke a documented precondition (bad dims, unknown ids, ...)."""


class ManifestError(WellspringError):
    """Corpus manifest missing, unparseable, or self-inconsistent."""


class SnapshotError(WellspringError):
    """Index snapshot unreadable or of an unsupported format version."""


class ConfigError(WellspringError):
    """Service configuration invalid; message names the offending key."""


class ProviderError(WellspringError):
    """A remote provider call failed.

    ``retryable`` distinguishes transport-level failures (timeouts, 5xx)
    from permanent ones (bad credentials, malformed response).
    """

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable

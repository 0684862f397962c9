"""Exception types raised across the package."""


class SqzCoolError(Exception):
    """Base class for all package errors."""


class NotConverged(SqzCoolError):
    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"iteration did not converge (residual={residual:.3e})")


class Unstable(SqzCoolError):
    def __init__(self, max_real_eigenvalue):
        self.max_real_eigenvalue = max_real_eigenvalue
        super().__init__(
            f"drift matrix is not stable (max Re eigenvalue = {max_real_eigenvalue:.3e})"
        )


class IllConditioned(SqzCoolError):
    pass


class NotEquivalentRegime(SqzCoolError):
    """Raised when chi >= |delta_a|, where no squeezed frame removes the OPO term."""


class Degenerate(SqzCoolError):
    pass


class ConfigError(SqzCoolError):
    pass


class NoStablePoint(SqzCoolError):
    pass

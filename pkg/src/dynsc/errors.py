class DynscError(Exception):
    pass


class InvalidArgument(DynscError, ValueError):
    """Bad caller input: unknown element id, illegal update, bad config."""


class OracleContractError(DynscError):
    """The oracle returned something a monotone submodular function cannot."""


class InvariantViolation(DynscError, RuntimeError):
    """Internal state disagrees with what the algorithm guarantees."""

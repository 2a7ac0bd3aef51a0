"""Exception hierarchy shared by the pipeline and the CLI exit-code mapping."""


class ContractError(ValueError):
    """Input violates a documented contract (bad file, bad parameter, unmapped account)."""


class SamFormatError(ContractError):
    """Malformed SAM or metadata file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class BalanceError(ContractError):
    """The SAM cannot be balanced with the allowed transfer cells."""


class AugmentError(ContractError):
    """A factor synthesis step cannot be applied without unbalancing the SAM."""


class CalibrationError(ContractError):
    """SAM pattern is inconsistent with the nesting structure."""


class SolverError(RuntimeError):
    """Newton iteration failed; ``report`` carries the diagnostics."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularJacobianError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


class BoundThrashingError(SolverError):
    pass


class InvariantError(AssertionError):
    """Internal consistency check failed (e.g. non-square system)."""

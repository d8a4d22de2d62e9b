class WptError(Exception):
    """Base class for errors raised by the package."""


class ParameterError(WptError, ValueError):
    """A configuration value or physical constant is outside its domain."""


class ContractError(WptError, ValueError):
    """An input violates a documented numerical precondition."""


class NumericContractError(WptError, RuntimeError):
    """A monotonicity or convergence guarantee was breached at run time."""


class InsufficientDiversityError(WptError):
    """Codebook pruning ran out of training elements before filling the codebook."""

    def __init__(self, found: int, wanted: int):
        super().__init__(f"found only {found} of {wanted} sufficiently distinct codewords")
        self.found = found
        self.wanted = wanted


class DegenerateCellError(WptError):
    """No precoder in a cell clears the distortion gap against the parent codeword."""

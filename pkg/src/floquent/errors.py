"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, NumericsError and its
subclasses -> 3. Verifier failures are ordinary results, not exceptions.
"""


class FloquentError(Exception):
    """Base class for all package errors."""


class ConfigError(FloquentError):
    """Invalid model parameters, run configuration, or command arguments."""


class NumericsError(FloquentError):
    """A numerical contract was violated (non-convergence, residuals, ranges)."""


class SymmetryViolationError(NumericsError):
    """Input matrix fails a required symmetry (Hermiticity) check."""


class UnitarityError(NumericsError):
    """Input matrix fails the unitarity check.

    Attributes
    ----------
    residual : float
        Max-entry norm of U^dag U - I.
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = float(residual)


class ContractViolationError(NumericsError):
    """A derived quantity left its guaranteed range (projector spectra etc.)."""


class TieBreakError(NumericsError):
    """A correlation eigenvalue sits exactly at 1/2 and no tie-break rule was given."""


class GapClosedError(NumericsError):
    """A reference quasienergy cut lies inside a closed spectral gap.

    Attributes
    ----------
    cut : float
        The reference quasienergy at which the gap was found closed.
    """

    def __init__(self, message, cut):
        super().__init__(message)
        self.cut = float(cut)


class ProximityWarning(UserWarning):
    """A filling-window boundary lies within tolerance of a quasienergy."""

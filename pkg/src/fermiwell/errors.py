"""Exception hierarchy shared by all fermiwell modules.

The CLI maps these onto exit codes: configuration errors exit 2,
numerical errors exit 3, analysis errors exit 4.
"""


class FermiwellError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FermiwellError):
    """Invalid user input: parameters, config files, dimension mismatches."""


class ResonanceError(ConfigurationError):
    """Requested scattering parameters sit on the confinement-induced resonance."""


class UndefinedInputError(ConfigurationError):
    """An observable was requested for inputs on which it is undefined."""


class NumericalError(FermiwellError):
    """A solver failed to converge or lost required accuracy.

    ``diagnostic`` may carry solver-specific data (residual, energy trace).
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class SamplingError(NumericalError):
    """Monte-Carlo sampling failed (rejection cap hit, collapsed norm lost)."""


class AnalysisError(FermiwellError):
    """Post-processing could not extract the requested quantity."""
